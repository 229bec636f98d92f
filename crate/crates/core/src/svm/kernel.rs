//! Kernel functions as named strategies. `KernelSpec` is the serializable
//! description; `build` turns it into a callable trait object so solver
//! and prediction code stay kernel-agnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Mercer kernel over reduced feature vectors.
pub trait Kernel: Send + Sync {
    fn name(&self) -> &'static str;

    /// `u` and `v` must have equal length; checked at API boundaries,
    /// not per evaluation.
    fn eval(&self, u: &[f64], v: &[f64]) -> f64;
}

struct Linear;

impl Kernel for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, v)
    }
}

struct Polynomial {
    degree: u32,
    coef0: f64,
}

impl Kernel for Polynomial {
    fn name(&self) -> &'static str {
        "poly"
    }

    fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        (dot(u, v) + self.coef0).powi(self.degree as i32)
    }
}

struct Rbf {
    gamma: f64,
}

impl Kernel for Rbf {
    fn name(&self) -> &'static str {
        "rbf"
    }

    fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        (-self.gamma * d2).exp()
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Serializable kernel description. Parameters exist only for the kinds
/// that use them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Poly { degree: u32, coef0: f64 },
    Rbf { gamma: f64 },
}

pub const DEFAULT_DEGREE: u32 = 3;
pub const DEFAULT_COEF0: f64 = 1.0;

impl KernelSpec {
    /// Registry lookup by name. `polynomial` is accepted as an alias for
    /// `poly`. Parameters irrelevant to the kind are ignored.
    pub fn from_name(name: &str, gamma: f64, degree: u32, coef0: f64) -> Result<KernelSpec> {
        match name {
            "linear" => Ok(KernelSpec::Linear),
            "poly" | "polynomial" => {
                if degree < 1 {
                    return Err(Error::invalid("polynomial degree must be ≥ 1"));
                }
                Ok(KernelSpec::Poly { degree, coef0 })
            }
            "rbf" => {
                if !(gamma > 0.0) {
                    return Err(Error::invalid(format!(
                        "rbf gamma must be positive, got {gamma}"
                    )));
                }
                Ok(KernelSpec::Rbf { gamma })
            }
            other => Err(Error::invalid(format!(
                "unknown kernel {other:?}; known: linear, poly, rbf"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Poly { .. } => "poly",
            KernelSpec::Rbf { .. } => "rbf",
        }
    }

    pub fn build(&self) -> Box<dyn Kernel> {
        match *self {
            KernelSpec::Linear => Box::new(Linear),
            KernelSpec::Poly { degree, coef0 } => Box::new(Polynomial { degree, coef0 }),
            KernelSpec::Rbf { gamma } => Box::new(Rbf { gamma }),
        }
    }
}

/// Checked single evaluation.
pub fn kernel_eval(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "kernel arguments differ in length: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    Ok(spec.build().eval(u, v))
}
