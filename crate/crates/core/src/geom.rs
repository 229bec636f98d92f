//! 2-D points and affine maps shared by alignment and patch layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sub-pixel point in image coordinates (x right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    pub fn distance(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A 2×3 affine map `p' = A·p + t`, stored row-major as
/// `[a00, a01, tx, a10, a11, ty]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub m: [f64; 6],
}

impl AffineTransform {
    pub fn identity() -> Self {
        AffineTransform {
            m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        AffineTransform {
            m: [1.0, 0.0, tx, 0.0, 1.0, ty],
        }
    }

    /// Similarity transform `z ↦ a·z + t` over the complex plane:
    /// rotation+scale `a = (ar, ai)`, translation `t = (tx, ty)`.
    pub fn similarity(ar: f64, ai: f64, tx: f64, ty: f64) -> Self {
        AffineTransform {
            m: [ar, -ai, tx, ai, ar, ty],
        }
    }

    pub fn determinant(&self) -> f64 {
        self.m[0] * self.m[4] - self.m[1] * self.m[3]
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.m[0] * p.x + self.m[1] * p.y + self.m[2],
            self.m[3] * p.x + self.m[4] * p.y + self.m[5],
        )
    }

    /// Inverse map; errors when the linear part is singular.
    pub fn inverse(&self) -> Result<AffineTransform> {
        let det = self.determinant();
        if det.abs() < 1e-12 {
            return Err(Error::geometry(format!(
                "affine transform is singular (det = {det:.3e})"
            )));
        }
        let [a, b, tx, c, d, ty] = self.m;
        let ia = d / det;
        let ib = -b / det;
        let ic = -c / det;
        let id = a / det;
        Ok(AffineTransform {
            m: [ia, ib, -(ia * tx + ib * ty), ic, id, -(ic * tx + id * ty)],
        })
    }
}
