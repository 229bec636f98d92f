//! Support-vector classification: kernels, the SMO trainer for binary
//! machines, and the one-against-one multiclass ensemble.

mod kernel;
mod ovo;
mod smo;

pub use kernel::{kernel_eval, Kernel, KernelSpec, DEFAULT_COEF0, DEFAULT_DEGREE};
pub use ovo::{pair_order, predict_ovo, train_ovo, OvoEnsemble};
pub use smo::{decision, train_binary, train_binary_with_budget, BinarySvm};

/// Default soft-margin penalty.
pub const DEFAULT_C: f64 = 1.0;
/// Default KKT stopping tolerance.
pub const DEFAULT_TOL: f64 = 1e-3;
