//! Facial-expression recognition from a handful of landmarks.
//!
//! The pipeline aligns each face on its eye positions, cuts ten fixed
//! patches around the mouth, cheeks, forehead, and nose, and describes
//! every patch with an orientation-histogram pyramid plus a local
//! binary-pattern histogram. The concatenated vector is z-scored,
//! compressed by a variance basis, sharpened by a discriminant basis,
//! and classified by a one-against-one ensemble of kernel SVMs.
//!
//! Entry points:
//! - [`pipeline::train`] / [`pipeline::predict`] for the full loop,
//! - [`pipeline::cross_validate_manifest`] for stratified k-fold scores,
//! - [`model::save_model`] / [`model::load_model`] for persistence,
//! - [`synth::generate_synthetic`] for a seeded, licence-free dataset.

pub mod error;
pub mod eval;
pub mod features;
pub mod geom;
pub mod landmarks;
pub mod lbp;
pub mod manifest;
pub mod model;
pub mod phog;
pub mod pipeline;
pub mod raster;
pub mod reduce;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
pub use manifest::{read_manifest, DatasetManifest, EXPRESSION_NAMES};
pub use model::{load_model, save_model};
pub use pipeline::{predict, train, PipelineConfig, TrainedModel};
