//! End-to-end wiring: image + landmarks in, expression label out.
//!
//! Training path: per-image hybrid features, a z-score scaler, a
//! variance-then-discriminant projection, and a one-against-one SVM
//! ensemble over the reduced vectors. Prediction replays the identical
//! feature path using the configuration embedded in the model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{cross_validate, CvOutcome};
use crate::features::{describe_patches, FeatureConfig, HybridFeature};
use crate::landmarks::{extract_patch, localize_patches, LandmarkSet, LayoutRules};
use crate::manifest::{name_from_label, DatasetManifest};
use crate::raster::{align_face, gaussian_smooth, read_image, GrayImage, ALIGNED_SIZE};
use crate::reduce::{fit_projection, FeatureMatrix, Projection};
use crate::svm::{predict_ovo, train_ovo, KernelSpec, OvoEnsemble, DEFAULT_C, DEFAULT_TOL};

pub const DEFAULT_PATCH_SIDE: u32 = 32;
pub const DEFAULT_SMOOTH_SIGMA: f64 = 1.0;
pub const DEFAULT_SMOOTH_KSIZE: usize = 5;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub aligned_size: u32,
    pub patch_side: u32,
    pub smooth_sigma: f64,
    pub smooth_ksize: usize,
    pub features: FeatureConfig,
    pub layout: LayoutRules,
    /// `None` selects an RBF kernel whose gamma is set to 1/q once the
    /// reduced dimension q is known at training time.
    pub kernel: Option<KernelSpec>,
    pub c: f64,
    pub tol: f64,
    /// Fold shuffling and synthesis seed; training itself is
    /// deterministic regardless.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            aligned_size: ALIGNED_SIZE,
            patch_side: DEFAULT_PATCH_SIDE,
            smooth_sigma: DEFAULT_SMOOTH_SIGMA,
            smooth_ksize: DEFAULT_SMOOTH_KSIZE,
            features: FeatureConfig::default(),
            layout: LayoutRules::default(),
            kernel: None,
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    /// Configuration with the kernel resolved to a concrete spec.
    pub config: PipelineConfig,
    pub class_names: Vec<String>,
    pub projection: Projection,
    pub ensemble: OvoEnsemble,
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        self.ensemble.n_classes()
    }

    pub fn feature_len(&self) -> usize {
        self.projection.in_dim()
    }
}

/// Smooth, align on the eye anchors, map the landmarks into the aligned
/// frame, cut the ten patches, and describe each one.
pub fn extract_hybrid(
    image: &GrayImage,
    landmarks: &LandmarkSet,
    config: &PipelineConfig,
) -> Result<HybridFeature> {
    let smoothed = gaussian_smooth(image, config.smooth_sigma, config.smooth_ksize)?;
    let (aligned, transform) = align_face(
        &smoothed,
        landmarks.left_eye,
        landmarks.right_eye,
        config.aligned_size,
    )?;
    let mapped = landmarks.transformed(&transform)?;
    let layout = localize_patches(&mapped, config.patch_side, &config.layout, config.aligned_size)?;
    let mut patches = Vec::with_capacity(layout.patches().len());
    for spec in layout.patches() {
        patches.push((spec.id, extract_patch(&aligned, spec)?));
    }
    describe_patches(&patches, &config.features, config.patch_side)
}

/// Hybrid features and labels for every manifest row; errors carry the
/// offending image path.
pub fn manifest_features(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut rows = Vec::with_capacity(manifest.len());
    let mut labels = Vec::with_capacity(manifest.len());
    for entry in manifest.entries() {
        let ctx = format!("image {}", entry.image_path.display());
        let image = read_image(&entry.image_path).map_err(|e| e.with_context(&ctx))?;
        let feat =
            extract_hybrid(&image, &entry.landmarks, config).map_err(|e| e.with_context(&ctx))?;
        rows.push(feat.values.to_vec());
        labels.push(entry.label);
    }
    Ok((rows, labels))
}

fn resolve_kernel(config: &PipelineConfig, reduced_dim: usize) -> KernelSpec {
    config.kernel.clone().unwrap_or(KernelSpec::Rbf {
        gamma: 1.0 / reduced_dim as f64,
    })
}

/// Fit scaler + projection + ensemble on already extracted feature rows.
pub fn train_from_features(
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    config: &PipelineConfig,
) -> Result<TrainedModel> {
    let matrix = FeatureMatrix::new(rows, labels.clone())?;
    let projection = fit_projection(&matrix)?;
    let reduced = projection.project_matrix(&matrix)?;
    let reduced_rows: Vec<Vec<f64>> = (0..reduced.n_samples()).map(|i| reduced.row(i)).collect();
    let kernel = resolve_kernel(config, projection.out_dim());
    let ensemble = train_ovo(&reduced_rows, &labels, &kernel, config.c, config.tol)?;
    let mut class_names = Vec::with_capacity(ensemble.n_classes());
    for id in 0..ensemble.n_classes() {
        class_names.push(name_from_label(id)?.to_string());
    }
    let mut config = config.clone();
    config.kernel = Some(kernel);
    Ok(TrainedModel {
        config,
        class_names,
        projection,
        ensemble,
    })
}

pub fn train(manifest: &DatasetManifest, config: &PipelineConfig) -> Result<TrainedModel> {
    let (rows, labels) = manifest_features(manifest, config)?;
    train_from_features(rows, labels, config)
}

/// Predicted class id plus the per-class vote counts.
pub fn predict(
    model: &TrainedModel,
    image: &GrayImage,
    landmarks: &LandmarkSet,
) -> Result<(usize, Vec<u32>)> {
    let feat = extract_hybrid(image, landmarks, &model.config)?;
    if feat.values.len() != model.projection.in_dim() {
        return Err(Error::Model(format!(
            "model expects {} features, image produced {}",
            model.projection.in_dim(),
            feat.values.len()
        )));
    }
    let reduced = model.projection.project(&feat.values)?;
    predict_ovo(&model.ensemble, &reduced)
}

pub fn predict_path(
    model: &TrainedModel,
    image_path: &Path,
    landmarks: &LandmarkSet,
) -> Result<(usize, Vec<u32>)> {
    let ctx = format!("image {}", image_path.display());
    let image = read_image(image_path).map_err(|e| e.with_context(&ctx))?;
    predict(model, &image, landmarks).map_err(|e| e.with_context(&ctx))
}

/// Stratified k-fold cross-validation over pre-extracted rows. All
/// fitting (scaler, projection, ensemble) happens inside each fold.
pub fn cross_validate_features(
    rows: &[Vec<f64>],
    labels: &[usize],
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<CvOutcome> {
    cross_validate(labels, k, seed, |train_idx, test_idx| {
        let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| rows[i].clone()).collect();
        let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
        let matrix = FeatureMatrix::new(train_rows, train_labels.clone())?;
        let projection = fit_projection(&matrix)?;
        let reduced = projection.project_matrix(&matrix)?;
        let reduced_rows: Vec<Vec<f64>> =
            (0..reduced.n_samples()).map(|i| reduced.row(i)).collect();
        let kernel = resolve_kernel(config, projection.out_dim());
        let ensemble = train_ovo(&reduced_rows, &train_labels, &kernel, config.c, config.tol)?;
        let mut preds = Vec::with_capacity(test_idx.len());
        for &i in test_idx {
            let z = projection.project(&rows[i])?;
            let (label, _votes) = predict_ovo(&ensemble, &z)?;
            preds.push(label);
        }
        Ok(preds)
    })
}

pub fn cross_validate_manifest(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<CvOutcome> {
    let (rows, labels) = manifest_features(manifest, config)?;
    cross_validate_features(&rows, &labels, config, k, seed)
}
