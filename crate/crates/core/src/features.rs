//! Per-patch descriptor strategies and the layout bookkeeping for the
//! concatenated feature vector.
//!
//! Descriptor families are trait objects selected by name, so the
//! pipeline can run PHOG-only, LBP-only, or both from a runtime flag
//! without branching at every call site. Within a patch the PHOG block
//! always precedes the LBP block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::PatchId;
use crate::lbp;
use crate::phog;
use crate::raster::GrayImage;

/// Descriptor parameters shared by every patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// LBP histogram bins, one of {256, 128, 64, 32, 16}.
    pub lbp_bins: usize,
    /// PHOG orientation bins.
    pub phog_bins: usize,
    /// PHOG pyramid levels.
    pub phog_levels: u32,
    /// Active descriptor families, in concatenation order.
    pub families: Vec<String>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            lbp_bins: lbp::DEFAULT_BINS,
            phog_bins: phog::DEFAULT_ORIENT_BINS,
            phog_levels: phog::DEFAULT_LEVELS,
            families: vec!["phog".into(), "lbp".into()],
        }
    }
}

/// Map a CLI-style selector to the family list: `phog`, `lbp`, or `both`.
pub fn parse_families(selector: &str) -> Result<Vec<String>> {
    match selector {
        "phog" => Ok(vec!["phog".into()]),
        "lbp" => Ok(vec!["lbp".into()]),
        "both" => Ok(vec!["phog".into(), "lbp".into()]),
        other => Err(Error::invalid(format!(
            "unknown feature selector {other:?}; expected phog, lbp, or both"
        ))),
    }
}

/// One descriptor family computed on a square patch.
pub trait PatchDescriptor: Send + Sync {
    /// Registry key; also labels the slice in the feature layout.
    fn name(&self) -> &'static str;

    /// Output length for a patch of the given side.
    fn len(&self, side: u32) -> usize;

    fn describe(&self, patch: &GrayImage) -> Result<Vec<f64>>;
}

/// Shape family: pyramid histogram of oriented gradients.
struct PhogFamily {
    n_bins: usize,
    levels: u32,
}

impl PatchDescriptor for PhogFamily {
    fn name(&self) -> &'static str {
        "phog"
    }

    fn len(&self, _side: u32) -> usize {
        phog::phog_len(self.n_bins, self.levels)
    }

    fn describe(&self, patch: &GrayImage) -> Result<Vec<f64>> {
        Ok(phog::phog_descriptor(patch, self.n_bins, self.levels)?
            .values()
            .to_vec())
    }
}

/// Appearance family: LBP histogram counts. Raw counts, not normalized;
/// the z-score step downstream puts families on a common scale.
struct LbpFamily {
    n_bins: usize,
}

impl PatchDescriptor for LbpFamily {
    fn name(&self) -> &'static str {
        "lbp"
    }

    fn len(&self, _side: u32) -> usize {
        self.n_bins
    }

    fn describe(&self, patch: &GrayImage) -> Result<Vec<f64>> {
        let limg = lbp::lbp_image(patch)?;
        let hist = lbp::lbp_histogram(&limg, self.n_bins)?;
        Ok(hist.bins().iter().map(|&c| c as f64).collect())
    }
}

/// Construct one descriptor family by registry name.
pub fn make_descriptor(name: &str, cfg: &FeatureConfig) -> Result<Box<dyn PatchDescriptor>> {
    match name {
        "phog" => Ok(Box::new(PhogFamily {
            n_bins: cfg.phog_bins,
            levels: cfg.phog_levels,
        })),
        "lbp" => {
            if !lbp::SUPPORTED_BINS.contains(&cfg.lbp_bins) {
                return Err(Error::invalid(format!(
                    "lbp_bins must be one of {:?}, got {}",
                    lbp::SUPPORTED_BINS,
                    cfg.lbp_bins
                )));
            }
            Ok(Box::new(LbpFamily { n_bins: cfg.lbp_bins }))
        }
        other => Err(Error::invalid(format!(
            "unknown descriptor family {other:?}; known: phog, lbp"
        ))),
    }
}

/// The configured families, in concatenation order.
pub fn descriptor_stack(cfg: &FeatureConfig) -> Result<Vec<Box<dyn PatchDescriptor>>> {
    if cfg.families.is_empty() {
        return Err(Error::invalid("at least one descriptor family is required"));
    }
    cfg.families
        .iter()
        .map(|name| make_descriptor(name, cfg))
        .collect()
}

/// Location of one (patch, family) block in the flat feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSlice {
    pub patch: PatchId,
    pub family: String,
    pub start: usize,
    pub len: usize,
}

/// Slice table for the concatenated vector: all families of patch 0,
/// then all families of patch 1, and so on. Slices tile the vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    slices: Vec<FeatureSlice>,
    total_len: usize,
}

impl FeatureLayout {
    pub fn new(cfg: &FeatureConfig, side: u32) -> Result<FeatureLayout> {
        let stack = descriptor_stack(cfg)?;
        let mut slices = Vec::with_capacity(PatchId::ALL.len() * stack.len());
        let mut start = 0usize;
        for patch in PatchId::ALL {
            for family in &stack {
                let len = family.len(side);
                slices.push(FeatureSlice {
                    patch,
                    family: family.name().to_string(),
                    start,
                    len,
                });
                start += len;
            }
        }
        Ok(FeatureLayout {
            slices,
            total_len: start,
        })
    }

    pub fn total_len(&self) -> usize {
        self.total_len
    }

    pub fn slices(&self) -> &[FeatureSlice] {
        &self.slices
    }

    pub fn find(&self, patch: PatchId, family: &str) -> Option<&FeatureSlice> {
        self.slices
            .iter()
            .find(|s| s.patch == patch && s.family == family)
    }
}

/// One sample's concatenated features plus the layout that indexes them.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridFeature {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

impl HybridFeature {
    pub fn slice(&self, patch: PatchId, family: &str) -> Option<&[f64]> {
        self.layout
            .find(patch, family)
            .map(|s| &self.values[s.start..s.start + s.len])
    }
}

/// Run the descriptor stack over the extracted patches, in patch order.
/// `patches` must follow `PatchId::ALL` order, as produced by
/// `localize_patches`.
pub fn describe_patches(
    patches: &[(PatchId, GrayImage)],
    cfg: &FeatureConfig,
    side: u32,
) -> Result<HybridFeature> {
    if patches.len() != PatchId::ALL.len() {
        return Err(Error::invalid(format!(
            "expected {} patches, got {}",
            PatchId::ALL.len(),
            patches.len()
        )));
    }
    let stack = descriptor_stack(cfg)?;
    let layout = FeatureLayout::new(cfg, side)?;
    let mut values = Vec::with_capacity(layout.total_len());
    for (expected, (id, patch)) in PatchId::ALL.iter().zip(patches) {
        if expected != id {
            return Err(Error::invalid(format!(
                "patches out of order: expected {}, got {}",
                expected.name(),
                id.name()
            )));
        }
        for family in &stack {
            let block = family.describe(patch)?;
            debug_assert_eq!(block.len(), family.len(side));
            values.extend(block);
        }
    }
    Ok(HybridFeature { values, layout })
}
