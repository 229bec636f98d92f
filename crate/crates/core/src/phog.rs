//! Pyramid histogram of oriented gradients: per-pixel central-difference
//! gradients, magnitude-weighted orientation histograms over a cell
//! pyramid, and a single L1 normalization over the concatenated vector.

use crate::error::{Error, Result};
use crate::raster::GrayImage;

pub const DEFAULT_ORIENT_BINS: usize = 9;
pub const DEFAULT_LEVELS: u32 = 3;

/// Per-pixel gradients with unsigned orientation in degrees, `[0, 180)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: u32,
    height: u32,
    gx: Vec<f64>,
    gy: Vec<f64>,
    magnitude: Vec<f64>,
    orientation: Vec<f64>,
}

impl GradientField {
    /// Build a field from raw gradient components; magnitude and folded
    /// orientation are derived. Intended for synthetic fields in tests as
    /// much as for `compute_gradients`.
    pub fn from_parts(width: u32, height: u32, gx: Vec<f64>, gy: Vec<f64>) -> Result<Self> {
        let n = (width as usize) * (height as usize);
        if width == 0 || height == 0 || gx.len() != n || gy.len() != n {
            return Err(Error::invalid(format!(
                "gradient field {width}x{height} needs {n} samples per component, got {} and {}",
                gx.len(),
                gy.len()
            )));
        }
        let mut magnitude = Vec::with_capacity(n);
        let mut orientation = Vec::with_capacity(n);
        for i in 0..n {
            magnitude.push(gx[i].hypot(gy[i]));
            orientation.push(fold_orientation(gx[i], gy[i]));
        }
        Ok(GradientField {
            width,
            height,
            gx,
            gy,
            magnitude,
            orientation,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn magnitude(&self, x: u32, y: u32) -> f64 {
        self.magnitude[(y * self.width + x) as usize]
    }

    pub fn orientation(&self, x: u32, y: u32) -> f64 {
        self.orientation[(y * self.width + x) as usize]
    }
}

/// Map a gradient direction to unsigned degrees in `[0, 180)`.
fn fold_orientation(gx: f64, gy: f64) -> f64 {
    let mut deg = gy.atan2(gx).to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if deg >= 180.0 {
        deg -= 180.0;
    }
    deg
}

/// Central differences over raw intensities, border neighbors replicated.
pub fn compute_gradients(patch: &GrayImage) -> Result<GradientField> {
    let (w, h) = (patch.width(), patch.height());
    if w < 3 || h < 3 {
        return Err(Error::invalid(format!(
            "gradients need at least a 3x3 patch, got {w}x{h}"
        )));
    }
    let mut gx = Vec::with_capacity((w * h) as usize);
    let mut gy = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let xl = patch.get(x.saturating_sub(1), y) as f64;
            let xr = patch.get((x + 1).min(w - 1), y) as f64;
            let yu = patch.get(x, y.saturating_sub(1)) as f64;
            let yd = patch.get(x, (y + 1).min(h - 1)) as f64;
            gx.push((xr - xl) / 2.0);
            gy.push((yd - yu) / 2.0);
        }
    }
    GradientField::from_parts(w, h, gx, gy)
}

/// Magnitude-weighted orientation histogram of one rectangle of the field.
/// Hard assignment: bin `b` covers `[b·(180/n_bins), (b+1)·(180/n_bins))`.
pub fn cell_histogram(
    field: &GradientField,
    x0: u32,
    y0: u32,
    cell_w: u32,
    cell_h: u32,
    n_bins: usize,
) -> Result<Vec<f64>> {
    if n_bins < 2 {
        return Err(Error::invalid(format!(
            "orientation histogram needs at least 2 bins, got {n_bins}"
        )));
    }
    if x0 + cell_w > field.width || y0 + cell_h > field.height || cell_w == 0 || cell_h == 0 {
        return Err(Error::invalid(format!(
            "cell [{x0},{y0}]+{cell_w}x{cell_h} exceeds field {}x{}",
            field.width, field.height
        )));
    }
    let binwidth = 180.0 / n_bins as f64;
    let mut bins = vec![0.0f64; n_bins];
    for y in y0..y0 + cell_h {
        for x in x0..x0 + cell_w {
            let i = (y * field.width + x) as usize;
            // Orientation is folded to [0,180), so the modulo only acts
            // when a value of exactly 180 sneaks in; it wraps to bin 0.
            let b = (field.orientation[i] / binwidth) as usize % n_bins;
            bins[b] += field.magnitude[i];
        }
    }
    Ok(bins)
}

/// The concatenated pyramid descriptor. Nonzero descriptors sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PhogDescriptor {
    values: Vec<f64>,
    n_bins: usize,
    levels: u32,
}

impl PhogDescriptor {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// The `n_bins · 4^level` slots belonging to one pyramid level.
    pub fn level_slice(&self, level: u32) -> &[f64] {
        assert!(level < self.levels);
        let start: usize = (0..level).map(|l| self.n_bins << (2 * l)).sum();
        let len = self.n_bins << (2 * level);
        &self.values[start..start + len]
    }
}

/// Descriptor length for a configuration: `n_bins × (4^levels − 1) / 3`.
pub fn phog_len(n_bins: usize, levels: u32) -> usize {
    n_bins * ((4usize.pow(levels) - 1) / 3)
}

/// Assemble the pyramid from an existing gradient field: for level `l`,
/// split the field into 2^l × 2^l equal cells, histogram each in
/// row-major order, concatenate coarse to fine, then L1-normalize the
/// whole vector. An all-zero vector is left as is.
pub fn phog_from_field(
    field: &GradientField,
    n_bins: usize,
    levels: u32,
) -> Result<PhogDescriptor> {
    if levels == 0 {
        return Err(Error::invalid("pyramid needs at least one level"));
    }
    let grid = 1u32 << (levels - 1);
    if field.width % grid != 0 || field.height % grid != 0 {
        return Err(Error::invalid(format!(
            "field {}x{} is not divisible into a {grid}x{grid} grid",
            field.width, field.height
        )));
    }
    let mut values = Vec::with_capacity(phog_len(n_bins, levels));
    for l in 0..levels {
        let cells = 1u32 << l;
        let cw = field.width / cells;
        let ch = field.height / cells;
        for cy in 0..cells {
            for cx in 0..cells {
                values.extend(cell_histogram(field, cx * cw, cy * ch, cw, ch, n_bins)?);
            }
        }
    }
    let sum: f64 = values.iter().sum();
    if sum > 0.0 {
        for v in &mut values {
            *v /= sum;
        }
    }
    Ok(PhogDescriptor {
        values,
        n_bins,
        levels,
    })
}

/// Gradients plus pyramid assembly in one step.
pub fn phog_descriptor(patch: &GrayImage, n_bins: usize, levels: u32) -> Result<PhogDescriptor> {
    phog_from_field(&compute_gradients(patch)?, n_bins, levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn horizontal_ramp_gradients() {
        let img = GrayImage::from_fn(8, 8, |x, _| (x * 10) as u8);
        let f = compute_gradients(&img).unwrap();
        for y in 0..8 {
            for x in 1..7 {
                assert_abs_diff_eq!(f.magnitude(x, y), 10.0, epsilon = 1e-12);
                assert_abs_diff_eq!(f.orientation(x, y), 0.0, epsilon = 1e-12);
            }
            // Replicated borders halve the difference.
            assert_abs_diff_eq!(f.magnitude(0, y), 5.0, epsilon = 1e-12);
            assert_abs_diff_eq!(f.magnitude(7, y), 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn vertical_ramp_is_90_degrees() {
        let img = GrayImage::from_fn(8, 8, |_, y| (y * 7) as u8);
        let f = compute_gradients(&img).unwrap();
        for y in 1..7 {
            for x in 0..8 {
                assert_abs_diff_eq!(f.orientation(x, y), 90.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_patch_has_zero_magnitude() {
        let f = compute_gradients(&GrayImage::constant(8, 8, 77)).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(f.magnitude(x, y), 0.0);
            }
        }
    }

    #[test]
    fn tiny_patch_rejected() {
        assert!(compute_gradients(&GrayImage::constant(2, 8, 0)).is_err());
        assert!(compute_gradients(&GrayImage::constant(8, 2, 0)).is_err());
    }

    #[test]
    fn orientation_folds_into_half_circle() {
        // Opposite gradients share an unsigned orientation; exactly 180°
        // wraps to 0.
        assert_abs_diff_eq!(fold_orientation(1.0, 0.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fold_orientation(-1.0, 0.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fold_orientation(0.0, 1.0), 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fold_orientation(0.0, -1.0), 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fold_orientation(1.0, 1.0), 45.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fold_orientation(-1.0, -1.0), 45.0, epsilon = 1e-12);
    }

    #[test]
    fn cell_histogram_bins_by_orientation() {
        // Uniform field: zero gradients, zero histogram.
        let z = GradientField::from_parts(4, 4, vec![0.0; 16], vec![0.0; 16]).unwrap();
        assert!(cell_histogram(&z, 0, 0, 4, 4, 9).unwrap().iter().all(|&v| v == 0.0));

        // Horizontal ramp: everything in bin 0.
        let h = GradientField::from_parts(4, 4, vec![2.0; 16], vec![0.0; 16]).unwrap();
        let bins = cell_histogram(&h, 0, 0, 4, 4, 9).unwrap();
        assert_abs_diff_eq!(bins[0], 32.0, epsilon = 1e-12);
        assert!(bins[1..].iter().all(|&v| v == 0.0));

        // 45° field: bin 2 covers [40°, 60°).
        let d = GradientField::from_parts(4, 4, vec![1.0; 16], vec![1.0; 16]).unwrap();
        let bins = cell_histogram(&d, 0, 0, 4, 4, 9).unwrap();
        assert!(bins[2] > 0.0);
        assert_abs_diff_eq!(bins[2], 16.0 * 2.0f64.sqrt(), epsilon = 1e-9);
        for (i, &v) in bins.iter().enumerate() {
            if i != 2 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn descriptor_length_law() {
        assert_eq!(phog_len(9, 3), 189);
        assert_eq!(phog_len(9, 1), 9);
        assert_eq!(phog_len(6, 2), 30);
        for (n_bins, levels) in [(9usize, 3u32), (5, 2), (12, 4)] {
            let side = 1u32 << (levels - 1);
            let img = GrayImage::from_fn(side * 8, side * 8, |x, y| ((x * 3 + y) % 256) as u8);
            let d = phog_descriptor(&img, n_bins, levels).unwrap();
            assert_eq!(d.values().len(), phog_len(n_bins, levels));
        }
    }

    #[test]
    fn constant_patch_descriptor_is_zero() {
        let d = phog_descriptor(&GrayImage::constant(32, 32, 100), 9, 3).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nonzero_descriptor_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let img = GrayImage::from_fn(32, 32, |_, _| rng.random());
        let d = phog_descriptor(&img, 9, 3).unwrap();
        assert!(d.values().iter().all(|&v| v >= 0.0));
        let total: f64 = d.values().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn ramp_patch_splits_mass_evenly_across_levels() {
        let img = GrayImage::from_fn(32, 32, |x, _| (x * 4) as u8);
        let d = phog_descriptor(&img, 9, 3).unwrap();
        // Every cell of every level sees only 0° orientations, so only
        // bin-0 slots are populated, and each level partitions the same
        // pixels: a third of the mass per level.
        for l in 0..3 {
            let s = d.level_slice(l);
            let mass: f64 = s.iter().sum();
            assert_abs_diff_eq!(mass, 1.0 / 3.0, epsilon = 1e-9);
            for (i, &v) in s.iter().enumerate() {
                if i % 9 != 0 {
                    assert_eq!(v, 0.0, "level {l} slot {i}");
                }
            }
        }
    }

    #[test]
    fn contrast_scaling_cancels_in_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let n = 32 * 32;
        let gx: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let gy: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let alpha = 3.7;
        let base = GradientField::from_parts(32, 32, gx.clone(), gy.clone()).unwrap();
        let scaled = GradientField::from_parts(
            32,
            32,
            gx.iter().map(|v| v * alpha).collect(),
            gy.iter().map(|v| v * alpha).collect(),
        )
        .unwrap();
        let d0 = phog_from_field(&base, 9, 3).unwrap();
        let d1 = phog_from_field(&scaled, 9, 3).unwrap();
        for (a, b) in d0.values().iter().zip(d1.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn transposing_swaps_bin_0_into_the_90_degree_bin() {
        let img = GrayImage::from_fn(32, 32, |x, _| (x * 4) as u8);
        let transposed = GrayImage::from_fn(32, 32, |x, y| img.get(y, x));
        let d = phog_descriptor(&img, 9, 3).unwrap();
        let dt = phog_descriptor(&transposed, 9, 3).unwrap();
        let bin_90 = (90.0 / (180.0 / 9.0)) as usize;
        assert_eq!(bin_90, 4);
        for l in 0..3u32 {
            let cells = 1usize << l;
            let s = d.level_slice(l);
            let st = dt.level_slice(l);
            for cy in 0..cells {
                for cx in 0..cells {
                    let c = (cy * cells + cx) * 9;
                    // Transposed layout: the cell at (cx,cy) maps to (cy,cx).
                    let ct = (cx * cells + cy) * 9;
                    assert_abs_diff_eq!(s[c], st[ct + bin_90], epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn indivisible_patch_rejected() {
        let img = GrayImage::constant(30, 30, 0);
        assert!(phog_descriptor(&img, 9, 3).is_err());
        assert!(phog_descriptor(&img, 9, 2).is_ok());
        assert!(phog_descriptor(&GrayImage::constant(32, 32, 0), 9, 0).is_err());
    }
}
