//! Local binary patterns: the 8-neighbor code field and its histogram,
//! with optional rebinning to coarser histograms.

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Neighbor offsets for code bits n = 0..7: East first, counter-clockwise.
/// y grows downward, so "north" is y − 1.
const NEIGHBORS: [(i32, i32); 8] = [
    (1, 0),   // E
    (1, -1),  // NE
    (0, -1),  // N
    (-1, -1), // NW
    (-1, 0),  // W
    (-1, 1),  // SW
    (0, 1),   // S
    (1, 1),   // SE
];

/// LBP codes of the interior pixels of a source image, row-major.
/// Two pixels smaller than the source in each dimension: border pixels
/// have no full 8-neighborhood and are dropped, not padded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpImage {
    width: u32,
    height: u32,
    codes: Vec<u8>,
}

impl LbpImage {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        assert!(x < self.width && y < self.height);
        self.codes[(y * self.width + x) as usize]
    }

    /// View the code field as a gray image, e.g. for debug dumps.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::new(self.width, self.height, self.codes.clone()).unwrap()
    }
}

/// Histogram of LBP codes. `n_bins` divides 256; bin `j` holds the count
/// of codes in `[j·w, (j+1)·w − 1]` where `w = 256 / n_bins`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpHistogram {
    bins: Vec<u64>,
}

impl LbpHistogram {
    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }
}

pub const SUPPORTED_BINS: [usize; 5] = [256, 128, 64, 32, 16];
pub const DEFAULT_BINS: usize = 64;

/// Code for one 3×3 neighborhood, row-major
/// `[nw, n, ne, w, c, e, sw, s, se]`.
pub fn lbp_code(neighborhood: &[u8; 9]) -> u8 {
    let center = neighborhood[4];
    // Row-major index of each bit's neighbor: E=5, NE=2, N=1, NW=0, W=3,
    // SW=6, S=7, SE=8.
    const IDX: [usize; 8] = [5, 2, 1, 0, 3, 6, 7, 8];
    let mut code = 0u8;
    for (n, &i) in IDX.iter().enumerate() {
        if neighborhood[i] >= center {
            code |= 1 << n;
        }
    }
    code
}

/// Apply `lbp_code` at every interior pixel.
pub fn lbp_image(img: &GrayImage) -> Result<LbpImage> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::invalid(format!(
            "LBP needs at least a 3x3 image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let width = img.width() - 2;
    let height = img.height() - 2;
    let mut codes = Vec::with_capacity((width * height) as usize);
    for y in 1..img.height() - 1 {
        for x in 1..img.width() - 1 {
            let center = img.get(x, y);
            let mut code = 0u8;
            for (n, (dx, dy)) in NEIGHBORS.iter().enumerate() {
                let v = img.get((x as i32 + dx) as u32, (y as i32 + dy) as u32);
                if v >= center {
                    code |= 1 << n;
                }
            }
            codes.push(code);
        }
    }
    Ok(LbpImage { width, height, codes })
}

/// Count codes into `n_bins` equal-width bins.
pub fn lbp_histogram(limg: &LbpImage, n_bins: usize) -> Result<LbpHistogram> {
    if !SUPPORTED_BINS.contains(&n_bins) {
        return Err(Error::invalid(format!(
            "n_bins must be one of {SUPPORTED_BINS:?}, got {n_bins}"
        )));
    }
    let binwidth = 256 / n_bins;
    let mut bins = vec![0u64; n_bins];
    for &code in &limg.codes {
        bins[code as usize / binwidth] += 1;
    }
    Ok(LbpHistogram { bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Published worked example: thresholding this neighborhood against
    /// its center gives sign pattern 11100100 (bits 7..0), value 228.
    #[test]
    fn worked_example_code_is_228() {
        // center 90; only N, SW, S, SE are ≥ center (bits 2, 5, 6, 7)
        let nb = [10, 95, 88, 89, 90, 60, 91, 99, 212];
        assert_eq!(lbp_code(&nb), 228);
        assert_eq!(228, 4 + 32 + 64 + 128);
    }

    #[test]
    fn flat_neighborhood_codes_255() {
        assert_eq!(lbp_code(&[7; 9]), 255);
    }

    #[test]
    fn dominant_center_codes_0() {
        let nb = [1, 2, 3, 4, 200, 5, 6, 7, 8];
        assert_eq!(lbp_code(&nb), 0);
    }

    #[test]
    fn single_neighbor_sets_its_own_bit() {
        // Raising exactly one neighbor above the center sets one bit;
        // the map from neighbor position to bit is the E-first
        // counter-clockwise convention.
        let positions = [(5, 0), (2, 1), (1, 2), (0, 3), (3, 4), (6, 5), (7, 6), (8, 7)];
        for (idx, bit) in positions {
            let mut nb = [10u8; 9];
            nb[4] = 50;
            nb[idx] = 200;
            assert_eq!(lbp_code(&nb), 1 << bit, "neighborhood index {idx}");
        }
    }

    #[test]
    fn image_dims_shrink_by_two() {
        let img = GrayImage::constant(32, 20, 5);
        let limg = lbp_image(&img).unwrap();
        assert_eq!((limg.width(), limg.height()), (30, 18));
        assert!(limg.codes().iter().all(|&c| c == 255));
    }

    #[test]
    fn small_images_rejected() {
        assert!(lbp_image(&GrayImage::constant(2, 5, 0)).is_err());
        assert!(lbp_image(&GrayImage::constant(5, 2, 0)).is_err());
        assert!(lbp_image(&GrayImage::constant(3, 3, 0)).is_ok());
    }

    /// Oracle: recompute every code by looping over explicit offsets,
    /// independent of the production traversal.
    #[test]
    fn random_image_matches_per_pixel_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let img = GrayImage::from_fn(8, 8, |_, _| rng.random());
            let limg = lbp_image(&img).unwrap();
            for y in 1..7u32 {
                for x in 1..7u32 {
                    let c = img.get(x, y);
                    let offsets = [
                        (1i32, 0i32),
                        (1, -1),
                        (0, -1),
                        (-1, -1),
                        (-1, 0),
                        (-1, 1),
                        (0, 1),
                        (1, 1),
                    ];
                    let mut expect = 0u32;
                    for (n, (dx, dy)) in offsets.iter().enumerate() {
                        let v = img.get((x as i32 + dx) as u32, (y as i32 + dy) as u32);
                        if v >= c {
                            expect += 1 << n;
                        }
                    }
                    assert_eq!(limg.get(x - 1, y - 1) as u32, expect, "pixel ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn monotone_intensity_maps_leave_codes_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // Codes depend only on ≥ comparisons, so any strictly increasing
        // lookup table must leave them untouched. Strictness matters: a
        // flat stretch would merge distinct levels and turn a strict
        // inequality into a tie. Source values stay below 120 so the LUT
        // has headroom to stretch without saturating.
        let img = GrayImage::from_fn(16, 16, |_, _| rng.random_range(0..120));
        let base = lbp_image(&img).unwrap();

        let mut lut = [0u8; 256];
        let mut raises = 0u32;
        for i in 1..256usize {
            if i < 120 && rng.random_bool(0.5) {
                raises += 1;
            }
            lut[i] = (i as u32 + raises).min(255) as u8;
        }
        assert!(lut[..120].windows(2).all(|w| w[0] < w[1]));

        let mapped = GrayImage::from_fn(16, 16, |x, y| lut[img.get(x, y) as usize]);
        assert_eq!(lbp_image(&mapped).unwrap(), base);
    }

    #[test]
    fn histogram_mass_equals_coded_pixels() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let img = GrayImage::from_fn(12, 9, |_, _| rng.random());
        let limg = lbp_image(&img).unwrap();
        for n_bins in SUPPORTED_BINS {
            let h = lbp_histogram(&limg, n_bins).unwrap();
            assert_eq!(h.total(), (10 * 7) as u64);
            assert_eq!(h.n_bins(), n_bins);
        }
    }

    #[test]
    fn constant_image_mass_lands_in_last_bin() {
        let limg = lbp_image(&GrayImage::constant(10, 10, 128)).unwrap();
        let h = lbp_histogram(&limg, 256).unwrap();
        assert_eq!(h.bins()[255], 64);
        assert_eq!(h.total(), 64);
        let h64 = lbp_histogram(&limg, 64).unwrap();
        assert_eq!(h64.bins()[63], 64);
    }

    #[test]
    fn coarse_bins_aggregate_fine_bins() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let img = GrayImage::from_fn(20, 20, |_, _| rng.random());
        let limg = lbp_image(&img).unwrap();
        let fine = lbp_histogram(&limg, 256).unwrap();
        for n_bins in [128usize, 64, 32, 16] {
            let coarse = lbp_histogram(&limg, n_bins).unwrap();
            let group = 256 / n_bins;
            for j in 0..n_bins {
                let summed: u64 = fine.bins()[j * group..(j + 1) * group].iter().sum();
                assert_eq!(coarse.bins()[j], summed, "bin {j} at {n_bins} bins");
            }
        }
    }

    #[test]
    fn unsupported_bin_counts_rejected() {
        let limg = lbp_image(&GrayImage::constant(5, 5, 0)).unwrap();
        for bad in [0usize, 1, 10, 100, 512] {
            assert!(lbp_histogram(&limg, bad).is_err(), "{bad}");
        }
    }
}
