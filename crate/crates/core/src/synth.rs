//! Seeded synthetic face generator. Each expression class gets a
//! distinct oriented grating plus a distinct periodic micro-texture, so
//! shape-free appearance features can separate the classes without any
//! licensed imagery.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::landmarks::LandmarkSet;
use crate::manifest::{write_manifest, EXPRESSION_NAMES};
use crate::raster::{write_pgm, GrayImage};

pub const SYNTH_SIZE: usize = 96;

/// Grating signatures are arranged so neither descriptor family can
/// separate every class on its own. Classes 0/4 and 1/5 share an angle
/// and differ only in period: after per-patch L1 normalization their
/// orientation profiles nearly coincide, but the stripe width is obvious
/// to 3x3 binary codes. Classes 2/3 straddle the 80-degree orientation
/// bin edge (73 vs 87, margins wider than the worst-case alignment
/// rotation from +-2 px eye jitter, atan(4/36) = 6.4 degrees) and carry
/// phase-twin textures, so orientation binning separates them while
/// translation-invariant code histograms mostly cannot. Only the
/// combined vector resolves all fifteen pairs.
const GRATING_DEG: [f64; 6] = [10.0, 50.0, 73.0, 87.0, 10.0, 50.0];
const GRATING_PERIOD: [f64; 6] = [8.0, 8.0, 8.0, 8.0, 5.0, 5.0];
const GRATING_AMPLITUDE: f64 = 45.0;
const TEXTURE_AMPLITUDE: f64 = 18.0;
const NOISE_SIGMA: f64 = 8.0;
const JITTER: f64 = 2.0;

const BASE_LANDMARKS: [(f64, f64); 5] = [
    (30.0, 40.0), // left eye
    (66.0, 40.0), // right eye
    (48.0, 58.0), // nose tip
    (38.0, 72.0), // lip left
    (58.0, 72.0), // lip right
];

#[derive(Debug, Clone)]
pub struct SynthSample {
    pub image: GrayImage,
    pub landmarks: LandmarkSet,
    pub label: usize,
}

/// Six distinct period-4 binary masks in three phase-twin families:
/// (0,4) checkers, (1,5) diagonals, (2,3) horizontal stripes. Twins are
/// translations of each other, so their patch-level code histograms
/// match; the twin pairs are told apart by grating period (0/4, 1/5) or
/// orientation bin (2/3) instead.
fn texture_mask(label: usize, x: usize, y: usize) -> bool {
    match label {
        0 => ((x / 2) + (y / 2)) % 2 == 0,
        1 => (x as i64 - y as i64).rem_euclid(4) < 2,
        2 => (y / 2) % 2 == 0,
        3 => ((y + 2) / 2) % 2 == 0,
        4 => ((x + 2) / 2 + (y / 2)) % 2 == 0,
        _ => (x as i64 - y as i64 + 2).rem_euclid(4) < 2,
    }
}

fn render_face(label: usize, lm: &LandmarkSet, rng: &mut ChaCha8Rng) -> GrayImage {
    let theta = GRATING_DEG[label].to_radians();
    let (ct, st) = (theta.cos(), theta.sin());
    let period = GRATING_PERIOD[label];
    let gamma: f64 = rng.random_range(0.7..1.4);
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");

    let mut data = Vec::with_capacity(SYNTH_SIZE * SYNTH_SIZE);
    for y in 0..SYNTH_SIZE {
        for x in 0..SYNTH_SIZE {
            let (xf, yf) = (x as f64, y as f64);
            // Face disc on a darker surround keeps the frames face-like.
            let ex = (xf - 48.0) / 40.0;
            let ey = (yf - 54.0) / 46.0;
            let inside = ex * ex + ey * ey <= 1.0;
            let mut v = if inside { 128.0 } else { 70.0 };

            let phase = 2.0 * std::f64::consts::PI * (xf * ct + yf * st) / period;
            v += GRATING_AMPLITUDE * phase.sin();
            v += TEXTURE_AMPLITUDE * if texture_mask(label, x, y) { 0.5 } else { -0.5 };

            // Dark eye discs and a lip bar at the landmark positions.
            for eye in [lm.left_eye, lm.right_eye] {
                if (xf - eye.x).powi(2) + (yf - eye.y).powi(2) <= 9.0 {
                    v = 40.0;
                }
            }
            let lip_y = (lm.lip_left.y + lm.lip_right.y) / 2.0;
            if (yf - lip_y).abs() <= 1.0 && xf >= lm.lip_left.x && xf <= lm.lip_right.x {
                v = 50.0;
            }

            // Monotone per-image contrast map, then sensor noise.
            let v01 = (v / 255.0).clamp(0.0, 1.0);
            let mut out = 255.0 * v01.powf(gamma);
            out += noise.sample(rng);
            data.push(out.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(SYNTH_SIZE as u32, SYNTH_SIZE as u32, data).expect("buffer matches dimensions")
}

fn jittered_landmarks(rng: &mut ChaCha8Rng) -> LandmarkSet {
    let mut pts = [Point::new(0.0, 0.0); 5];
    for (slot, (bx, by)) in pts.iter_mut().zip(BASE_LANDMARKS) {
        let dx: f64 = rng.random_range(-JITTER..=JITTER);
        let dy: f64 = rng.random_range(-JITTER..=JITTER);
        *slot = Point::new(bx + dx, by + dy);
    }
    LandmarkSet::new(pts[0], pts[1], pts[2], pts[3], pts[4])
        .expect("jitter of 2px cannot reorder the base landmarks")
}

/// Build `per_class` samples for each of the six classes, class-major,
/// fully determined by `seed`.
pub fn synthesize_dataset(per_class: usize, seed: u64) -> Result<Vec<SynthSample>> {
    if per_class < 10 {
        return Err(Error::invalid(format!(
            "per_class must be at least 10, got {per_class}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(6 * per_class);
    for label in 0..EXPRESSION_NAMES.len() {
        for _ in 0..per_class {
            let landmarks = jittered_landmarks(&mut rng);
            let image = render_face(label, &landmarks, &mut rng);
            samples.push(SynthSample {
                image,
                landmarks,
                label,
            });
        }
    }
    Ok(samples)
}

/// Render the dataset to `out_dir` as PGM files plus a manifest CSV;
/// returns the manifest path.
pub fn generate_synthetic(out_dir: &Path, per_class: usize, seed: u64) -> Result<PathBuf> {
    let samples = synthesize_dataset(per_class, seed)?;
    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::with_capacity(samples.len());
    let mut index = 0usize;
    let mut prev_label = usize::MAX;
    for s in &samples {
        if s.label != prev_label {
            index = 0;
            prev_label = s.label;
        }
        let name = format!("{}_{index:03}.pgm", EXPRESSION_NAMES[s.label]);
        write_pgm(&s.image, &out_dir.join(&name))?;
        rows.push((name, s.label, s.landmarks.clone()));
        index += 1;
    }
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &rows)?;
    Ok(manifest_path)
}
