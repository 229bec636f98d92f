//! Grayscale raster container, Gaussian smoothing, and eye-based face
//! alignment onto the canonical square frame.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{AffineTransform, Point};

/// Canonical side of the aligned face raster.
pub const ALIGNED_SIZE: u32 = 96;

/// Fraction of the output side where the left eye is anchored.
pub const EYE_ANCHOR_LEFT_X: f64 = 0.30;
/// Fraction of the output side where the right eye is anchored.
pub const EYE_ANCHOR_RIGHT_X: f64 = 0.70;
/// Fraction of the output side where both eyes sit vertically.
pub const EYE_ANCHOR_Y: f64 = 0.35;

/// 8-bit single-channel image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be at least 1x1"));
        }
        if data.len() != (width as usize) * (height as usize) {
            return Err(Error::invalid(format!(
                "pixel buffer length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut data = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage { width, height, data }
    }

    pub fn constant(width: u32, height: u32, value: u8) -> Self {
        GrayImage {
            width,
            height,
            data: vec![value; (width * height) as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[(y * self.width + x) as usize]
    }

    /// Mean intensity over all pixels.
    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Bilinear sample at a sub-pixel location; 0 outside the raster.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let at = |xi: i64, yi: i64| -> f64 {
            if xi >= 0 && xi < self.width as i64 && yi >= 0 && yi < self.height as i64 {
                self.data[(yi as u32 * self.width + xi as u32) as usize] as f64
            } else {
                0.0
            }
        };
        let (x0, y0) = (x0 as i64, y0 as i64);
        at(x0, y0) * (1.0 - fx) * (1.0 - fy)
            + at(x0 + 1, y0) * fx * (1.0 - fy)
            + at(x0, y0 + 1) * (1.0 - fx) * fy
            + at(x0 + 1, y0 + 1) * fx * fy
    }
}

/// Normalized 1-D Gaussian taps of length `ksize` centred on the middle tap.
fn gaussian_taps(sigma: f64, ksize: usize) -> Vec<f64> {
    let r = (ksize / 2) as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Low-pass filter with a separable Gaussian kernel. Borders are handled by
/// edge replication; both passes run in f64 and the result is rounded once.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64, ksize: usize) -> Result<GrayImage> {
    if sigma <= 0.0 {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if ksize % 2 == 0 || ksize < 3 {
        return Err(Error::invalid(format!(
            "kernel size must be odd and at least 3, got {ksize}"
        )));
    }
    if ksize > img.width.min(img.height) as usize {
        return Err(Error::invalid(format!(
            "kernel size {ksize} exceeds image dimensions {}x{}",
            img.width, img.height
        )));
    }

    let taps = gaussian_taps(sigma, ksize);
    let r = (ksize / 2) as i64;
    let (w, h) = (img.width as i64, img.height as i64);

    // Horizontal pass.
    let mut tmp = vec![0.0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                let sx = (x + k as i64 - r).clamp(0, w - 1);
                acc += tap * img.data[(y * w + sx) as usize] as f64;
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }

    // Vertical pass, then a single round+clamp.
    let mut out = vec![0u8; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                let sy = (y + k as i64 - r).clamp(0, h - 1);
                acc += tap * tmp[(sy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }

    GrayImage::new(img.width, img.height, out)
}

/// Resample `img` through the inverse of `t` into a `out_w`×`out_h` raster.
/// Bilinear interpolation, zero fill outside the source.
pub fn warp_affine(
    img: &GrayImage,
    t: &AffineTransform,
    out_w: u32,
    out_h: u32,
) -> Result<GrayImage> {
    let inv = t.inverse()?;
    let mut data = Vec::with_capacity((out_w * out_h) as usize);
    for oy in 0..out_h {
        for ox in 0..out_w {
            let src = inv.apply(Point::new(ox as f64, oy as f64));
            let v = img.sample_bilinear(src.x, src.y);
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(out_w, out_h, data)
}

/// Rotate the face so the eyes sit on one row and scale it onto an
/// `out_size`×`out_size` raster, eyes anchored at (0.30, 0.35) and
/// (0.70, 0.35) of the side. Returns the aligned image together with the
/// forward transform so other landmarks can be mapped into the new frame.
pub fn align_face(
    img: &GrayImage,
    eye_a: Point,
    eye_b: Point,
    out_size: u32,
) -> Result<(GrayImage, AffineTransform)> {
    // Canonical ordering: the left eye is the one with smaller x.
    let (left, right) = if eye_a.x <= eye_b.x { (eye_a, eye_b) } else { (eye_b, eye_a) };
    let (dx, dy) = (right.x - left.x, right.y - left.y);
    if dx * dx + dy * dy < 1e-12 {
        return Err(Error::geometry("eye points coincide; cannot align"));
    }
    if dx <= 0.0 {
        return Err(Error::geometry(
            "eyes have equal x coordinate; no canonical left/right ordering",
        ));
    }

    let s = out_size as f64;
    let dst_left = Point::new(EYE_ANCHOR_LEFT_X * s, EYE_ANCHOR_Y * s);
    let dst_right = Point::new(EYE_ANCHOR_RIGHT_X * s, EYE_ANCHOR_Y * s);

    // Solve z ↦ a·z + t over ℂ from the two point correspondences.
    let (ur, ui) = (right.x - left.x, right.y - left.y);
    let (vr, vi) = (dst_right.x - dst_left.x, dst_right.y - dst_left.y);
    let denom = ur * ur + ui * ui;
    let ar = (vr * ur + vi * ui) / denom;
    let ai = (vi * ur - vr * ui) / denom;
    let tx = dst_left.x - (ar * left.x - ai * left.y);
    let ty = dst_left.y - (ai * left.x + ar * left.y);
    let t = AffineTransform::similarity(ar, ai, tx, ty);

    let aligned = warp_affine(img, &t, out_size, out_size)?;
    Ok((aligned, t))
}

/// Read an 8-bit grayscale image, dispatching on content: binary PGM (P5,
/// maxval 255) or 8-bit grayscale PNG. Color inputs are rejected.
pub fn read_image(path: &Path) -> Result<GrayImage> {
    let mut file = std::fs::File::open(path)?;
    let mut magic = [0u8; 2];
    file.read_exact(&mut magic)
        .map_err(|e| Error::ImageFormat(format!("{}: {e}", path.display())))?;
    drop(file);
    match &magic {
        b"P5" => read_pgm(path),
        [0x89, b'P'] => read_png(path),
        _ => Err(Error::ImageFormat(format!(
            "{}: unsupported image format (expected binary PGM or PNG)",
            path.display()
        ))),
    }
}

fn read_png(path: &Path) -> Result<GrayImage> {
    let dynimg = image::open(path)
        .map_err(|e| Error::ImageFormat(format!("{}: {e}", path.display())))?;
    match dynimg {
        image::DynamicImage::ImageLuma8(buf) => {
            GrayImage::new(buf.width(), buf.height(), buf.into_raw())
        }
        other => Err(Error::ImageFormat(format!(
            "{}: color or non-8-bit input rejected ({:?}); supply 8-bit grayscale",
            path.display(),
            other.color()
        ))),
    }
}

/// Parse a binary PGM (P5) file with maxval 255.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    let err = |msg: &str| Error::ImageFormat(format!("{}: {msg}", path.display()));

    if !bytes.starts_with(b"P5") {
        return Err(err("not a binary PGM (missing P5 magic)"));
    }
    // Header tokens: width, height, maxval; '#' starts a comment to end of line.
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        while pos < bytes.len() {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(err("truncated PGM header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad numeric field in PGM header"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(err(&format!("PGM maxval must be 255, got {maxval}")));
    }
    // Exactly one whitespace byte separates the header from pixel data.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(err("missing separator before PGM pixel data"));
    }
    pos += 1;
    let n = width * height;
    if bytes.len() < pos + n {
        return Err(err("PGM pixel data truncated"));
    }
    GrayImage::new(width as u32, height as u32, bytes[pos..pos + n].to_vec())
}

/// Write a binary PGM (P5, maxval 255) file.
pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{} {}\n255\n", img.width, img.height)?;
    f.write_all(&img.data)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense 2-D convolution with the outer-product Gaussian kernel,
    /// replicated borders. Independent of the separable implementation.
    fn dense_gaussian_oracle(img: &GrayImage, sigma: f64, ksize: usize) -> Vec<f64> {
        let taps = gaussian_taps(sigma, ksize);
        let r = (ksize / 2) as i64;
        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut out = vec![0.0; (w * h) as usize];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for ky in 0..ksize {
                    for kx in 0..ksize {
                        let sx = (x + kx as i64 - r).clamp(0, w - 1);
                        let sy = (y + ky as i64 - r).clamp(0, h - 1);
                        acc += taps[ky] * taps[kx] * img.get(sx as u32, sy as u32) as f64;
                    }
                }
                out[(y * w + x) as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn constant_image_is_fixed_point_of_smoothing() {
        let img = GrayImage::constant(16, 12, 128);
        for sigma in [0.5, 1.0, 3.0] {
            let out = gaussian_smooth(&img, sigma, 5).unwrap();
            assert_eq!(out, img);
        }
    }

    #[test]
    fn impulse_response_matches_dense_convolution() {
        let mut data = vec![0u8; 81];
        data[4 * 9 + 4] = 255;
        let img = GrayImage::new(9, 9, data).unwrap();
        let out = gaussian_smooth(&img, 1.0, 5).unwrap();
        let oracle = dense_gaussian_oracle(&img, 1.0, 5);

        // Centre pixel carries 255 × the central 2-D kernel weight.
        let taps = gaussian_taps(1.0, 5);
        let center_expected = 255.0 * taps[2] * taps[2];
        assert_eq!(out.get(4, 4), center_expected.round() as u8);

        for (i, &o) in oracle.iter().enumerate() {
            let got = out.pixels()[i] as f64;
            assert!(
                (got - o.round()).abs() < 1e-9,
                "pixel {i}: separable {got} vs dense {o}"
            );
        }
    }

    #[test]
    fn random_images_match_dense_convolution() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let img = GrayImage::from_fn(11, 13, |_, _| rng.random());
            let out = gaussian_smooth(&img, 1.3, 7).unwrap();
            let oracle = dense_gaussian_oracle(&img, 1.3, 7);
            for (i, &o) in oracle.iter().enumerate() {
                assert!((out.pixels()[i] as f64 - o).abs() <= 0.5 + 1e-9);
            }
        }
    }

    #[test]
    fn even_kernel_size_rejected() {
        let img = GrayImage::constant(8, 8, 10);
        assert!(matches!(
            gaussian_smooth(&img, 1.0, 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn non_positive_sigma_rejected() {
        let img = GrayImage::constant(8, 8, 10);
        assert!(gaussian_smooth(&img, 0.0, 5).is_err());
        assert!(gaussian_smooth(&img, -1.0, 5).is_err());
    }

    #[test]
    fn smoothing_preserves_mean_within_one_gray_level() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let img = GrayImage::from_fn(20, 20, |_, _| rng.random());
            let out = gaussian_smooth(&img, 2.0, 9).unwrap();
            assert!((img.mean() - out.mean()).abs() < 1.0);
        }
    }

    #[test]
    fn eyes_at_anchors_give_identity_like_alignment() {
        let img = GrayImage::from_fn(96, 96, |x, y| ((x * 2 + y) % 256) as u8);
        let le = Point::new(28.8, 33.6);
        let re = Point::new(67.2, 33.6);
        let (_, t) = align_face(&img, le, re, 96).unwrap();
        let ml = t.apply(le);
        let mr = t.apply(re);
        assert!((ml.y - le.y).abs() < 0.5 && (mr.y - re.y).abs() < 0.5);
        assert!((ml.x - le.x).abs() < 0.5 && (mr.x - re.x).abs() < 0.5);
    }

    #[test]
    fn alignment_levels_tilted_eyes() {
        let img = GrayImage::constant(96, 96, 50);
        let le = Point::new(30.0, 40.0);
        let re = Point::new(66.0, 48.0);
        let (out, t) = align_face(&img, le, re, 96).unwrap();
        assert_eq!((out.width(), out.height()), (96, 96));
        let ml = t.apply(le);
        let mr = t.apply(re);
        assert!((ml.y - mr.y).abs() < 1e-6, "eye rows differ: {} vs {}", ml.y, mr.y);
        assert!((mr.x - ml.x - 0.40 * 96.0).abs() < 1e-6);
    }

    #[test]
    fn coincident_eyes_rejected() {
        let img = GrayImage::constant(96, 96, 50);
        let e = Point::new(40.0, 40.0);
        assert!(matches!(
            align_face(&img, e, e, 96),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn alignment_is_rotation_covariant() {
        // Smooth test image: low-frequency sinusoid.
        let img = GrayImage::from_fn(96, 96, |x, y| {
            let v = 128.0
                + 50.0 * ((x as f64) * 0.07).sin()
                + 40.0 * ((y as f64) * 0.09).cos();
            v.round().clamp(0.0, 255.0) as u8
        });
        let le = Point::new(34.0, 42.0);
        let re = Point::new(62.0, 42.0);
        let (base, _) = align_face(&img, le, re, 96).unwrap();

        // Rotate image and eyes by the same angle about the raster centre.
        let theta: f64 = 0.2;
        let (c, s) = (theta.cos(), theta.sin());
        let centre = Point::new(47.5, 47.5);
        let rot = AffineTransform::similarity(
            c,
            s,
            centre.x - (c * centre.x - s * centre.y),
            centre.y - (s * centre.x + c * centre.y),
        );
        let rotated = warp_affine(&img, &rot, 96, 96).unwrap();
        let (turned, _) = align_face(&rotated, rot.apply(le), rot.apply(re), 96).unwrap();

        // Compare away from the zero-fill corners that rotation introduces.
        let mut diff_sum = 0.0;
        let mut n = 0.0;
        for y in 16..80 {
            for x in 16..80 {
                diff_sum += (base.get(x, y) as f64 - turned.get(x, y) as f64).abs();
                n += 1.0;
            }
        }
        assert!(diff_sum / n < 3.0, "mean abs diff {}", diff_sum / n);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let img = GrayImage::from_fn(13, 7, |x, y| (x * 17 + y * 3) as u8);
        write_pgm(&img, &path).unwrap();
        let back = read_image(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn grayscale_png_accepted_color_png_rejected() {
        let dir = tempfile::tempdir().unwrap();

        let gray_path = dir.path().join("gray.png");
        let buf = image::GrayImage::from_fn(5, 4, |x, y| image::Luma([(x + y) as u8]));
        buf.save(&gray_path).unwrap();
        let img = read_image(&gray_path).unwrap();
        assert_eq!((img.width(), img.height()), (5, 4));
        assert_eq!(img.get(3, 2), 5);

        let rgb_path = dir.path().join("rgb.png");
        let rgb = image::RgbImage::from_fn(5, 4, |x, y| image::Rgb([x as u8, y as u8, 0]));
        rgb.save(&rgb_path).unwrap();
        assert!(matches!(
            read_image(&rgb_path),
            Err(Error::ImageFormat(_))
        ));
    }

    #[test]
    fn bad_pgm_maxval_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_image(&path), Err(Error::ImageFormat(_))));
    }
}
