//! Landmark ingestion and the active facial patch layout: ten square
//! regions around the lips, cheeks, forehead, and upper nose whose centers
//! are derived from the five landmarks, with face width as the scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::raster::GrayImage;

/// Five named landmarks per face, in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkSet {
    pub left_eye: Point,
    pub right_eye: Point,
    pub nose_tip: Point,
    pub lip_left: Point,
    pub lip_right: Point,
}

impl LandmarkSet {
    pub fn new(
        left_eye: Point,
        right_eye: Point,
        nose_tip: Point,
        lip_left: Point,
        lip_right: Point,
    ) -> Result<Self> {
        let all = [left_eye, right_eye, nose_tip, lip_left, lip_right];
        if all.iter().any(|p| !p.is_finite()) {
            return Err(Error::geometry("landmark coordinates must be finite"));
        }
        if left_eye.x >= right_eye.x {
            return Err(Error::geometry(format!(
                "left eye x ({}) must be smaller than right eye x ({})",
                left_eye.x, right_eye.x
            )));
        }
        if lip_left.x >= lip_right.x {
            return Err(Error::geometry(format!(
                "left lip corner x ({}) must be smaller than right lip corner x ({})",
                lip_left.x, lip_right.x
            )));
        }
        Ok(LandmarkSet {
            left_eye,
            right_eye,
            nose_tip,
            lip_left,
            lip_right,
        })
    }

    /// Map every landmark through an affine transform, e.g. into the
    /// aligned frame. Ordering invariants are re-checked afterwards.
    pub fn transformed(&self, t: &crate::geom::AffineTransform) -> Result<LandmarkSet> {
        LandmarkSet::new(
            t.apply(self.left_eye),
            t.apply(self.right_eye),
            t.apply(self.nose_tip),
            t.apply(self.lip_left),
            t.apply(self.lip_right),
        )
    }
}

/// Parse ten comma-separated coordinates in the order
/// `lex,ley,rex,rey,nx,ny,llx,lly,lrx,lry`.
pub fn parse_landmarks(record: &str, row: Option<usize>) -> Result<LandmarkSet> {
    let fields: Vec<&str> = record.split(',').map(str::trim).collect();
    if fields.len() != 10 {
        return Err(Error::Parse {
            row,
            msg: format!("expected 10 coordinate fields, got {}", fields.len()),
        });
    }
    let mut vals = [0.0f64; 10];
    for (i, f) in fields.iter().enumerate() {
        vals[i] = f.parse().map_err(|_| Error::Parse {
            row,
            msg: format!("field {} is not numeric: {f:?}", i + 1),
        })?;
        if !vals[i].is_finite() {
            return Err(Error::Parse {
                row,
                msg: format!("field {} is not finite", i + 1),
            });
        }
    }
    LandmarkSet::new(
        Point::new(vals[0], vals[1]),
        Point::new(vals[2], vals[3]),
        Point::new(vals[4], vals[5]),
        Point::new(vals[6], vals[7]),
        Point::new(vals[8], vals[9]),
    )
}

/// Identifier of one of the ten active patches, in feature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatchId {
    LipL,
    LipR,
    BelowLip,
    CheekUL,
    CheekUR,
    CheekLL,
    CheekLR,
    ForeheadL,
    ForeheadR,
    UpperNose,
}

impl PatchId {
    pub const ALL: [PatchId; 10] = [
        PatchId::LipL,
        PatchId::LipR,
        PatchId::BelowLip,
        PatchId::CheekUL,
        PatchId::CheekUR,
        PatchId::CheekLL,
        PatchId::CheekLR,
        PatchId::ForeheadL,
        PatchId::ForeheadR,
        PatchId::UpperNose,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PatchId::LipL => "LipL",
            PatchId::LipR => "LipR",
            PatchId::BelowLip => "BelowLip",
            PatchId::CheekUL => "CheekUL",
            PatchId::CheekUR => "CheekUR",
            PatchId::CheekLL => "CheekLL",
            PatchId::CheekLR => "CheekLR",
            PatchId::ForeheadL => "ForeheadL",
            PatchId::ForeheadR => "ForeheadR",
            PatchId::UpperNose => "UpperNose",
        }
    }
}

/// Landmark a patch offset is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    LeftEye,
    RightEye,
    EyeMid,
    NoseTip,
    LipLeft,
    LipRight,
    LipMid,
    /// Midpoint of left eye and left lip corner.
    EyeLipMidLeft,
    /// Midpoint of right eye and right lip corner.
    EyeLipMidRight,
}

impl Anchor {
    fn resolve(&self, lm: &LandmarkSet) -> Point {
        match self {
            Anchor::LeftEye => lm.left_eye,
            Anchor::RightEye => lm.right_eye,
            Anchor::EyeMid => lm.left_eye.midpoint(lm.right_eye),
            Anchor::NoseTip => lm.nose_tip,
            Anchor::LipLeft => lm.lip_left,
            Anchor::LipRight => lm.lip_right,
            Anchor::LipMid => lm.lip_left.midpoint(lm.lip_right),
            Anchor::EyeLipMidLeft => lm.left_eye.midpoint(lm.lip_left),
            Anchor::EyeLipMidRight => lm.right_eye.midpoint(lm.lip_right),
        }
    }
}

/// One patch-placement rule: `center = anchor + (dx_frac, dy_frac) · W`
/// where `W` is the raster width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetRule {
    pub anchor: Anchor,
    pub dx_frac: f64,
    pub dy_frac: f64,
}

/// Placement rules for all ten patches; defaults may be overridden
/// per-patch from a JSON table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRules {
    rules: BTreeMap<PatchId, OffsetRule>,
}

impl Default for LayoutRules {
    fn default() -> Self {
        use Anchor::*;
        let table = [
            (PatchId::LipL, LipLeft, -0.08, 0.0),
            (PatchId::LipR, LipRight, 0.08, 0.0),
            (PatchId::BelowLip, LipMid, 0.0, 0.15),
            (PatchId::CheekUL, EyeLipMidLeft, 0.0, 0.0),
            (PatchId::CheekUR, EyeLipMidRight, 0.0, 0.0),
            (PatchId::CheekLL, NoseTip, -0.18, 0.05),
            (PatchId::CheekLR, NoseTip, 0.18, 0.05),
            (PatchId::ForeheadL, LeftEye, 0.10, -0.14),
            (PatchId::ForeheadR, RightEye, -0.10, -0.14),
            (PatchId::UpperNose, EyeMid, 0.0, 0.06),
        ];
        let rules = table
            .into_iter()
            .map(|(id, anchor, dx, dy)| {
                (id, OffsetRule { anchor, dx_frac: dx, dy_frac: dy })
            })
            .collect();
        LayoutRules { rules }
    }
}

impl LayoutRules {
    /// Apply overrides parsed from a JSON object keyed by patch name.
    pub fn with_overrides_json(mut self, json: &str) -> Result<Self> {
        let parsed: BTreeMap<String, OffsetRule> =
            serde_json::from_str(json).map_err(|e| Error::Parse {
                row: None,
                msg: format!("layout override JSON: {e}"),
            })?;
        for (name, rule) in parsed {
            let id = PatchId::ALL
                .iter()
                .find(|p| p.name() == name)
                .copied()
                .ok_or_else(|| Error::Parse {
                    row: None,
                    msg: format!("unknown patch id {name:?} in layout overrides"),
                })?;
            self.rules.insert(id, rule);
        }
        Ok(self)
    }

    pub fn rule(&self, id: PatchId) -> &OffsetRule {
        &self.rules[&id]
    }
}

/// One active patch: a square of `side` pixels centred on `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    pub id: PatchId,
    pub center: Point,
    pub side: u32,
    /// True when the centre was moved to keep the rectangle in-bounds.
    pub clamped: bool,
}

impl PatchSpec {
    /// Top-left corner of the pixel rectangle, as used by `extract_patch`.
    pub fn top_left(&self) -> (i64, i64) {
        let half = self.side as f64 / 2.0;
        (
            (self.center.x - half).round() as i64,
            (self.center.y - half).round() as i64,
        )
    }
}

/// The ten active patches in fixed id order.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchLayout {
    patches: Vec<PatchSpec>,
}

impl PatchLayout {
    pub fn patches(&self) -> &[PatchSpec] {
        &self.patches
    }

    pub fn get(&self, id: PatchId) -> &PatchSpec {
        &self.patches[PatchId::ALL.iter().position(|p| *p == id).unwrap()]
    }
}

/// Derive the ten patch centres from landmarks in the aligned frame.
/// Centres are clamped so the full square stays inside the raster;
/// clamping is recorded on the patch.
pub fn localize_patches(
    lm: &LandmarkSet,
    side: u32,
    rules: &LayoutRules,
    raster: u32,
) -> Result<PatchLayout> {
    if side == 0 || side % 8 != 0 {
        return Err(Error::invalid(format!(
            "patch side must be a positive multiple of 8, got {side}"
        )));
    }
    if side > raster {
        return Err(Error::invalid(format!(
            "patch side {side} exceeds raster {raster}"
        )));
    }
    let w = raster as f64;
    for (name, p) in [
        ("left_eye", lm.left_eye),
        ("right_eye", lm.right_eye),
        ("nose_tip", lm.nose_tip),
        ("lip_left", lm.lip_left),
        ("lip_right", lm.lip_right),
    ] {
        if p.x < 0.0 || p.x >= w || p.y < 0.0 || p.y >= w {
            return Err(Error::geometry(format!(
                "landmark {name} at ({}, {}) is outside the {raster}x{raster} raster",
                p.x, p.y
            )));
        }
    }

    let half = side as f64 / 2.0;
    let lo = half;
    let hi = raster as f64 - half;
    let patches = PatchId::ALL
        .iter()
        .map(|&id| {
            let rule = rules.rule(id);
            let a = rule.anchor.resolve(lm);
            let raw = Point::new(a.x + rule.dx_frac * w, a.y + rule.dy_frac * w);
            let center = Point::new(raw.x.clamp(lo, hi), raw.y.clamp(lo, hi));
            PatchSpec {
                id,
                center,
                side,
                clamped: center != raw,
            }
        })
        .collect();
    Ok(PatchLayout { patches })
}

/// Crop the square region described by `spec`; a pure copy, no resampling.
pub fn extract_patch(img: &GrayImage, spec: &PatchSpec) -> Result<GrayImage> {
    let (x0, y0) = spec.top_left();
    let side = spec.side as i64;
    if x0 < 0 || y0 < 0 || x0 + side > img.width() as i64 || y0 + side > img.height() as i64 {
        return Err(Error::geometry(format!(
            "patch {} rectangle [{x0},{y0}]+{side} exceeds image {}x{}",
            spec.id.name(),
            img.width(),
            img.height()
        )));
    }
    let out = GrayImage::from_fn(spec.side, spec.side, |x, y| {
        img.get((x0 + x as i64) as u32, (y0 + y as i64) as u32)
    });
    Ok(out)
}
