//! Dataset manifests: a CSV of image paths, expression labels, and the
//! five landmark coordinates, resolved relative to the manifest file.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::landmarks::LandmarkSet;

/// Class names in id order; rows and columns of every confusion matrix
/// follow this order.
pub const EXPRESSION_NAMES: [&str; 6] = [
    "anger",
    "fear",
    "disgust",
    "happiness",
    "sadness",
    "surprise",
];

pub fn label_from_name(name: &str) -> Result<usize> {
    let needle = name.trim().to_ascii_lowercase();
    EXPRESSION_NAMES
        .iter()
        .position(|&n| n == needle)
        .ok_or_else(|| {
            Error::invalid(format!(
                "unknown expression label {name:?}; expected one of {EXPRESSION_NAMES:?}"
            ))
        })
}

pub fn name_from_label(label: usize) -> Result<&'static str> {
    EXPRESSION_NAMES
        .get(label)
        .copied()
        .ok_or_else(|| Error::invalid(format!("class id {label} out of range")))
}

const HEADER: [&str; 12] = [
    "image", "label", "lex", "ley", "rex", "rey", "nx", "ny", "llx", "lly", "lrx", "lry",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Resolved (manifest-relative paths joined onto the base directory).
    pub image_path: PathBuf,
    pub label: usize,
    pub landmarks: LandmarkSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    base_dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parse and validate a manifest CSV. Image paths must exist; labels
/// must come from the six-class set; landmark ordering is checked per
/// row. Row numbers in errors are 1-based data rows.
pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            row: None,
            msg: format!("cannot open manifest {}: {e}", path.display()),
        })?;

    let headers = reader.headers().map_err(|e| Error::Parse {
        row: None,
        msg: format!("manifest header: {e}"),
    })?;
    let got: Vec<&str> = headers.iter().collect();
    if got != HEADER {
        return Err(Error::Parse {
            row: None,
            msg: format!("manifest header must be {HEADER:?}, got {got:?}"),
        });
    }

    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row: Some(row),
            msg: e.to_string(),
        })?;
        if record.len() != HEADER.len() {
            return Err(Error::Parse {
                row: Some(row),
                msg: format!("expected {} fields, got {}", HEADER.len(), record.len()),
            });
        }
        let rel = &record[0];
        if rel.is_empty() {
            return Err(Error::Parse {
                row: Some(row),
                msg: "empty image path".into(),
            });
        }
        let image_path = base_dir.join(rel);
        if !image_path.is_file() {
            return Err(Error::Parse {
                row: Some(row),
                msg: format!("image {} does not exist", image_path.display()),
            });
        }
        let label = label_from_name(&record[1]).map_err(|e| Error::Parse {
            row: Some(row),
            msg: e.to_string(),
        })?;
        let mut coords = [0.0f64; 10];
        for (k, slot) in coords.iter_mut().enumerate() {
            let field = &record[k + 2];
            *slot = field.parse().map_err(|_| Error::Parse {
                row: Some(row),
                msg: format!("{} is not numeric: {field:?}", HEADER[k + 2]),
            })?;
        }
        let landmarks = LandmarkSet::new(
            Point::new(coords[0], coords[1]),
            Point::new(coords[2], coords[3]),
            Point::new(coords[4], coords[5]),
            Point::new(coords[6], coords[7]),
            Point::new(coords[8], coords[9]),
        )
        .map_err(|e| e.with_context(&format!("manifest row {row}")))?;
        entries.push(ManifestEntry {
            image_path,
            label,
            landmarks,
        });
    }
    if entries.is_empty() {
        return Err(Error::Parse {
            row: None,
            msg: "manifest has no data rows".into(),
        });
    }
    Ok(DatasetManifest { base_dir, entries })
}

/// Write a manifest whose image paths are relative to its directory.
pub fn write_manifest(
    path: &Path,
    rows: &[(String, usize, LandmarkSet)],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&HEADER.join(","));
    out.push('\n');
    for (rel, label, lm) in rows {
        let name = name_from_label(*label)?;
        out.push_str(&format!(
            "{rel},{name},{},{},{},{},{},{},{},{},{},{}\n",
            lm.left_eye.x,
            lm.left_eye.y,
            lm.right_eye.x,
            lm.right_eye.y,
            lm.nose_tip.x,
            lm.nose_tip.y,
            lm.lip_left.x,
            lm.lip_left.y,
            lm.lip_right.x,
            lm.lip_right.y,
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
