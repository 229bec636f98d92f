//! Model persistence: an 8-byte magic, a JSON header describing shapes
//! and configuration, then length-prefixed little-endian f64 arrays in
//! a fixed order. Loading validates every length before any state is
//! built, so a corrupted file can never yield a half-initialized model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{PipelineConfig, TrainedModel};
use crate::reduce::{LdaModel, PcaModel, Projection, Scaler};
use crate::svm::{BinarySvm, OvoEnsemble};

pub const MODEL_MAGIC: &[u8; 8] = b"FACEXPR1";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    version: u32,
    config: PipelineConfig,
    class_names: Vec<String>,
    feature_dim: usize,
    pca_dim: usize,
    lda_dim: usize,
    pairs: Vec<(usize, usize)>,
    sv_counts: Vec<usize>,
}

fn push_array(out: &mut Vec<u8>, values: &[f64]) {
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn model_to_bytes(model: &TrainedModel) -> Result<Vec<u8>> {
    let kernel = model.config.kernel.clone().ok_or_else(|| {
        Error::Model("trained model must carry a resolved kernel".into())
    })?;
    let header = ModelHeader {
        version: MODEL_VERSION,
        config: model.config.clone(),
        class_names: model.class_names.clone(),
        feature_dim: model.projection.in_dim(),
        pca_dim: model.projection.pca.out_dim(),
        lda_dim: model.projection.lda.out_dim(),
        pairs: model.ensemble.members().iter().map(|m| m.pair).collect(),
        sv_counts: model
            .ensemble
            .members()
            .iter()
            .map(|m| m.n_support())
            .collect(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| Error::Model(format!("cannot encode model header: {e}")))?;

    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);

    push_array(&mut out, model.projection.scaler.mean());
    push_array(&mut out, model.projection.scaler.stddev());
    push_array(&mut out, &model.projection.pca.mean());
    push_array(&mut out, &model.projection.pca.basis_column_major());
    push_array(&mut out, &model.projection.lda.basis_column_major());
    for svm in model.ensemble.members() {
        if svm.kernel != kernel {
            return Err(Error::Model(
                "ensemble members must share the model kernel".into(),
            ));
        }
        push_array(&mut out, &svm.coefficients);
        push_array(&mut out, &[svm.bias]);
        let mut flat = Vec::with_capacity(svm.n_support() * model.projection.out_dim());
        for sv in &svm.support_vectors {
            flat.extend_from_slice(sv);
        }
        push_array(&mut out, &flat);
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Model(format!(
                "model file truncated: need {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn read_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn read_array(&mut self, expect: usize, what: &str) -> Result<Vec<f64>> {
        let count = u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize;
        if count != expect {
            return Err(Error::Model(format!(
                "{what}: expected {expect} values, file records {count}"
            )));
        }
        let raw = self.take(count * 8)?;
        let mut values = Vec::with_capacity(count);
        for chunk in raw.chunks_exact(8) {
            values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        Ok(values)
    }

    fn exhausted(&self) -> bool {
        self.pos == self.buf.len()
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<TrainedModel> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let magic = cur.take(MODEL_MAGIC.len())?;
    if magic != MODEL_MAGIC {
        return Err(Error::Model("not a model file (bad magic)".into()));
    }
    let header_len = cur.read_u32()? as usize;
    let header_bytes = cur.take(header_len)?;
    let header: ModelHeader = serde_json::from_slice(header_bytes)
        .map_err(|e| Error::Model(format!("model header is not valid JSON: {e}")))?;
    if header.version != MODEL_VERSION {
        return Err(Error::Model(format!(
            "unsupported model version {} (expected {MODEL_VERSION})",
            header.version
        )));
    }
    let kernel = header
        .config
        .kernel
        .clone()
        .ok_or_else(|| Error::Model("model header lacks a resolved kernel".into()))?;
    let n_classes = header.class_names.len();
    if header.pairs.len() != header.sv_counts.len() {
        return Err(Error::Model(
            "pair list and support-vector counts disagree".into(),
        ));
    }
    let (d, p, q) = (header.feature_dim, header.pca_dim, header.lda_dim);

    let scaler_mean = cur.read_array(d, "scaler mean")?;
    let scaler_std = cur.read_array(d, "scaler stddev")?;
    let pca_mean = cur.read_array(d, "projection mean")?;
    let pca_basis = cur.read_array(d * p, "variance basis")?;
    let lda_basis = cur.read_array(p * q, "discriminant basis")?;

    let mut svms = Vec::with_capacity(header.pairs.len());
    for (k, (&pair, &m)) in header.pairs.iter().zip(&header.sv_counts).enumerate() {
        let what = format!("machine {k}");
        let coefficients = cur.read_array(m, &format!("{what} coefficients"))?;
        let bias = cur.read_array(1, &format!("{what} bias"))?[0];
        let flat = cur.read_array(m * q, &format!("{what} support vectors"))?;
        let support_vectors = flat.chunks(q).map(<[f64]>::to_vec).collect();
        svms.push(BinarySvm {
            pair,
            kernel: kernel.clone(),
            support_vectors,
            coefficients,
            bias,
        });
    }
    if !cur.exhausted() {
        return Err(Error::Model(format!(
            "{} trailing bytes after model payload",
            bytes.len() - cur.pos
        )));
    }

    let projection = Projection {
        scaler: Scaler::from_parts(scaler_mean, scaler_std)
            .map_err(|e| Error::Model(format!("scaler: {e}")))?,
        pca: PcaModel::from_parts(pca_mean, pca_basis, p)
            .map_err(|e| Error::Model(format!("variance basis: {e}")))?,
        lda: LdaModel::from_parts(lda_basis, p, q)
            .map_err(|e| Error::Model(format!("discriminant basis: {e}")))?,
    };
    let ensemble = OvoEnsemble::from_parts(n_classes, svms)?;
    Ok(TrainedModel {
        config: header.config,
        class_names: header.class_names,
        projection,
        ensemble,
    })
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let bytes = model_to_bytes(model)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Model(format!("cannot read model {}: {e}", path.display())))?;
    model_from_bytes(&bytes)
}
