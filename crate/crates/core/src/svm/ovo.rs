//! One-against-one multiclass composition: one binary machine per
//! unordered class pair, majority vote with a two-stage tie-break.

use super::kernel::KernelSpec;
use super::smo::{decision, train_binary, BinarySvm};
use crate::error::{Error, Result};

/// All C·(C−1)/2 pair classifiers, in lexicographic pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct OvoEnsemble {
    n_classes: usize,
    svms: Vec<BinarySvm>,
}

impl OvoEnsemble {
    pub fn from_parts(n_classes: usize, svms: Vec<BinarySvm>) -> Result<Self> {
        let expect: Vec<(usize, usize)> = pair_order(n_classes);
        let got: Vec<(usize, usize)> = svms.iter().map(|s| s.pair).collect();
        if got != expect {
            return Err(Error::Model(format!(
                "ensemble pairs {got:?} do not cover {n_classes} classes in order"
            )));
        }
        Ok(OvoEnsemble { n_classes, svms })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn members(&self) -> &[BinarySvm] {
        &self.svms
    }

    pub fn dim(&self) -> usize {
        self.svms.first().map_or(0, BinarySvm::dim)
    }
}

/// Unordered pairs (a, b) with a < b, lexicographic.
pub fn pair_order(n_classes: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n_classes * (n_classes - 1) / 2);
    for a in 0..n_classes {
        for b in a + 1..n_classes {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Train one binary machine per class pair, each on only that pair's
/// samples. The smaller class id takes the +1 side.
pub fn train_ovo(
    x: &[Vec<f64>],
    labels: &[usize],
    spec: &KernelSpec,
    c_reg: f64,
    tol: f64,
) -> Result<OvoEnsemble> {
    if x.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} samples but {} labels",
            x.len(),
            labels.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let n_classes = labels.iter().max().unwrap() + 1;
    if n_classes < 2 {
        return Err(Error::invalid("one-against-one needs at least 2 classes"));
    }
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    for (class, &k) in counts.iter().enumerate() {
        if k < 2 {
            return Err(Error::invalid(format!(
                "class {class} has {k} samples; at least 2 are required"
            )));
        }
    }

    let mut svms = Vec::new();
    for (a, b) in pair_order(n_classes) {
        let mut px = Vec::with_capacity(counts[a] + counts[b]);
        let mut py = Vec::with_capacity(counts[a] + counts[b]);
        for (xi, &l) in x.iter().zip(labels) {
            if l == a {
                px.push(xi.clone());
                py.push(1);
            } else if l == b {
                px.push(xi.clone());
                py.push(-1);
            }
        }
        let mut svm = train_binary(&px, &py, spec, c_reg, tol)
            .map_err(|e| e.with_context(&format!("pair ({a}, {b})")))?;
        svm.pair = (a, b);
        svms.push(svm);
    }
    OvoEnsemble::from_parts(n_classes, svms)
}

/// Majority vote across all pair machines. A non-negative decision votes
/// for the smaller class id of the pair. Vote ties go to the class with
/// the largest sum of |decision| over its pairs, then to the smallest id.
pub fn predict_ovo(e: &OvoEnsemble, x: &[f64]) -> Result<(usize, Vec<u32>)> {
    let mut votes = vec![0u32; e.n_classes];
    let mut strength = vec![0.0f64; e.n_classes];
    for svm in &e.svms {
        let f = decision(svm, x)?;
        let (a, b) = svm.pair;
        let winner = if f >= 0.0 { a } else { b };
        votes[winner] += 1;
        strength[a] += f.abs();
        strength[b] += f.abs();
    }
    let mut best = 0usize;
    for c in 1..e.n_classes {
        let better = votes[c] > votes[best]
            || (votes[c] == votes[best] && strength[c] > strength[best]);
        if better {
            best = c;
        }
    }
    Ok((best, votes))
}
