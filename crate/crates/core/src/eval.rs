//! Stratified k-fold evaluation, confusion matrices, and the average
//! recognition rate (unweighted mean of per-class diagonal percentages).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Disjoint index sets covering a dataset, balanced per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    folds: Vec<Vec<usize>>,
    seed: u64,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold(&self, i: usize) -> &[usize] {
        &self.folds[i]
    }

    /// All indices not in fold `i`, ascending.
    pub fn complement(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Shuffle each class with the seeded generator and deal round-robin.
/// Class ids are processed in ascending order so the plan depends only
/// on (labels, k, seed).
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if labels.is_empty() {
        return Err(Error::invalid("no samples to fold"));
    }
    let n_classes = labels.iter().max().unwrap() + 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let offenders: Vec<String> = members
        .iter()
        .enumerate()
        .filter(|(_, m)| m.len() < k)
        .map(|(c, m)| format!("class {c} has {} samples", m.len()))
        .collect();
    if !offenders.is_empty() {
        return Err(Error::Stratification(format!(
            "every class needs at least {k} samples: {}",
            offenders.join("; ")
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for class in members.iter_mut() {
        class.shuffle(&mut rng);
        for (pos, &idx) in class.iter().enumerate() {
            folds[pos % k].push(idx);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { folds, seed })
}

/// Row = true class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if c == 0 || counts.iter().any(|r| r.len() != c) {
            return Err(Error::invalid("confusion matrix must be square"));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn record(&mut self, true_class: usize, predicted: usize) {
        self.counts[true_class][predicted] += 1;
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..self.n_classes()).map(|r| self.row_total(r)).sum()
    }

    /// Add another matrix's counts into this one (fold pooling).
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes() != self.n_classes() {
            return Err(Error::invalid("cannot merge matrices of different sizes"));
        }
        for r in 0..self.counts.len() {
            for c in 0..self.counts.len() {
                self.counts[r][c] += other.counts[r][c];
            }
        }
        Ok(())
    }

    /// Percentage view: 100·count/row_total per row. Rows without
    /// samples come out all-zero; `row_total` distinguishes them.
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&v| {
                        if total == 0 {
                            0.0
                        } else {
                            100.0 * v as f64 / total as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Count predictions into a C×C matrix; C is inferred from the labels.
pub fn confusion_matrix(true_labels: &[usize], predicted: &[usize]) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "{} true labels but {} predictions",
            true_labels.len(),
            predicted.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::invalid("no samples to tabulate"));
    }
    let c = true_labels
        .iter()
        .chain(predicted)
        .max()
        .copied()
        .unwrap()
        + 1;
    let mut m = ConfusionMatrix::zeros(c);
    for (&t, &p) in true_labels.iter().zip(predicted) {
        m.record(t, p);
    }
    Ok(m)
}

/// Unweighted mean of the diagonal row-percentages, in percent.
pub fn average_recognition_rate(m: &ConfusionMatrix) -> Result<f64> {
    let c = m.n_classes();
    let pct = m.row_percentages();
    let mut sum = 0.0;
    for r in 0..c {
        if m.row_total(r) == 0 {
            return Err(Error::invalid(format!(
                "class {r} has no samples; its rate is undefined"
            )));
        }
        sum += pct[r][r];
    }
    Ok(sum / c as f64)
}

/// Cross-validation results: one matrix per fold plus the pooled counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub per_fold: Vec<ConfusionMatrix>,
    pub pooled: ConfusionMatrix,
    /// Average recognition rate of the pooled matrix.
    pub pooled_rate: f64,
    /// Average recognition rate per fold, by fold index.
    pub fold_rates: Vec<f64>,
}

impl CvOutcome {
    /// Unweighted mean of the per-fold rates, the alternative pooling.
    pub fn mean_fold_rate(&self) -> f64 {
        self.fold_rates.iter().sum::<f64>() / self.fold_rates.len() as f64
    }
}

/// Generic fold harness: `run_fold(train_indices, test_indices)` must fit
/// on the training rows only and return one predicted class per test
/// index, in order. The harness owns the fold plan, bookkeeping, and
/// pooling; errors are annotated with the fold number.
pub fn cross_validate<F>(labels: &[usize], k: usize, seed: u64, mut run_fold: F) -> Result<CvOutcome>
where
    F: FnMut(&[usize], &[usize]) -> Result<Vec<usize>>,
{
    let plan = stratified_folds(labels, k, seed)?;
    let n_classes = labels.iter().max().unwrap() + 1;
    let mut per_fold = Vec::with_capacity(k);
    let mut pooled = ConfusionMatrix::zeros(n_classes);
    let mut fold_rates = Vec::with_capacity(k);
    for f in 0..k {
        let test = plan.fold(f);
        let train = plan.complement(f);
        let preds = run_fold(&train, test).map_err(|e| e.with_context(&format!("fold {f}")))?;
        if preds.len() != test.len() {
            return Err(Error::invalid(format!(
                "fold {f}: {} predictions for {} test samples",
                preds.len(),
                test.len()
            )));
        }
        let mut m = ConfusionMatrix::zeros(n_classes);
        for (&idx, &p) in test.iter().zip(&preds) {
            if p >= n_classes {
                return Err(Error::invalid(format!(
                    "fold {f}: predicted class {p} out of range"
                )));
            }
            m.record(labels[idx], p);
        }
        fold_rates.push(average_recognition_rate(&m).map_err(|e| {
            e.with_context(&format!("fold {f}"))
        })?);
        pooled.merge(&m)?;
        per_fold.push(m);
    }
    let pooled_rate = average_recognition_rate(&pooled)?;
    Ok(CvOutcome {
        per_fold,
        pooled,
        pooled_rate,
        fold_rates,
    })
}

/// Aligned plain-text table of row percentages, one row per true class.
pub fn render_text(m: &ConfusionMatrix, class_names: &[&str]) -> Result<String> {
    if class_names.len() != m.n_classes() {
        return Err(Error::invalid(format!(
            "{} class names for {} classes",
            class_names.len(),
            m.n_classes()
        )));
    }
    let width = class_names
        .iter()
        .map(|n| n.len())
        .max()
        .unwrap_or(0)
        .max(9);
    let pct = m.row_percentages();
    let mut out = String::new();
    out.push_str(&format!("{:width$}", "", width = width + 2));
    for name in class_names {
        out.push_str(&format!("{name:>w$}", w = width + 2));
    }
    out.push('\n');
    for (r, name) in class_names.iter().enumerate() {
        out.push_str(&format!("{name:<w$}", w = width + 2));
        for c in 0..m.n_classes() {
            out.push_str(&format!("{:>w$.2}", pct[r][c], w = width + 2));
        }
        out.push('\n');
    }
    if let Ok(rate) = average_recognition_rate(m) {
        out.push_str(&format!("average recognition rate: {rate:.2}%\n"));
    }
    Ok(out)
}

/// CSV of raw counts: header row of predicted-class names, then one line
/// per true class.
pub fn render_csv_counts(m: &ConfusionMatrix, class_names: &[&str]) -> Result<String> {
    if class_names.len() != m.n_classes() {
        return Err(Error::invalid("class name count mismatch"));
    }
    let mut out = String::from("true_class");
    for name in class_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (r, name) in class_names.iter().enumerate() {
        out.push_str(name);
        for c in 0..m.n_classes() {
            out.push_str(&format!(",{}", m.counts()[r][c]));
        }
        out.push('\n');
    }
    Ok(out)
}

/// CSV of row percentages with fixed 4-decimal formatting.
pub fn render_csv_percent(m: &ConfusionMatrix, class_names: &[&str]) -> Result<String> {
    if class_names.len() != m.n_classes() {
        return Err(Error::invalid("class name count mismatch"));
    }
    let pct = m.row_percentages();
    let mut out = String::from("true_class");
    for name in class_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (r, name) in class_names.iter().enumerate() {
        out.push_str(name);
        for c in 0..m.n_classes() {
            out.push_str(&format!(",{:.4}", pct[r][c]));
        }
        out.push('\n');
    }
    Ok(out)
}
