//! Dimensionality reduction: z-score scaling, PCA pre-projection, and an
//! LDA discriminant projection, composed into a single `Projection`.
//!
//! PCA runs before LDA so the within-class scatter is full rank in the
//! projected space (the fisherface construction). Eigenvector signs are
//! canonicalized (largest-magnitude component positive) so refitting the
//! same data yields byte-identical bases.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Ridge factor applied to the within-class scatter before inversion.
const LDA_RIDGE: f64 = 1e-6;
/// Relative eigenvalue threshold below which a PCA direction is treated
/// as numerically absent.
const RANK_EPS: f64 = 1e-12;

/// Row-major sample matrix with one class id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    x: DMatrix<f64>,
    labels: Vec<usize>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("feature matrix needs at least one row"));
        }
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let dims = rows[0].len();
        if dims == 0 {
            return Err(Error::invalid("feature rows must be non-empty"));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dims {
                return Err(Error::invalid(format!(
                    "row {i} has {} dims, expected {dims}",
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} contains a non-finite value")));
            }
        }
        let x = DMatrix::from_fn(rows.len(), dims, |i, j| rows[i][j]);
        Ok(FeatureMatrix { x, labels })
    }

    fn from_parts(x: DMatrix<f64>, labels: Vec<usize>) -> Self {
        FeatureMatrix { x, labels }
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_dims(&self) -> usize {
        self.x.ncols()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    /// Number of classes; labels must be contiguous ids 0..C−1.
    pub fn n_classes(&self) -> Result<usize> {
        let c = self
            .labels
            .iter()
            .max()
            .copied()
            .ok_or_else(|| Error::invalid("no labels"))?
            + 1;
        let mut counts = vec![0usize; c];
        for &l in &self.labels {
            counts[l] += 1;
        }
        if let Some(missing) = counts.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!(
                "class ids must be contiguous: class {missing} has no samples"
            )));
        }
        Ok(c)
    }

    fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }
}

/// Per-dimension z-score statistics. Constant dimensions record a
/// standard deviation of 1 so they pass through centered at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    mean: Vec<f64>,
    stddev: Vec<f64>,
}

impl Scaler {
    pub fn n_dims(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn stddev(&self) -> &[f64] {
        &self.stddev
    }

    pub fn from_parts(mean: Vec<f64>, stddev: Vec<f64>) -> Result<Self> {
        if mean.len() != stddev.len() || mean.is_empty() {
            return Err(Error::invalid("scaler mean/stddev length mismatch"));
        }
        if stddev.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("scaler stddev entries must be positive"));
        }
        Ok(Scaler { mean, stddev })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::invalid(format!(
                "expected {} dims, got {}",
                self.mean.len(),
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.stddev))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn apply_matrix(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.n_dims() != self.mean.len() {
            return Err(Error::invalid(format!(
                "expected {} dims, got {}",
                self.mean.len(),
                x.n_dims()
            )));
        }
        let scaled = DMatrix::from_fn(x.n_samples(), x.n_dims(), |i, j| {
            (x.x[(i, j)] - self.mean[j]) / self.stddev[j]
        });
        Ok(FeatureMatrix::from_parts(scaled, x.labels.clone()))
    }
}

/// Population-convention (divide by N) per-dimension mean and stddev.
pub fn fit_scaler(x: &FeatureMatrix) -> Result<Scaler> {
    let n = x.n_samples();
    if n < 2 {
        return Err(Error::invalid("scaler needs at least 2 samples"));
    }
    let d = x.n_dims();
    let mut mean = vec![0.0f64; d];
    for i in 0..n {
        for j in 0..d {
            mean[j] += x.x[(i, j)];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0f64; d];
    for i in 0..n {
        for j in 0..d {
            let c = x.x[(i, j)] - mean[j];
            var[j] += c * c;
        }
    }
    let stddev = var
        .iter()
        .map(|v| {
            let s = (v / n as f64).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    Ok(Scaler { mean, stddev })
}

/// PCA mean, orthonormal basis (columns), and descending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: DVector<f64>,
    /// D×p, orthonormal columns.
    basis: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn in_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mean(&self) -> Vec<f64> {
        self.mean.iter().copied().collect()
    }

    /// Column-major basis entries, for serialization.
    pub fn basis_column_major(&self) -> Vec<f64> {
        self.basis.as_slice().to_vec()
    }

    pub fn from_parts(mean: Vec<f64>, basis_col_major: Vec<f64>, p: usize) -> Result<Self> {
        let d = mean.len();
        if d == 0 || p == 0 || basis_col_major.len() != d * p {
            return Err(Error::invalid("inconsistent PCA dimensions"));
        }
        Ok(PcaModel {
            mean: DVector::from_vec(mean),
            basis: DMatrix::from_vec(d, p, basis_col_major),
            eigenvalues: vec![0.0; p],
        })
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::invalid(format!(
                "expected {} dims, got {}",
                self.in_dim(),
                x.len()
            )));
        }
        let v = DVector::from_row_slice(x) - &self.mean;
        Ok((self.basis.transpose() * v).iter().copied().collect())
    }

    pub fn transform_matrix(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.n_dims() != self.in_dim() {
            return Err(Error::invalid(format!(
                "expected {} dims, got {}",
                self.in_dim(),
                x.n_dims()
            )));
        }
        let centered = DMatrix::from_fn(x.n_samples(), x.n_dims(), |i, j| {
            x.x[(i, j)] - self.mean[j]
        });
        Ok(FeatureMatrix::from_parts(
            centered * &self.basis,
            x.labels.clone(),
        ))
    }
}

/// Flip each column so its largest-magnitude entry is positive; ties go
/// to the earliest index. Keeps refits byte-identical.
fn canonicalize_signs(basis: &mut DMatrix<f64>) {
    for c in 0..basis.ncols() {
        let col = basis.column(c);
        let mut arg = 0usize;
        let mut best = 0.0f64;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                arg = i;
            }
        }
        if basis[(arg, c)] < 0.0 {
            for r in 0..basis.nrows() {
                basis[(r, c)] = -basis[(r, c)];
            }
        }
    }
}

/// Indices sorted by descending eigenvalue, index order breaking ties.
fn descending_order(vals: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap().then(a.cmp(&b)));
    idx
}

/// Top-p principal components of the sample covariance (population
/// convention). When D > N the N×N Gram matrix is decomposed instead and
/// its eigenvectors mapped back, which is exact for the nonzero spectrum.
pub fn pca_fit(x: &FeatureMatrix, p: usize) -> Result<PcaModel> {
    let n = x.n_samples();
    let d = x.n_dims();
    let c = x.n_classes()?;
    if n <= c {
        return Err(Error::invalid(format!(
            "PCA needs more samples ({n}) than classes ({c})"
        )));
    }
    let p_max = d.min(n - c);
    if p == 0 || p > p_max {
        return Err(Error::invalid(format!(
            "PCA dimension {p} outside [1, {p_max}] (D={d}, N={n}, C={c})"
        )));
    }

    let mut mean = DVector::zeros(d);
    for i in 0..n {
        for j in 0..d {
            mean[j] += x.x[(i, j)];
        }
    }
    mean /= n as f64;
    let centered = DMatrix::from_fn(n, d, |i, j| x.x[(i, j)] - mean[j]);

    let (mut basis, eigenvalues) = if d <= n {
        // Direct covariance eigendecomposition.
        let cov = centered.transpose() * &centered / n as f64;
        let eig = SymmetricEigen::new(cov);
        let order = descending_order(&eig.eigenvalues);
        let lead = eig.eigenvalues[order[0]].max(0.0);
        let mut basis = DMatrix::zeros(d, p);
        let mut vals = Vec::with_capacity(p);
        for (k, &i) in order.iter().take(p).enumerate() {
            let lambda = eig.eigenvalues[i];
            if lambda <= RANK_EPS * lead.max(f64::MIN_POSITIVE) {
                return Err(Error::invalid(format!(
                    "data rank {k} is below the requested PCA dimension {p}"
                )));
            }
            basis.set_column(k, &eig.eigenvectors.column(i));
            vals.push(lambda);
        }
        (basis, vals)
    } else {
        // Gram path: eigenvectors u of (Zc·Zcᵀ)/N map to Zcᵀu, with
        // squared norm N·λ.
        let gram = &centered * centered.transpose() / n as f64;
        let eig = SymmetricEigen::new(gram);
        let order = descending_order(&eig.eigenvalues);
        let lead = eig.eigenvalues[order[0]].max(0.0);
        let mut basis = DMatrix::zeros(d, p);
        let mut vals = Vec::with_capacity(p);
        for (k, &i) in order.iter().take(p).enumerate() {
            let lambda = eig.eigenvalues[i];
            if lambda <= RANK_EPS * lead.max(f64::MIN_POSITIVE) {
                return Err(Error::invalid(format!(
                    "data rank {k} is below the requested PCA dimension {p}"
                )));
            }
            let v = centered.transpose() * eig.eigenvectors.column(i);
            basis.set_column(k, &(v / (n as f64 * lambda).sqrt()));
            vals.push(lambda);
        }
        // Re-orthonormalize: near-equal eigenvalues leave the mapped
        // columns slightly correlated in floating point.
        for k in 0..p {
            for j in 0..k {
                let proj = basis.column(j).dot(&basis.column(k));
                let col_j = basis.column(j).clone_owned();
                let mut col_k = basis.column_mut(k);
                col_k.axpy(-proj, &col_j, 1.0);
            }
            let norm = basis.column(k).norm();
            if norm <= 0.0 {
                return Err(Error::invalid(format!(
                    "PCA column {k} collapsed during re-orthonormalization"
                )));
            }
            basis.column_mut(k).scale_mut(1.0 / norm);
        }
        (basis, vals)
    };

    canonicalize_signs(&mut basis);
    Ok(PcaModel {
        mean,
        basis,
        eigenvalues,
    })
}

/// LDA basis (columns) and the descending generalized eigenvalues.
/// Columns satisfy vᵀ·S_w_ridged·v = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// p×q.
    basis: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl LdaModel {
    pub fn in_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis_column_major(&self) -> Vec<f64> {
        self.basis.as_slice().to_vec()
    }

    pub fn from_parts(basis_col_major: Vec<f64>, p: usize, q: usize) -> Result<Self> {
        if p == 0 || q == 0 || basis_col_major.len() != p * q {
            return Err(Error::invalid("inconsistent LDA dimensions"));
        }
        Ok(LdaModel {
            basis: DMatrix::from_vec(p, q, basis_col_major),
            eigenvalues: vec![0.0; q],
        })
    }

    pub fn transform(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.in_dim() {
            return Err(Error::invalid(format!(
                "expected {} dims, got {}",
                self.in_dim(),
                y.len()
            )));
        }
        let v = DVector::from_row_slice(y);
        Ok((self.basis.transpose() * v).iter().copied().collect())
    }

    pub fn transform_matrix(&self, y: &FeatureMatrix) -> Result<FeatureMatrix> {
        if y.n_dims() != self.in_dim() {
            return Err(Error::invalid(format!(
                "expected {} dims, got {}",
                self.in_dim(),
                y.n_dims()
            )));
        }
        Ok(FeatureMatrix::from_parts(
            y.matrix() * &self.basis,
            y.labels.clone(),
        ))
    }
}

/// Fit the discriminant basis maximizing between-class over within-class
/// scatter: solve S_b·v = λ·S_w·v through the Cholesky factor of the
/// ridged S_w.
pub fn lda_fit(y: &FeatureMatrix, q: usize) -> Result<LdaModel> {
    let n = y.n_samples();
    let p = y.n_dims();
    let c = y.n_classes()?;
    if c < 2 {
        return Err(Error::invalid("LDA needs at least 2 classes"));
    }
    if q == 0 || q > c - 1 {
        return Err(Error::invalid(format!(
            "LDA dimension {q} outside [1, {}] (C={c})",
            c - 1
        )));
    }
    if q > p {
        return Err(Error::invalid(format!(
            "LDA dimension {q} exceeds input dimension {p}"
        )));
    }
    let mut counts = vec![0usize; c];
    for &l in &y.labels {
        counts[l] += 1;
    }
    if let Some(small) = counts.iter().position(|&k| k < 2) {
        return Err(Error::invalid(format!(
            "class {small} has fewer than 2 samples"
        )));
    }

    let mut class_means: DMatrix<f64> = DMatrix::zeros(c, p);
    for i in 0..n {
        for j in 0..p {
            class_means[(y.labels[i], j)] += y.x[(i, j)];
        }
    }
    for k in 0..c {
        for j in 0..p {
            class_means[(k, j)] /= counts[k] as f64;
        }
    }
    let mut global = DVector::zeros(p);
    for i in 0..n {
        for j in 0..p {
            global[j] += y.x[(i, j)];
        }
    }
    global /= n as f64;

    let mut s_w = DMatrix::zeros(p, p);
    for i in 0..n {
        let diff = DVector::from_fn(p, |j, _| y.x[(i, j)] - class_means[(y.labels[i], j)]);
        s_w.syger(1.0, &diff, &diff, 1.0);
    }
    let mut s_b = DMatrix::zeros(p, p);
    for k in 0..c {
        let diff = DVector::from_fn(p, |j, _| class_means[(k, j)] - global[j]);
        s_b.syger(counts[k] as f64, &diff, &diff, 1.0);
    }
    // syger fills one triangle; mirror both into full symmetric matrices.
    for a in 0..p {
        for b in 0..a {
            s_w[(b, a)] = s_w[(a, b)];
            s_b[(b, a)] = s_b[(a, b)];
        }
    }

    let trace_w: f64 = (0..p).map(|i| s_w[(i, i)]).sum();
    let trace_b: f64 = (0..p).map(|i| s_b[(i, i)]).sum();
    if trace_b <= 1e-12 * (1.0 + trace_w) {
        return Err(Error::DegenerateDiscriminant(
            "all class means coincide; no discriminant direction exists".into(),
        ));
    }
    let ridge = (LDA_RIDGE * trace_w / p as f64).max(1e-12);
    for i in 0..p {
        s_w[(i, i)] += ridge;
    }

    let chol = nalgebra::Cholesky::new(s_w).ok_or_else(|| {
        Error::invalid("within-class scatter is not positive definite after ridging")
    })?;
    let l = chol.l();
    // M = L⁻¹·S_b·L⁻ᵀ, then symmetrize against round-off.
    let half = l
        .solve_lower_triangular(&s_b)
        .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;
    let m = l
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;
    let m = (&m + m.transpose()) / 2.0;

    let eig = SymmetricEigen::new(m);
    let order = descending_order(&eig.eigenvalues);
    let mut u = DMatrix::zeros(p, q);
    let mut vals = Vec::with_capacity(q);
    for (k, &i) in order.iter().take(q).enumerate() {
        u.set_column(k, &eig.eigenvectors.column(i));
        vals.push(eig.eigenvalues[i]);
    }
    // v = L⁻ᵀ·u solves the generalized problem; rescale each column to
    // unit Euclidean norm. S_w-normalization (vᵀS_w v = 1) would blow up
    // directions whose in-sample within-class scatter is near zero, and
    // at p close to N−C such directions are sampling artifacts: held-out
    // points then land far from every training cluster. Unit norm keeps
    // the same directions without the amplification.
    let mut basis = l
        .tr_solve_lower_triangular(&u)
        .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;
    for k in 0..q {
        let norm = basis.column(k).norm();
        if norm <= 0.0 {
            return Err(Error::invalid(format!("LDA column {k} collapsed to zero")));
        }
        basis.column_mut(k).scale_mut(1.0 / norm);
    }
    canonicalize_signs(&mut basis);
    Ok(LdaModel {
        basis,
        eigenvalues: vals,
    })
}

/// The full reduction chain: z-score, PCA, then LDA.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub scaler: Scaler,
    pub pca: PcaModel,
    pub lda: LdaModel,
}

impl Projection {
    pub fn in_dim(&self) -> usize {
        self.scaler.n_dims()
    }

    pub fn out_dim(&self) -> usize {
        self.lda.out_dim()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.scaler.apply(x)?;
        let y = self.pca.transform(&z)?;
        self.lda.transform(&y)
    }

    pub fn project_matrix(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        let z = self.scaler.apply_matrix(x)?;
        let y = self.pca.transform_matrix(&z)?;
        self.lda.transform_matrix(&y)
    }
}

/// Fit the whole chain with the fisherface defaults
/// p = min(D, N−C), q = C−1.
pub fn fit_projection(x: &FeatureMatrix) -> Result<Projection> {
    let c = x.n_classes()?;
    if x.n_samples() <= c {
        return Err(Error::invalid(format!(
            "need more samples ({}) than classes ({c})",
            x.n_samples()
        )));
    }
    let p = x.n_dims().min(x.n_samples() - c);
    fit_projection_with(x, p, c - 1)
}

pub fn fit_projection_with(x: &FeatureMatrix, p: usize, q: usize) -> Result<Projection> {
    let scaler = fit_scaler(x)?;
    let z = scaler.apply_matrix(x)?;
    let pca = pca_fit(&z, p)?;
    let y = pca.transform_matrix(&z)?;
    let lda = lda_fit(&y, q)?;
    Ok(Projection { scaler, pca, lda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> FeatureMatrix {
        FeatureMatrix::new(rows, labels).unwrap()
    }

    #[test]
    fn scaler_population_convention() {
        let x = matrix(vec![vec![1.0, 5.0], vec![3.0, 5.0]], vec![0, 1]);
        let s = fit_scaler(&x).unwrap();
        assert_abs_diff_eq!(s.mean()[0], 2.0);
        assert_abs_diff_eq!(s.stddev()[0], 1.0); // population N, not N−1
        assert_abs_diff_eq!(s.mean()[1], 5.0);
        assert_abs_diff_eq!(s.stddev()[1], 1.0); // constant dim records 1
        let scaled = s.apply(&[1.0, 5.0]).unwrap();
        assert_abs_diff_eq!(scaled[0], -1.0);
        assert_abs_diff_eq!(scaled[1], 0.0);
    }

    #[test]
    fn scaled_matrix_is_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..7).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let x = matrix(rows, vec![0; 50]);
        let s = fit_scaler(&x).unwrap();
        let z = s.apply_matrix(&x).unwrap();
        for j in 0..7 {
            let col: Vec<f64> = (0..50).map(|i| z.row(i)[j]).collect();
            let mean: f64 = col.iter().sum::<f64>() / 50.0;
            let var: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 50.0;
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(var, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn scaler_rejects_tiny_input() {
        assert!(fit_scaler(&matrix(vec![vec![1.0]], vec![0])).is_err());
        assert!(FeatureMatrix::new(vec![], vec![]).is_err());
        assert!(FeatureMatrix::new(vec![vec![f64::NAN]], vec![0]).is_err());
    }

    /// Points on the line t·(1,1,1)/√3: rank-1 covariance whose leading
    /// eigenvector is the line direction.
    #[test]
    fn pca_recovers_line_direction() {
        let d = 1.0 / 3.0f64.sqrt();
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64 - 5.5;
                vec![t * d, t * d, t * d]
            })
            .collect();
        let labels = (0..12).map(|i| i % 2).collect();
        let x = matrix(rows, labels);
        let pca = pca_fit(&x, 1).unwrap();
        let b = pca.basis_column_major();
        for v in &b {
            assert_abs_diff_eq!(*v, d, epsilon = 1e-9); // canonical positive sign
        }
        // Requesting a second component must fail: the data is rank 1.
        assert!(pca_fit(&x, 2).is_err());
    }

    #[test]
    fn pca_full_rank_projection_is_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..5).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let labels = (0..40).map(|i| i % 4).collect();
        let x = matrix(rows.clone(), labels);
        let pca = pca_fit(&x, 5).unwrap();
        let projected: Vec<Vec<f64>> = rows.iter().map(|r| pca.transform(r).unwrap()).collect();
        for i in 0..10 {
            for j in 0..i {
                let da: f64 = rows[i]
                    .iter()
                    .zip(&rows[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let db: f64 = projected[i]
                    .iter()
                    .zip(&projected[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert_abs_diff_eq!(da, db, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn pca_dimension_bounds_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let x = matrix(rows, (0..10).map(|i| i % 2).collect());
        // N=10, C=2: p ≤ min(4, 8) = 4.
        assert!(pca_fit(&x, 4).is_ok());
        assert!(pca_fit(&x, 5).is_err());
        assert!(pca_fit(&x, 0).is_err());
    }

    #[test]
    fn pca_gram_path_matches_direct_path() {
        // D=30 > N=20 exercises the Gram branch; the direct covariance
        // decomposition on the same data is the oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..30).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let x = matrix(rows.clone(), labels.clone());
        let gram = pca_fit(&x, 10).unwrap();

        // Oracle: direct D×D eigendecomposition.
        let n = 20usize;
        let d = 30usize;
        let xm = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        let mean = xm.row_mean();
        let centered = DMatrix::from_fn(n, d, |i, j| xm[(i, j)] - mean[j]);
        let cov = centered.transpose() * &centered / n as f64;
        let eig = SymmetricEigen::new(cov);
        let order = descending_order(&eig.eigenvalues);
        for k in 0..10 {
            let lambda = eig.eigenvalues[order[k]];
            assert_abs_diff_eq!(gram.eigenvalues()[k], lambda, epsilon = 1e-8);
            let mut oracle: Vec<f64> = eig.eigenvectors.column(order[k]).iter().copied().collect();
            // Apply the same sign canonicalization as production code.
            let arg = oracle
                .iter()
                .enumerate()
                .max_by(|(ia, a), (ib, b)| {
                    a.abs()
                        .partial_cmp(&b.abs())
                        .unwrap()
                        .then(ib.cmp(ia))
                })
                .unwrap()
                .0;
            if oracle[arg] < 0.0 {
                for v in &mut oracle {
                    *v = -*v;
                }
            }
            let got = gram.basis_column_major();
            for r in 0..d {
                assert_abs_diff_eq!(got[k * d + r], oracle[r], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn pca_basis_is_orthonormal_on_both_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for (n, d, p) in [(30usize, 8usize, 8usize), (12, 40, 9)] {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let x = matrix(rows, (0..n).map(|i| i % 3).collect());
            let pca = pca_fit(&x, p).unwrap();
            let b = DMatrix::from_vec(d, p, pca.basis_column_major());
            let gram = b.transpose() * &b;
            for i in 0..p {
                for j in 0..p {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(gram[(i, j)], expect, epsilon = 1e-8);
                }
            }
            // Eigenvalues non-increasing.
            for w in pca.eigenvalues().windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
        }
    }

    fn two_gaussians(seed: u64, n_per: usize) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let norm = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2usize {
            let mx = if class == 0 { 0.0 } else { 4.0 };
            for _ in 0..n_per {
                rows.push(vec![mx + norm.sample(&mut rng), norm.sample(&mut rng)]);
                labels.push(class);
            }
        }
        matrix(rows, labels)
    }

    #[test]
    fn lda_matches_two_class_closed_form() {
        // Exact oracle for C=2: the discriminant direction is
        // S_w⁻¹(μ₀−μ₁) up to scale, computed here from the same sample.
        let x = two_gaussians(46, 200);
        let lda = lda_fit(&x, 1).unwrap();
        let b = lda.basis_column_major();

        let labels = x.labels();
        let mut means = [[0.0f64; 2]; 2];
        let mut counts = [0usize; 2];
        for i in 0..x.n_samples() {
            let r = x.row(i);
            means[labels[i]][0] += r[0];
            means[labels[i]][1] += r[1];
            counts[labels[i]] += 1;
        }
        for k in 0..2 {
            means[k][0] /= counts[k] as f64;
            means[k][1] /= counts[k] as f64;
        }
        let mut sw = [[0.0f64; 2]; 2];
        for i in 0..x.n_samples() {
            let r = x.row(i);
            let l = labels[i];
            let d = [r[0] - means[l][0], r[1] - means[l][1]];
            for a in 0..2 {
                for c in 0..2 {
                    sw[a][c] += d[a] * d[c];
                }
            }
        }
        // Scale of S_w cancels in the direction of S_w⁻¹(μ₀−μ₁).
        let det = sw[0][0] * sw[1][1] - sw[0][1] * sw[1][0];
        let dm = [means[0][0] - means[1][0], means[0][1] - means[1][1]];
        let w = [
            (sw[1][1] * dm[0] - sw[0][1] * dm[1]) / det,
            (-sw[1][0] * dm[0] + sw[0][0] * dm[1]) / det,
        ];
        let dot = (b[0] * w[0] + b[1] * w[1]).abs();
        let cos = dot
            / ((b[0] * b[0] + b[1] * b[1]).sqrt() * (w[0] * w[0] + w[1] * w[1]).sqrt());
        let angle = cos.clamp(-1.0, 1.0).acos().to_degrees();
        assert!(angle < 0.1, "direction differs from closed form by {angle}°");

        // Against the population axis (1,0): more samples, looser bound.
        let x = two_gaussians(46, 1000);
        let lda = lda_fit(&x, 1).unwrap();
        let b = lda.basis_column_major();
        let norm = (b[0] * b[0] + b[1] * b[1]).sqrt();
        let angle = (b[0] / norm).abs().clamp(-1.0, 1.0).acos().to_degrees();
        assert!(angle < 3.0, "LDA direction off the population axis by {angle:.2}°");
    }

    #[test]
    fn lda_dimension_bounds() {
        let x = two_gaussians(47, 20);
        assert!(lda_fit(&x, 1).is_ok());
        assert!(lda_fit(&x, 2).is_err()); // q ≤ C−1 = 1
        assert!(lda_fit(&x, 0).is_err());
    }

    #[test]
    fn identical_class_means_are_degenerate() {
        // Two classes sharing a mean exactly: mirrored points.
        let rows = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let x = matrix(rows, vec![0, 0, 1, 1]);
        match lda_fit(&x, 1) {
            Err(Error::DegenerateDiscriminant(_)) => {}
            other => panic!("expected degenerate-discriminant, got {other:?}"),
        }
    }

    #[test]
    fn fisher_ratio_beats_random_directions() {
        let x = two_gaussians(48, 150);
        let lda = lda_fit(&x, 1).unwrap();
        let b = lda.basis_column_major();
        let norm = (b[0] * b[0] + b[1] * b[1]).sqrt();
        let dir = [b[0] / norm, b[1] / norm];

        let ratio = |d: &[f64; 2]| -> f64 {
            let proj: Vec<f64> = (0..x.n_samples())
                .map(|i| {
                    let r = x.row(i);
                    r[0] * d[0] + r[1] * d[1]
                })
                .collect();
            let labels = x.labels();
            let mut means = [0.0f64; 2];
            let mut counts = [0usize; 2];
            for (v, &l) in proj.iter().zip(labels) {
                means[l] += v;
                counts[l] += 1;
            }
            for k in 0..2 {
                means[k] /= counts[k] as f64;
            }
            let total: f64 = proj.iter().sum::<f64>() / proj.len() as f64;
            let between: f64 = (0..2)
                .map(|k| counts[k] as f64 * (means[k] - total) * (means[k] - total))
                .sum();
            let within: f64 = proj
                .iter()
                .zip(labels)
                .map(|(v, &l)| (v - means[l]) * (v - means[l]))
                .sum();
            between / within
        };

        let best = ratio(&dir);
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        for _ in 0..100 {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let r = ratio(&[theta.cos(), theta.sin()]);
            // The ridge shifts the optimum by O(1e-6) relative.
            assert!(best >= r * (1.0 - 1e-5), "random direction beat LDA: {r} > {best}");
        }
    }

    #[test]
    fn projection_is_affine_and_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let base = (i % 3) as f64 * 2.0;
                (0..12)
                    .map(|_| base + rng.random_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let x = matrix(rows.clone(), labels);
        let proj = fit_projection(&x).unwrap();
        assert_eq!(proj.out_dim(), 2);

        // Affine: project(αx + (1−α)y) = α·project(x) + (1−α)·project(y).
        let alpha = 0.3;
        let mix: Vec<f64> = rows[0]
            .iter()
            .zip(&rows[1])
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        let pm = proj.project(&mix).unwrap();
        let p0 = proj.project(&rows[0]).unwrap();
        let p1 = proj.project(&rows[1]).unwrap();
        for k in 0..pm.len() {
            assert_abs_diff_eq!(pm[k], alpha * p0[k] + (1.0 - alpha) * p1[k], epsilon = 1e-8);
        }

        // The stored global mean maps to the PCA-space origin.
        let z = proj.scaler.apply(proj.scaler.mean()).unwrap();
        let y = proj.pca.transform(&z).unwrap();
        for v in y {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn pca_round_trip_on_low_rank_data() {
        // Intrinsic dimension 2 inside D=6: a p=2 basis carries all the
        // variance, so reconstruction must be exact up to float noise.
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| {
                let a: f64 = rng.random_range(-2.0..2.0);
                let b: f64 = rng.random_range(-2.0..2.0);
                vec![a, b, a + b, a - b, 2.0 * a, 3.0 * b]
            })
            .collect();
        let x = matrix(rows.clone(), (0..30).map(|i| i % 2).collect());
        let s = fit_scaler(&x).unwrap();
        let z = s.apply_matrix(&x).unwrap();
        let pca = pca_fit(&z, 2).unwrap();
        let basis = DMatrix::from_vec(6, 2, pca.basis_column_major());
        let mean = DVector::from_vec(pca.mean());
        for i in 0..30 {
            let zi = DVector::from_vec(s.apply(&rows[i]).unwrap());
            let coords = basis.transpose() * (&zi - &mean);
            let recon = &mean + &basis * coords;
            for j in 0..6 {
                assert_abs_diff_eq!(recon[j], zi[j], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn projection_rejects_wrong_dimensions() {
        let x = two_gaussians(52, 30);
        let proj = fit_projection(&x).unwrap();
        assert!(proj.project(&[1.0, 2.0, 3.0]).is_err());
        assert!(proj.project(&[1.0]).is_err());
    }
}
