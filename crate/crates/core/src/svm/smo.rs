//! Soft-margin binary SVM trained by sequential minimal optimization
//! with max-violating-pair working-set selection.
//!
//! Solves min ½·αᵀQα − eᵀα subject to 0 ≤ α ≤ C, yᵀα = 0, where
//! Q_ij = y_i·y_j·K(x_i,x_j), stopping when the maximal KKT violation
//! m(α) − M(α) drops to the tolerance.

use super::kernel::{Kernel, KernelSpec};
use crate::error::{Error, Result};

/// Quadratic-coefficient floor when a kernel is not strictly PD.
const TAU: f64 = 1e-12;
/// Pair subproblems up to this size precompute the full Gram matrix.
const CACHE_LIMIT: usize = 4096;
/// Kernel-evaluation budget per training run, as a multiple of N.
const BUDGET_PER_SAMPLE: u64 = 10 * 1000;

/// A trained binary classifier: support vectors with their dual
/// coefficients α_i·y_i, a bias, and the kernel that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    /// Class ids this machine separates, smaller id first. A positive
    /// decision value favors `pair.0`.
    pub pair: (usize, usize),
    pub kernel: KernelSpec,
    pub support_vectors: Vec<Vec<f64>>,
    /// α_i·y_i per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl BinarySvm {
    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }
}

/// f(x) = Σ α_i·y_i·K(s_i, x) + b.
pub fn decision(svm: &BinarySvm, x: &[f64]) -> Result<f64> {
    if x.len() != svm.dim() {
        return Err(Error::invalid(format!(
            "expected {} dims, got {}",
            svm.dim(),
            x.len()
        )));
    }
    let k = svm.kernel.build();
    let mut f = svm.bias;
    for (s, c) in svm.support_vectors.iter().zip(&svm.coefficients) {
        f += c * k.eval(s, x);
    }
    Ok(f)
}

/// Kernel row provider: cached Gram matrix for small problems, direct
/// re-evaluation above the cache limit. Evaluations are counted either
/// way so the budget means the same thing on both paths.
struct KernelSource<'a> {
    kernel: Box<dyn Kernel>,
    x: &'a [Vec<f64>],
    gram: Option<Vec<f64>>,
    evals: u64,
}

impl<'a> KernelSource<'a> {
    fn new(spec: &KernelSpec, x: &'a [Vec<f64>]) -> KernelSource<'a> {
        let n = x.len();
        let kernel = spec.build();
        let mut src = KernelSource {
            kernel,
            x,
            gram: None,
            evals: 0,
        };
        if n <= CACHE_LIMIT {
            let mut gram = vec![0.0f64; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let v = src.kernel.eval(&x[i], &x[j]);
                    gram[i * n + j] = v;
                    gram[j * n + i] = v;
                }
            }
            src.evals = (n * (n + 1) / 2) as u64;
            src.gram = Some(gram);
        }
        src
    }

    /// K(x_i, x_j). Cached lookups still charge the budget as if
    /// recomputed once per row access, keeping the iteration bound
    /// independent of cache policy.
    fn row_into(&mut self, i: usize, out: &mut [f64]) {
        let n = self.x.len();
        self.evals += n as u64;
        match &self.gram {
            Some(g) => out.copy_from_slice(&g[i * n..(i + 1) * n]),
            None => {
                for j in 0..n {
                    out[j] = self.kernel.eval(&self.x[i], &self.x[j]);
                }
            }
        }
    }
}

struct Solution {
    alpha: Vec<f64>,
    bias: f64,
}

/// Train with the default evaluation budget.
pub fn train_binary(
    x: &[Vec<f64>],
    y: &[i32],
    spec: &KernelSpec,
    c: f64,
    tol: f64,
) -> Result<BinarySvm> {
    train_binary_with_budget(x, y, spec, c, tol, BUDGET_PER_SAMPLE * x.len() as u64)
}

/// Train with an explicit kernel-evaluation budget; exceeding it aborts
/// with a convergence error carrying the duality gap at that point.
pub fn train_binary_with_budget(
    x: &[Vec<f64>],
    y: &[i32],
    spec: &KernelSpec,
    c: f64,
    tol: f64,
    budget: u64,
) -> Result<BinarySvm> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("training needs at least 2 samples"));
    }
    if y.len() != n {
        return Err(Error::invalid(format!("{n} samples but {} labels", y.len())));
    }
    if y.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::invalid("labels must be +1 or -1"));
    }
    if !y.iter().any(|&l| l == 1) || !y.iter().any(|&l| l == -1) {
        return Err(Error::invalid("both classes must be present"));
    }
    let dim = x[0].len();
    if dim == 0 || x.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("inconsistent feature dimensions"));
    }
    if !(c > 0.0) {
        return Err(Error::invalid(format!("C must be positive, got {c}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }

    let mut source = KernelSource::new(spec, x);
    let sol = solve(&mut source, y, c, tol, budget)?;

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for i in 0..n {
        if sol.alpha[i] > 0.0 {
            support_vectors.push(x[i].clone());
            coefficients.push(sol.alpha[i] * y[i] as f64);
        }
    }
    Ok(BinarySvm {
        pair: (0, 1),
        kernel: spec.clone(),
        support_vectors,
        coefficients,
        bias: sol.bias,
    })
}

fn solve(
    source: &mut KernelSource,
    y: &[i32],
    c: f64,
    tol: f64,
    budget: u64,
) -> Result<Solution> {
    let n = y.len();
    let mut alpha = vec![0.0f64; n];
    // Gradient of the dual objective: G_i = (Qα)_i − 1.
    let mut grad = vec![-1.0f64; n];
    let mut row_i = vec![0.0f64; n];
    let mut row_j = vec![0.0f64; n];

    loop {
        // Max-violating pair: i maximizes −y·G over I_up, j minimizes it
        // over I_low. Ties break to the smaller index for determinism.
        let mut i_best: Option<(usize, f64)> = None;
        let mut j_best: Option<(usize, f64)> = None;
        for t in 0..n {
            let yg = -(y[t] as f64) * grad[t];
            let in_up = (y[t] == 1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0.0);
            let in_low = (y[t] == -1 && alpha[t] < c) || (y[t] == 1 && alpha[t] > 0.0);
            if in_up && i_best.is_none_or(|(_, best)| yg > best) {
                i_best = Some((t, yg));
            }
            if in_low && j_best.is_none_or(|(_, best)| yg < best) {
                j_best = Some((t, yg));
            }
        }
        let ((i, m_up), (j, m_low)) = match (i_best, j_best) {
            (Some(a), Some(b)) => (a, b),
            // Both index sets are nonempty whenever 0 < C; an empty set
            // means every α is pinned in a way that cannot happen with
            // both labels present.
            _ => break,
        };
        if m_up - m_low <= tol {
            break;
        }
        if source.evals + 2 * n as u64 > budget {
            let gap = duality_gap(y, &alpha, &grad, c);
            return Err(Error::Convergence {
                msg: format!(
                    "kernel-evaluation budget {budget} exhausted after {} evaluations",
                    source.evals
                ),
                gap,
            });
        }

        source.row_into(i, &mut row_i);
        source.row_into(j, &mut row_j);
        let (yi, yj) = (y[i] as f64, y[j] as f64);
        let old_ai = alpha[i];
        let old_aj = alpha[j];

        // Two-variable analytic step, then clip to the feasible box while
        // preserving yᵀα. The curvature along the step direction is
        // ‖φ(x_i) − φ(x_j)‖² = K_ii + K_jj − 2·K_ij in both branches.
        if y[i] != y[j] {
            let quad = (row_i[i] + row_j[j] - 2.0 * row_i[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (row_i[i] + row_j[j] - 2.0 * row_i[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let dai = alpha[i] - old_ai;
        let daj = alpha[j] - old_aj;
        if dai == 0.0 && daj == 0.0 {
            // Numerically stuck pair; the violation is below what the
            // step can resolve at this precision.
            break;
        }
        for t in 0..n {
            grad[t] += (y[t] as f64)
                * (yi * row_i[t] * dai + yj * row_j[t] * daj);
        }
    }

    let bias = calc_bias(y, &alpha, &grad, c);
    Ok(Solution { alpha, bias })
}

/// Bias from KKT: average −y_i·G_i over free support vectors, midpoint
/// of the feasible interval when none are free.
fn calc_bias(y: &[i32], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..y.len() {
        let yg = (y[t] as f64) * grad[t];
        if alpha[t] >= c {
            if y[t] == -1 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] == 1 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (upper + lower) / 2.0
    };
    -rho
}

/// Primal-minus-dual objective at the current point:
/// gap = αᵀQα − Σα + C·Σξ with ξ_i the hinge losses under the current bias.
fn duality_gap(y: &[i32], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let n = y.len();
    let bias = calc_bias(y, alpha, grad, c);
    // (Qα)_i = G_i + 1, so αᵀQα = Σ α_i(G_i+1) with no extra kernel work.
    let quad: f64 = (0..n).map(|i| alpha[i] * (grad[i] + 1.0)).sum();
    let sum_alpha: f64 = alpha.iter().sum();
    let hinge: f64 = (0..n)
        .map(|i| {
            // y_i·f(x_i) = (Qα)_i + y_i·b.
            let margin = grad[i] + 1.0 + (y[i] as f64) * bias;
            (1.0 - margin).max(0.0)
        })
        .sum();
    quad - sum_alpha + c * hinge
}
