//! Binary soft-margin SVM with an RBF kernel, trained by sequential minimal
//! optimization.
//!
//! The solver works on the dual
//!
//! ```text
//! max  Σ α_i - ½ Σ_ij α_i α_j y_i y_j K(x_i, x_j)
//! s.t. 0 ≤ α_i ≤ C,  Σ α_i y_i = 0
//! ```
//!
//! picking the most violating index `i` by first-order information and its
//! partner `j` by the second-order gain, and stops once the maximal KKT
//! violation gap drops below `tol`. That stopping rule bounds every KKT
//! residual `y_i f(x_i) - 1` by `tol` in the direction its bound allows.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

const TAU: f64 = 1e-12;
/// Above this many training points kernel rows are computed on demand
/// instead of caching the whole Gram matrix.
const DENSE_KERNEL_LIMIT: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    /// `1 / (k · Var(X))`, with the variance taken over all training entries.
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: GammaMode,
    pub tol: f64,
    /// Cap on pair updates; `None` means `max(10^7, 100 m)`.
    pub max_iter: Option<usize>,
    /// Seeds the index scan order, which decides ties in working-set selection.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: GammaMode::Scale,
            tol: 1e-3,
            max_iter: None,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "SVM C must be positive, got {}",
                self.c
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "SVM tol must be positive, got {}",
                self.tol
            )));
        }
        if let GammaMode::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "RBF gamma must be positive, got {g}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SvmModel {
    pub support_vectors: Array2<f64>,
    /// `α_i y_i` for each support vector, with `y ∈ {-1, +1}`.
    pub dual_coefs: Array1<f64>,
    pub bias: f64,
    pub gamma_rbf: f64,
    pub config: SvmConfig,
    /// False when `max_iter` was hit before the KKT gap closed.
    pub converged: bool,
    pub iterations: usize,
    /// Dual objective at the returned iterate.
    pub objective: f64,
}

pub fn rbf_kernel(x: ArrayView1<f64>, y: ArrayView1<f64>, gamma_rbf: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if gamma_rbf.is_nan() || gamma_rbf <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "RBF gamma must be positive, got {gamma_rbf}"
        )));
    }
    Ok(rbf(x.as_slice(), y.as_slice(), x, y, gamma_rbf))
}

#[inline]
fn rbf(
    xs: Option<&[f64]>,
    ys: Option<&[f64]>,
    x: ArrayView1<f64>,
    y: ArrayView1<f64>,
    gamma: f64,
) -> f64 {
    let d2: f64 = match (xs, ys) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum(),
        _ => x.iter().zip(y.iter()).map(|(p, q)| (p - q) * (p - q)).sum(),
    };
    (-gamma * d2).exp()
}

/// Gram matrix `K_ij = exp(-gamma ||x_i - x_j||²)`.
pub fn kernel_matrix(x: ArrayView2<f64>, gamma_rbf: f64) -> Array2<f64> {
    let m = x.nrows();
    let mut k = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        k[[i, i]] = 1.0;
        for j in i + 1..m {
            let v = rbf(None, None, x.row(i), x.row(j), gamma_rbf);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

/// Resolves the RBF width for training data with `k` features.
pub fn resolve_gamma(x: ArrayView2<f64>, mode: GammaMode) -> f64 {
    match mode {
        GammaMode::Value(g) => g,
        GammaMode::Scale => {
            let count = x.len() as f64;
            let mean = x.sum() / count;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
            if var > 0.0 {
                1.0 / (x.ncols() as f64 * var)
            } else {
                1.0
            }
        }
    }
}

enum KernelRows<'a> {
    Dense(Array2<f64>),
    OnDemand { x: ArrayView2<'a, f64>, gamma: f64 },
}

impl KernelRows<'_> {
    fn row_into(&self, i: usize, out: &mut [f64]) {
        match self {
            KernelRows::Dense(k) => {
                out.copy_from_slice(k.row(i).as_slice().expect("standard layout"))
            }
            KernelRows::OnDemand { x, gamma } => {
                let xi = x.row(i);
                for (t, o) in out.iter_mut().enumerate() {
                    *o = rbf(None, None, xi, x.row(t), *gamma);
                }
            }
        }
    }
}

/// Trains on labels in `{0, 1}`; label 1 is the positive class.
pub fn train(x: ArrayView2<f64>, y: ArrayView1<u32>, cfg: &SvmConfig) -> Result<SvmModel> {
    cfg.validate()?;
    let m = x.nrows();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: y.len(),
        });
    }
    if m < 2 {
        return Err(Error::InvalidInput(
            "SVM training needs at least 2 samples".into(),
        ));
    }
    if let Some(bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidInput(format!(
            "SVM labels must be 0 or 1, found {bad}"
        )));
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == m {
        return Err(Error::InvalidInput(
            "SVM training needs samples of both classes".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "SVM training data has non-finite entries".into(),
        ));
    }

    // The dual is symmetric under y -> -y. Solving it in a canonical
    // orientation (first sample positive) makes the trained decision
    // function exactly antisymmetric under a label swap.
    let flip = y[0] == 0;
    let signs: Vec<f64> = y
        .iter()
        .map(|&l| if (l == 1) != flip { 1.0 } else { -1.0 })
        .collect();

    let gamma_rbf = resolve_gamma(x, cfg.gamma);
    let kernel = if m <= DENSE_KERNEL_LIMIT {
        KernelRows::Dense(kernel_matrix(x, gamma_rbf))
    } else {
        KernelRows::OnDemand {
            x,
            gamma: gamma_rbf,
        }
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));

    let solution = smo(
        &kernel,
        &signs,
        cfg.c,
        cfg.tol,
        cfg.max_iter.unwrap_or((100 * m).max(10_000_000)),
        &order,
    );
    if !solution.converged {
        log::warn!(
            "SMO stopped after {} iterations without reaching tol {}",
            solution.iterations,
            cfg.tol
        );
    }

    let sign_out = if flip { -1.0 } else { 1.0 };
    let sv: Vec<usize> = (0..m).filter(|&i| solution.alpha[i] > 0.0).collect();
    let support_vectors = x.select(Axis(0), &sv);
    let dual_coefs = sv
        .iter()
        .map(|&i| sign_out * solution.alpha[i] * signs[i])
        .collect();
    Ok(SvmModel {
        support_vectors,
        dual_coefs,
        bias: sign_out * solution.bias,
        gamma_rbf,
        config: *cfg,
        converged: solution.converged,
        iterations: solution.iterations,
        objective: solution.objective,
    })
}

struct SmoSolution {
    alpha: Vec<f64>,
    bias: f64,
    converged: bool,
    iterations: usize,
    objective: f64,
}

/// Minimizes `½ αᵀQα - Σα` with `Q_ij = y_i y_j K_ij`. `grad` holds `Qα - 1`.
fn smo(
    kernel: &KernelRows,
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
    order: &[usize],
) -> SmoSolution {
    let m = y.len();
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];
    let mut k_i = vec![0.0; m];
    let mut k_j = vec![0.0; m];
    let diag = vec![1.0; m];

    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal -y_t G_t over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for &t in order {
            let in_up = if y[t] > 0.0 {
                !upper(alpha[t])
            } else {
                !lower(alpha[t])
            };
            if in_up && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        kernel.row_into(i, &mut k_i);

        // j: best second-order gain over I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best_gain = f64::INFINITY;
        let mut j_sel = None;
        for &t in order {
            let in_low = if y[t] > 0.0 {
                !lower(alpha[t])
            } else {
                !upper(alpha[t])
            };
            if !in_low {
                continue;
            }
            let yg = y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let grad_diff = gmax + yg;
            if grad_diff > 0.0 {
                let quad = diag[i] + diag[t] - 2.0 * k_i[t];
                let gain = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                if gain < best_gain {
                    best_gain = gain;
                    j_sel = Some(t);
                }
            }
        }
        if gmax + gmax2 < tol {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        kernel.row_into(j, &mut k_j);

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = y[i] * y[j] * k_i[j];
        if y[i] != y[j] {
            let quad = (diag[i] + diag[j] + 2.0 * q_ij).max(TAU);
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
            let quad = (diag[i] + diag[j] - 2.0 * q_ij).max(TAU);
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

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        let (yi, yj) = (y[i], y[j]);
        for t in 0..m {
            grad[t] += y[t] * (yi * k_i[t] * di + yj * k_j[t] * dj);
        }
        iterations += 1;
    }

    // bias: average of y_t G_t over free vectors, else midpoint of the
    // feasible interval; f(x) = Σ α y K - rho
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..m {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (ub + lb)
    };
    let objective = -0.5
        * alpha
            .iter()
            .zip(&grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>();

    SmoSolution {
        alpha,
        bias: -rho,
        converged,
        iterations,
        objective,
    }
}

impl SvmModel {
    /// `f(x) = Σ dual_coefs_i K(sv_i, x) + bias` for each row of `x`.
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        let k = self.support_vectors.ncols();
        if x.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: x.ncols(),
            });
        }
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                self.support_vectors
                    .rows()
                    .into_iter()
                    .zip(self.dual_coefs.iter())
                    .map(|(sv, &a)| a * rbf(None, None, sv, row, self.gamma_rbf))
                    .sum::<f64>()
                    + self.bias
            })
            .collect())
    }

    /// Labels (1 iff `f(x) > 0`) and decision values.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<(Array1<u32>, Array1<f64>)> {
        let f = self.decision_function(x)?;
        Ok((f.mapv(|v| u32::from(v > 0.0)), f))
    }
}

pub fn predict(model: &SvmModel, x: ArrayView2<f64>) -> Result<(Array1<u32>, Array1<f64>)> {
    model.predict(x)
}

pub fn accuracy(labels_true: ArrayView1<u32>, labels_pred: ArrayView1<u32>) -> Result<f64> {
    if labels_true.len() != labels_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: labels_true.len(),
            found: labels_pred.len(),
        });
    }
    if labels_true.is_empty() {
        return Err(Error::Empty);
    }
    let hits = labels_true
        .iter()
        .zip(labels_pred.iter())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / labels_true.len() as f64)
}
