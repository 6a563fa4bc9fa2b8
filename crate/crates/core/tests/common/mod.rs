//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numerical routines.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((m, n), |_| rng.random_range(lo..hi))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let a = random_matrix(rng, n, n, -1.0, 1.0);
    (&a + &a.t()) * 0.5
}

/// Rows divided by their Euclidean length, computed with plain loops.
pub fn normalize_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row.mapv_inplace(|v| v / norm);
    }
    out
}

/// `(1/m) Σ_i x_i x_iᵀ` by explicit triple loop.
pub fn rho_bar_oracle(x: ArrayView2<f64>) -> Array2<f64> {
    let (m, n) = x.dim();
    let mut out = Array2::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for i in 0..m {
                s += x[[i, a]] * x[[i, b]];
            }
            out[[a, b]] = s / m as f64;
        }
    }
    out
}

pub fn mean_oracle(x: ArrayView2<f64>) -> Array1<f64> {
    let (m, n) = x.dim();
    Array1::from_shape_fn(n, |j| (0..m).map(|i| x[[i, j]]).sum::<f64>() / m as f64)
}

/// Population mean and standard deviation per column, two-pass.
pub fn column_stats_oracle(x: ArrayView2<f64>) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = x.dim();
    let mut means = vec![0.0; n];
    let mut stds = vec![0.0; n];
    for j in 0..n {
        let mu = (0..m).map(|i| x[[i, j]]).sum::<f64>() / m as f64;
        let var = (0..m).map(|i| (x[[i, j]] - mu).powi(2)).sum::<f64>() / m as f64;
        means[j] = mu;
        stds[j] = var.sqrt();
    }
    (means, stds)
}

pub fn max_abs_diff(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a symmetric matrix, descending: Householder reduction to
/// tridiagonal form, then Sturm-sequence bisection for each eigenvalue.
pub fn eigenvalues_oracle(a: ArrayView2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[[i, j]]).collect())
        .collect();
    for k in 0..n.saturating_sub(2) {
        let alpha_norm = ((k + 1)..n).map(|i| m[i][k] * m[i][k]).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let alpha = if m[k + 1][k] > 0.0 {
            -alpha_norm
        } else {
            alpha_norm
        };
        let mut v = vec![0.0; n];
        v[k + 1] = m[k + 1][k] - alpha;
        for i in (k + 2)..n {
            v[i] = m[i][k];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H = I - 2 v vᵀ / (vᵀv); m <- H m H
        let mut hm = m.clone();
        for j in 0..n {
            let dot: f64 = (0..n).map(|i| v[i] * m[i][j]).sum();
            for i in 0..n {
                hm[i][j] = m[i][j] - 2.0 * v[i] * dot / vnorm2;
            }
        }
        for i in 0..n {
            let dot: f64 = (0..n).map(|j| hm[i][j] * v[j]).sum();
            for j in 0..n {
                m[i][j] = hm[i][j] - 2.0 * dot * v[j] / vnorm2;
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    let e: Vec<f64> = (1..n).map(|i| m[i][i - 1]).collect();

    // Number of eigenvalues strictly below x.
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if q == 0.0 {
                f64::EPSILON * (e[i - 1].abs() + 1.0)
            } else {
                q
            };
            q = d[i] - x - e[i - 1] * e[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bound = (0..n)
        .map(|i| {
            let off =
                if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
            d[i].abs() + off
        })
        .fold(0.0, f64::max)
        + 1.0;
    let mut out: Vec<f64> = (0..n)
        .map(|k| {
            // k-th smallest: smallest x with count_below(x) > k
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * bound {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    out.reverse();
    out
}

/// Dual objective `Σα − ½ αᵀ Q α`, `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(k: &Array2<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let m = y.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[[i, j]];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 ≤ α ≤ c, yᵀα = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(z: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> {
        z.iter()
            .zip(y)
            .map(|(zi, yi)| (zi - nu * yi).clamp(0.0, c))
            .collect()
    };
    let g = |nu: f64| -> f64 { at(nu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let span = z.iter().map(|v| v.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    // g is non-increasing in nu
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Maximizes the SVM dual with accelerated projected gradient. Returns the
/// multipliers and the attained objective.
pub fn svm_dual_oracle(k: &Array2<f64>, y: &[f64], c: f64, iters: usize) -> (Vec<f64>, f64) {
    let m = y.len();
    let q = Array2::from_shape_fn((m, m), |(i, j)| y[i] * y[j] * k[[i, j]]);
    let lipschitz = (0..m)
        .map(|i| (0..m).map(|j| q[[i, j]].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let step = 1.0 / lipschitz;
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| 1.0 - (0..m).map(|j| q[[i, j]] * a[j]).sum::<f64>())
            .collect()
    };
    let mut x = vec![0.0; m];
    let mut w = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let g = grad(&w);
        let z: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi + step * gi).collect();
        let x_next = project(&z, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        w = x_next
            .iter()
            .zip(&x)
            .map(|(xn, xo)| xn + (t - 1.0) / t_next * (xn - xo))
            .collect();
        // restart when momentum points uphill
        if dual_objective(k, y, &x_next) < dual_objective(k, y, &x) {
            w = x_next.clone();
            t = 1.0;
        } else {
            t = t_next;
        }
        x = x_next;
    }
    let obj = dual_objective(k, y, &x);
    (x, obj)
}

pub fn rbf_gram(x: ArrayView2<f64>, gamma: f64) -> Array2<f64> {
    let m = x.nrows();
    Array2::from_shape_fn((m, m), |(i, j)| {
        let d2: f64 = x
            .row(i)
            .iter()
            .zip(x.row(j).iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        (-gamma * d2).exp()
    })
}

/// Two well-separated Gaussian blobs in `n` dimensions with a common offset,
/// labelled 1 and 2.
pub fn two_blobs(seed: u64, per_class: usize, n: usize, offset: f64) -> (Array2<f64>, Array1<u32>) {
    let mut r = rng(seed);
    let mut x = Array2::zeros((2 * per_class, n));
    let mut y = Array1::zeros(2 * per_class);
    for i in 0..2 * per_class {
        let class = i % 2;
        for j in 0..n {
            let centre = if class == 0 {
                (j as f64 * 0.7).sin()
            } else {
                (j as f64 * 0.3).cos()
            };
            x[[i, j]] = offset + centre + 0.1 * gauss(&mut r);
        }
        y[i] = class as u32 + 1;
    }
    (x, y)
}

pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = r.random_range(f64::EPSILON..1.0);
    let u2: f64 = r.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Synthetic hyperspectral-like scene: smooth class spectra plus a shared
/// positive baseline, so unnormalized data sit far from the origin.
pub fn synthetic_cube(
    seed: u64,
    h: usize,
    w: usize,
    bands: usize,
    classes: u32,
) -> (ndarray::Array3<f64>, Array2<u32>) {
    let mut r = rng(seed);
    let mut cube = ndarray::Array3::zeros((h, w, bands));
    let mut gt = Array2::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            let label = ((i * w + j) as u32 * 7 + 3) % (classes + 1);
            gt[[i, j]] = label;
            for b in 0..bands {
                let t = b as f64 / bands as f64;
                let shape = (std::f64::consts::PI * t * (1.0 + label as f64)).sin();
                cube[[i, j, b]] = 1000.0 + 200.0 * shape + 30.0 * gauss(&mut r);
            }
        }
    }
    (cube, gt)
}
