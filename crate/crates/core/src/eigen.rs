//! Symmetric eigendecomposition by cyclic Jacobi rotations, plus the
//! eigenvector and spectrum comparisons used to relate `Q` and `rho_bar`.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::{Error, Result};

/// Relative off-diagonal Frobenius norm at which iteration stops.
pub const JACOBI_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;
/// Relative symmetry tolerance accepted on input.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Eigenvalues of `Q` below this fraction of the largest one are left out of
/// relative spectrum comparisons.
pub const EIGENVALUE_FLOOR: f64 = 1e-8;

/// Eigenpairs sorted by descending eigenvalue. Column `k` of `eigenvectors`
/// belongs to `eigenvalues[k]`; in each column the entry of largest magnitude
/// is positive (first such entry on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
    pub source: String,
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> ArrayView1<'_, f64> {
        self.eigenvectors.column(k)
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.eigenvectors * &self.eigenvalues;
        scaled.dot(&self.eigenvectors.t())
    }
}

/// Decomposes a symmetric matrix. The input is symmetrized as `(A + Aᵀ)/2`
/// after the symmetry check.
pub fn eigendecompose(a: ArrayView2<f64>) -> Result<EigenDecomposition> {
    eigendecompose_tagged(a, "")
}

pub fn eigendecompose_tagged(a: ArrayView2<f64>, source: &str) -> Result<EigenDecomposition> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let asym = crate::covariance::max_asymmetry(a);
    if asym > SYMMETRY_TOL * scale.max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }

    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }
    let (diag, vectors, sweeps) = jacobi(&mut m, n)?;
    Ok(sorted(diag, vectors, n, source, sweeps))
}

/// Cyclic-by-row Jacobi on a dense row-major symmetric matrix. Returns the
/// diagonal, the accumulated rotations (row-major, eigenvectors in columns)
/// and the number of sweeps performed.
fn jacobi(a: &mut [f64], n: usize) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if total == 0.0 {
        return Ok((vec![0.0; n], v, 0));
    }
    let target = JACOBI_TOL * total;

    for sweep in 0..=MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        let off = (2.0 * off).sqrt();
        if off <= target {
            let diag = (0..n).map(|i| a[i * n + i]).collect();
            return Ok((diag, v, sweep));
        }
        if sweep == MAX_SWEEPS {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let g = a[k * n + p];
                    let h = a[k * n + q];
                    let kp = g - s * (h + g * tau);
                    let kq = h + s * (g - h * tau);
                    a[k * n + p] = kp;
                    a[p * n + k] = kp;
                    a[k * n + q] = kq;
                    a[q * n + k] = kq;
                }
                for k in 0..n {
                    let g = v[k * n + p];
                    let h = v[k * n + q];
                    v[k * n + p] = g - s * (h + g * tau);
                    v[k * n + q] = h + s * (g - h * tau);
                }
            }
        }
    }
    Err(Error::NoConvergence(MAX_SWEEPS))
}

fn sorted(
    diag: Vec<f64>,
    v: Vec<f64>,
    n: usize,
    source: &str,
    sweeps: usize,
) -> EigenDecomposition {
    let mut columns: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i * n + k]).collect();
            fix_sign(&mut col);
            (diag[k], col)
        })
        .collect();
    columns.sort_by(|(la, va), (lb, vb)| {
        lb.total_cmp(la).then_with(|| {
            va.iter()
                .zip(vb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
    let eigenvalues = columns.iter().map(|(l, _)| *l).collect();
    let eigenvectors = Array2::from_shape_fn((n, n), |(i, k)| columns[k].1[i]);
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
        source: source.to_string(),
        sweeps,
    }
}

fn fix_sign(col: &mut [f64]) {
    let mut best = 0;
    for (i, x) in col.iter().enumerate() {
        if x.abs() > col[best].abs() {
            best = i;
        }
    }
    if col[best] < 0.0 {
        for x in col.iter_mut() {
            *x = -*x;
        }
    }
}

fn check_unit(v: ArrayView1<f64>) -> Result<()> {
    let norm = v.dot(&v).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "vector is not unit-norm (norm {norm})"
        )));
    }
    Ok(())
}

/// Pure-state fidelity of two real unit vectors, `(v·w)²`.
pub fn fidelity(v: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<f64> {
    Ok(overlap(v, w)?.powi(2).min(1.0))
}

/// Linear overlap `|v·w|` of two real unit vectors.
pub fn overlap(v: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<f64> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: w.len(),
        });
    }
    check_unit(v)?;
    check_unit(w)?;
    Ok(v.dot(&w).abs().min(1.0))
}

/// Spectra of `Q` and `rho_bar` aligned with `rho_bar` shifted by `shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparison {
    pub lambda_q: Array1<f64>,
    pub lambda_rho: Array1<f64>,
    pub shift: usize,
    pub max_rel_diff: f64,
}

/// Compares `λ^rho[k + shift]` against `λ^Q[k]`, relative to `λ^Q[0]`,
/// over the indices where `λ^Q[k] ≥ EIGENVALUE_FLOOR · λ^Q[0]`.
pub fn compare_spectra(
    dq: &EigenDecomposition,
    drho: &EigenDecomposition,
    shift: usize,
) -> Result<SpectrumComparison> {
    if dq.dim() != drho.dim() {
        return Err(Error::DimensionMismatch {
            expected: dq.dim(),
            found: drho.dim(),
        });
    }
    if shift > 1 {
        return Err(Error::InvalidInput(format!(
            "spectrum shift must be 0 or 1, got {shift}"
        )));
    }
    let lq = &dq.eigenvalues;
    let lr = &drho.eigenvalues;
    let top = lq[0];
    let denom = top.max(f64::MIN_POSITIVE);
    let floor = EIGENVALUE_FLOOR * top;
    let max_rel_diff = (0..lq.len())
        .filter(|&k| k + shift < lr.len() && lq[k] >= floor)
        .map(|k| (lr[k + shift] - lq[k]).abs() / denom)
        .fold(0.0, f64::max);
    Ok(SpectrumComparison {
        lambda_q: lq.clone(),
        lambda_rho: lr.clone(),
        shift,
        max_rel_diff,
    })
}

/// `index,lambda_q,lambda_rho` CSV of two spectra.
pub fn spectrum_csv(lambda_q: &Array1<f64>, lambda_rho: &Array1<f64>) -> String {
    let mut out = String::from("index,lambda_q,lambda_rho\n");
    for (k, (q, r)) in lambda_q.iter().zip(lambda_rho.iter()).enumerate() {
        writeln!(out, "{k},{},{}", crate::fmt_f64(*q), crate::fmt_f64(*r)).unwrap();
    }
    out
}

pub fn write_spectrum_csv(
    path: impl AsRef<Path>,
    lambda_q: &Array1<f64>,
    lambda_rho: &Array1<f64>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, spectrum_csv(lambda_q, lambda_rho)).map_err(|e| Error::io(path, e))
}
