//! Classical covariance `Q`, quantum covariance `rho_bar` and the mean
//! outer product `M = mu ⊗ mu`, related by `Q = rho_bar - M`.
//!
//! All averages are population averages (divide by `m`). Sums run over rows
//! in index order; only the upper triangle is accumulated and the lower
//! triangle is mirrored from it, so every matrix here is exactly symmetric.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};

use crate::{Error, Result};

/// Tolerance on row norms accepted as "unit" by [`quantum_covariance`].
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Covariance matrices of one L2-normalized dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    pub q: Array2<f64>,
    pub rho_bar: Array2<f64>,
    pub mu: Array1<f64>,
    pub m_outer: Array2<f64>,
    pub sample_count: usize,
}

impl CovariancePair {
    pub fn mu_norm(&self) -> f64 {
        self.mu.dot(&self.mu).sqrt()
    }
}

pub fn mean_vector(samples: ArrayView2<f64>) -> Result<Array1<f64>> {
    if samples.nrows() == 0 {
        return Err(Error::Empty);
    }
    Ok(crate::preprocess::column_means(samples))
}

/// `(1/m) Σ_i x_i x_iᵀ` over rows, upper triangle accumulated then mirrored.
fn second_moment(samples: ArrayView2<f64>) -> Array2<f64> {
    let (m, n) = samples.dim();
    let mut acc = Array2::<f64>::zeros((n, n));
    let mut row_buf = vec![0.0; n];
    for row in samples.rows() {
        for (b, v) in row_buf.iter_mut().zip(row.iter()) {
            *b = *v;
        }
        for a in 0..n {
            let xa = row_buf[a];
            if xa == 0.0 {
                continue;
            }
            let mut acc_row = acc.row_mut(a);
            let acc_slice = acc_row.as_slice_mut().expect("standard layout");
            for b in a..n {
                acc_slice[b] += xa * row_buf[b];
            }
        }
    }
    let inv_m = 1.0 / m as f64;
    for a in 0..n {
        for b in a..n {
            let v = acc[[a, b]] * inv_m;
            acc[[a, b]] = v;
            acc[[b, a]] = v;
        }
    }
    acc
}

/// Average amplitude-encoded density matrix of unit-norm rows.
pub fn quantum_covariance(normalized_samples: ArrayView2<f64>) -> Result<Array2<f64>> {
    if normalized_samples.nrows() == 0 {
        return Err(Error::Empty);
    }
    for (i, row) in normalized_samples.rows().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm.is_nan() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotNormalized { row: i, norm });
        }
    }
    Ok(second_moment(normalized_samples))
}

/// Population covariance, computed from mean-subtracted rows.
pub fn classical_covariance(samples: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mu = mean_vector(samples)?;
    let mut centered = samples.to_owned();
    for mut row in centered.rows_mut() {
        row -= &mu;
    }
    Ok(second_moment(centered.view()))
}

pub fn outer(v: &Array1<f64>) -> Array2<f64> {
    let n = v.len();
    Array2::from_shape_fn((n, n), |(a, b)| v[a] * v[b])
}

pub fn build_pair(normalized_samples: ArrayView2<f64>) -> Result<CovariancePair> {
    let rho_bar = quantum_covariance(normalized_samples)?;
    let q = classical_covariance(normalized_samples)?;
    let mu = mean_vector(normalized_samples)?;
    let m_outer = outer(&mu);
    Ok(CovariancePair {
        q,
        rho_bar,
        mu,
        m_outer,
        sample_count: normalized_samples.nrows(),
    })
}

/// Largest entry of `|A - Aᵀ|`.
pub fn max_asymmetry(a: ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

pub fn trace(a: ArrayView2<f64>) -> f64 {
    a.diag().sum()
}

/// Renders a matrix as row-major CSV with 17 significant digits and no header.
pub fn matrix_to_csv(a: ArrayView2<f64>) -> String {
    let mut out = String::new();
    for row in a.rows() {
        let cells: Vec<String> = row.iter().map(|&v| crate::fmt_f64(v)).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

pub fn write_matrix_csv(path: impl AsRef<Path>, a: ArrayView2<f64>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, matrix_to_csv(a)).map_err(|e| Error::io(path, e))
}
