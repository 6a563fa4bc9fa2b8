//! Classical and amplitude-encoded ("quantum") covariance matrices for
//! hyperspectral data.
//!
//! Amplitude encoding maps a data vector `x` onto the state `x / ||x||`, so
//! every point must be L2-normalized before it can be encoded. That last
//! normalization step breaks any centering done before it, and the average
//! density matrix `rho_bar = E[x xᵀ]` of the encoded data differs from the
//! classical covariance `Q` by the outer product of the post-normalization
//! mean: `Q = rho_bar - mu mu^T`.
//!
//! The crate is organized as a pipeline:
//!
//! * [`dataio`]: NPY/CSV readers, hyperspectral cube flattening and binary
//!   class-pair extraction.
//! * [`preprocess`]: standardization, partial centering `x - gamma * mean`
//!   and L2 normalization, composed in that fixed order.
//! * [`covariance`]: `Q`, `rho_bar`, `mu` and `mu ⊗ mu`.
//! * [`eigen`]: cyclic Jacobi eigensolver, fidelities, spectrum comparison.
//! * [`pca`]: the five preprocessing/projection schemes (CL, UC, UC-skip,
//!   C, HC).
//! * [`svm`]: RBF-kernel soft-margin SVM trained with SMO.
//! * [`experiment`]: cross-validated benchmark grid, spectrum reports and the
//!   centering-strength sweep.
//! * [`cli`]: run configuration and the `convert`/`eigen`/`sweep`/`classify`
//!   commands behind the `qcov` binary.

pub mod cli;
pub mod covariance;
pub mod dataio;
pub mod eigen;
mod error;
pub mod experiment;
pub mod pca;
pub mod preprocess;
pub mod svm;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits in scientific notation, the
/// representation used by every CSV this crate writes.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
