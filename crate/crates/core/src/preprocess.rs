//! Standardization, partial centering and L2 normalization.
//!
//! The pipeline order is fixed: standardize, then center by `gamma` times the
//! feature means, then L2-normalize each row. Statistics are population
//! (divide-by-`m`) statistics and are always fitted on training data; column
//! sums run left to right over rows in index order.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::{Error, Result};

/// Features with a standard deviation below this are treated as constant and
/// passed through unscaled by [`standardize`].
pub const CONSTANT_FEATURE_STD: f64 = 1e-12;

/// Rows with an L2 norm below this cannot be amplitude-encoded.
pub const ZERO_ROW_NORM: f64 = 1e-12;

/// Per-feature population mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub means: Array1<f64>,
    pub stds: Array1<f64>,
    pub fitted_on: usize,
}

impl FeatureStats {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Indices of features treated as constant.
    pub fn constant_features(&self) -> Vec<usize> {
        self.stds
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < CONSTANT_FEATURE_STD)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Strength of the centering step, `x -> x - gamma * mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteringConfig {
    gamma: f64,
}

impl CenteringConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub standardize: bool,
    pub gamma: f64,
    pub l2_normalize: bool,
}

impl PipelineConfig {
    pub fn new(standardize: bool, gamma: f64, l2_normalize: bool) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            standardize,
            gamma,
            l2_normalize,
        })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "centering gamma {gamma} is outside [0, 1]"
        )))
    }
}

fn check_dim(samples: &ArrayView2<f64>, n: usize) -> Result<()> {
    if samples.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: samples.ncols(),
        });
    }
    Ok(())
}

pub fn fit_stats(samples: ArrayView2<f64>) -> Result<FeatureStats> {
    let m = samples.nrows();
    if m == 0 {
        return Err(Error::Empty);
    }
    let means = column_means(samples);
    let mut sq = Array1::<f64>::zeros(samples.ncols());
    for row in samples.rows() {
        Zip::from(&mut sq)
            .and(&row)
            .and(&means)
            .for_each(|s, &x, &mu| {
                let d = x - mu;
                *s += d * d;
            });
    }
    let stds = sq.mapv(|s| (s / m as f64).sqrt());
    Ok(FeatureStats {
        means,
        stds,
        fitted_on: m,
    })
}

pub(crate) fn column_means(samples: ArrayView2<f64>) -> Array1<f64> {
    let mut sums = Array1::<f64>::zeros(samples.ncols());
    for row in samples.rows() {
        sums += &row;
    }
    sums / samples.nrows() as f64
}

/// Divides every non-constant feature by its standard deviation. Constant
/// features are returned unchanged and logged.
pub fn standardize(samples: ArrayView2<f64>, stats: &FeatureStats) -> Result<Array2<f64>> {
    check_dim(&samples, stats.dim())?;
    let constant = stats.constant_features();
    if !constant.is_empty() {
        log::warn!("constant features left unscaled: {constant:?}");
    }
    let scale = stats
        .stds
        .mapv(|s| if s < CONSTANT_FEATURE_STD { 1.0 } else { s });
    let mut out = samples.to_owned();
    for mut row in out.rows_mut() {
        row /= &scale;
    }
    Ok(out)
}

pub fn partial_center(
    samples: ArrayView2<f64>,
    stats: &FeatureStats,
    gamma: f64,
) -> Result<Array2<f64>> {
    check_gamma(gamma)?;
    check_dim(&samples, stats.dim())?;
    if gamma == 0.0 {
        return Ok(samples.to_owned());
    }
    let shift = &stats.means * gamma;
    let mut out = samples.to_owned();
    for mut row in out.rows_mut() {
        row -= &shift;
    }
    Ok(out)
}

pub fn l2_normalize(samples: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = samples.to_owned();
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm.is_nan() || norm < ZERO_ROW_NORM {
            return Err(Error::ZeroRow { row: i, norm });
        }
        row /= norm;
    }
    Ok(out)
}

/// Preprocessing fitted on a training split, reusable on any other split.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    config: PipelineConfig,
    /// Raw-unit statistics used for standardization.
    scale_stats: FeatureStats,
    /// Statistics of the standardized training data; their means drive the
    /// centering step.
    center_stats: FeatureStats,
}

impl FittedPipeline {
    pub fn fit(train: ArrayView2<f64>, config: PipelineConfig) -> Result<Self> {
        check_gamma(config.gamma)?;
        let scale_stats = fit_stats(train)?;
        let center_stats = if config.standardize {
            fit_stats(standardize(train, &scale_stats)?.view())?
        } else {
            scale_stats.clone()
        };
        Ok(Self {
            config,
            scale_stats,
            center_stats,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Statistics of the raw training data.
    pub fn stats(&self) -> &FeatureStats {
        &self.scale_stats
    }

    /// Means subtracted (times gamma) by the centering step, in standardized units.
    pub fn center_means(&self) -> &Array1<f64> {
        &self.center_stats.means
    }

    pub fn apply(&self, samples: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim(&samples, self.scale_stats.dim())?;
        let mut x = if self.config.standardize {
            standardize(samples, &self.scale_stats)?
        } else {
            samples.to_owned()
        };
        x = partial_center(x.view(), &self.center_stats, self.config.gamma)?;
        if self.config.l2_normalize {
            x = l2_normalize(x.view())?;
        }
        Ok(x)
    }
}

/// Fits the pipeline on `train` and applies it to both splits.
pub fn run_pipeline(
    train: ArrayView2<f64>,
    test: ArrayView2<f64>,
    cfg: PipelineConfig,
) -> Result<(Array2<f64>, Array2<f64>, FittedPipeline)> {
    check_dim(&test, train.ncols())?;
    let fitted = FittedPipeline::fit(train, cfg)?;
    let train_out = fitted.apply(train)?;
    let test_out = fitted.apply(test)?;
    Ok((train_out, test_out, fitted))
}
