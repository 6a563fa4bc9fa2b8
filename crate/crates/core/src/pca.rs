//! Principal component projection under the five preprocessing schemes.
//!
//! | scheme  | centering gamma | L2 norm | matrix    | eigenvectors used |
//! |---------|-----------------|---------|-----------|-------------------|
//! | CL      | 1               | no      | `Q`       | `0..k`            |
//! | UC      | 0               | yes     | `rho_bar` | `0..k`            |
//! | UC-skip | 0               | yes     | `rho_bar` | `1..=k`           |
//! | C       | 1               | yes     | `rho_bar` | `0..k`            |
//! | HC      | `gamma_hc`      | yes     | `rho_bar` | `0..k`            |
//!
//! Every scheme standardizes first. Quantum schemes project the normalized
//! vectors as they are, without subtracting a mean after normalization.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use ndarray::{s, Array1, Array2, ArrayView2};

use crate::covariance::{classical_covariance, quantum_covariance};
use crate::eigen::{eigendecompose_tagged, EigenDecomposition};
use crate::preprocess::{check_gamma, FittedPipeline, PipelineConfig};
use crate::{Error, Result};

pub const DEFAULT_GAMMA_HC: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchemeKind {
    Cl,
    Uc,
    UcSkip,
    C,
    Hc,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Cl,
        SchemeKind::Uc,
        SchemeKind::UcSkip,
        SchemeKind::C,
        SchemeKind::Hc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Cl => "CL",
            SchemeKind::Uc => "UC",
            SchemeKind::UcSkip => "UC-skip",
            SchemeKind::C => "C",
            SchemeKind::Hc => "HC",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('_', "-").as_str() {
            "CL" => Ok(SchemeKind::Cl),
            "UC" => Ok(SchemeKind::Uc),
            "UC-SKIP" => Ok(SchemeKind::UcSkip),
            "C" => Ok(SchemeKind::C),
            "HC" => Ok(SchemeKind::Hc),
            _ => Err(Error::InvalidInput(format!(
                "unknown scheme '{s}'; valid schemes are CL, UC, UC-skip, C, HC"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    kind: SchemeKind,
    gamma_hc: f64,
}

impl Scheme {
    pub fn new(kind: SchemeKind) -> Self {
        Self {
            kind,
            gamma_hc: DEFAULT_GAMMA_HC,
        }
    }

    pub fn with_gamma_hc(kind: SchemeKind, gamma_hc: f64) -> Result<Self> {
        check_gamma(gamma_hc)?;
        Ok(Self { kind, gamma_hc })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn gamma_hc(&self) -> f64 {
        self.gamma_hc
    }

    pub fn skips_first(&self) -> bool {
        self.kind == SchemeKind::UcSkip
    }

    pub fn uses_rho_bar(&self) -> bool {
        self.kind != SchemeKind::Cl
    }

    pub fn pipeline(&self) -> PipelineConfig {
        let (gamma, l2_normalize) = match self.kind {
            SchemeKind::Cl => (1.0, false),
            SchemeKind::Uc | SchemeKind::UcSkip => (0.0, true),
            SchemeKind::C => (1.0, true),
            SchemeKind::Hc => (self.gamma_hc, true),
        };
        PipelineConfig {
            standardize: true,
            gamma,
            l2_normalize,
        }
    }

    /// Largest admissible component count for `n` features.
    pub fn max_components(&self, n: usize) -> usize {
        if self.skips_first() {
            n.saturating_sub(1)
        } else {
            n
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.kind, f)
    }
}

/// Full eigendecomposition for one scheme on one training split, from which
/// models with any admissible component count can be cut.
#[derive(Debug, Clone)]
pub struct SchemeFit {
    scheme: Scheme,
    pipeline: FittedPipeline,
    decomposition: EigenDecomposition,
}

impl SchemeFit {
    pub fn fit(train: ArrayView2<f64>, scheme: Scheme) -> Result<Self> {
        let pipeline = FittedPipeline::fit(train, scheme.pipeline())?;
        let x = pipeline.apply(train)?;
        let decomposition = if scheme.uses_rho_bar() {
            eigendecompose_tagged(quantum_covariance(x.view())?.view(), "rho_bar")?
        } else {
            eigendecompose_tagged(classical_covariance(x.view())?.view(), "Q")?
        };
        Ok(Self {
            scheme,
            pipeline,
            decomposition,
        })
    }

    pub fn decomposition(&self) -> &EigenDecomposition {
        &self.decomposition
    }

    pub fn pipeline(&self) -> &FittedPipeline {
        &self.pipeline
    }

    pub fn model(&self, k: usize) -> Result<PcaModel> {
        let n = self.decomposition.dim();
        let max = self.scheme.max_components(n);
        if k == 0 || k > max {
            return Err(Error::InvalidInput(format!(
                "{} components requested; scheme {} allows 1..={max} for {n} features",
                k, self.scheme
            )));
        }
        let first = usize::from(self.scheme.skips_first());
        let basis = self
            .decomposition
            .eigenvectors
            .slice(s![.., first..first + k])
            .to_owned();
        let eigenvalues = self
            .decomposition
            .eigenvalues
            .slice(s![first..first + k])
            .to_owned();
        Ok(PcaModel {
            scheme: self.scheme,
            pipeline: self.pipeline.clone(),
            basis,
            eigenvalues,
            component_count: k,
            skip_first: self.scheme.skips_first(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub scheme: Scheme,
    pub pipeline: FittedPipeline,
    /// `n x k`, orthonormal columns.
    pub basis: Array2<f64>,
    /// Eigenvalues belonging to the basis columns.
    pub eigenvalues: Array1<f64>,
    pub component_count: usize,
    pub skip_first: bool,
}

pub fn fit(train: ArrayView2<f64>, scheme: Scheme, k: usize) -> Result<PcaModel> {
    if k == 0 || k > scheme.max_components(train.ncols()) {
        return Err(Error::InvalidInput(format!(
            "{k} components requested; scheme {scheme} allows 1..={} for {} features",
            scheme.max_components(train.ncols()),
            train.ncols()
        )));
    }
    SchemeFit::fit(train, scheme)?.model(k)
}

pub fn transform(model: &PcaModel, data: ArrayView2<f64>) -> Result<Array2<f64>> {
    model.transform(data)
}

impl PcaModel {
    pub fn transform(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        let x = self.pipeline.apply(data)?;
        Ok(x.dot(&self.basis))
    }

    /// Key-value CSV of the model: scheme settings, fitted statistics and
    /// one `basis` line per feature (17 significant digits).
    pub fn to_csv(&self) -> String {
        let f = |v: &Array1<f64>| {
            v.iter()
                .map(|x| crate::fmt_f64(*x))
                .collect::<Vec<_>>()
                .join(",")
        };
        let cfg = self.pipeline.config();
        let mut out = String::new();
        writeln!(out, "scheme,{}", self.scheme).unwrap();
        writeln!(out, "n_components,{}", self.component_count).unwrap();
        writeln!(out, "skip_first,{}", self.skip_first).unwrap();
        writeln!(out, "gamma,{}", crate::fmt_f64(cfg.gamma)).unwrap();
        writeln!(out, "standardize,{}", cfg.standardize).unwrap();
        writeln!(out, "l2_normalize,{}", cfg.l2_normalize).unwrap();
        writeln!(out, "fitted_on,{}", self.pipeline.stats().fitted_on).unwrap();
        writeln!(out, "means,{}", f(&self.pipeline.stats().means)).unwrap();
        writeln!(out, "stds,{}", f(&self.pipeline.stats().stds)).unwrap();
        writeln!(out, "center_means,{}", f(self.pipeline.center_means())).unwrap();
        writeln!(out, "eigenvalues,{}", f(&self.eigenvalues)).unwrap();
        for row in self.basis.rows() {
            writeln!(out, "basis,{}", f(&row.to_owned())).unwrap();
        }
        out
    }
}
