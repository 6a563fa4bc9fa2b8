//! Experiment orchestration: stratified k-fold classification benchmarks over
//! preprocessing schemes, spectrum reports, and the centering-strength sweep
//! of eigenvector fidelities.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::covariance::{build_pair, CovariancePair};
use crate::dataio::{select_pair, ClassPairTask, SpectralDataset};
use crate::eigen::{
    compare_spectra, eigendecompose_tagged, fidelity, overlap, EigenDecomposition,
    SpectrumComparison,
};
use crate::pca::{Scheme, SchemeFit, SchemeKind};
use crate::preprocess::{check_gamma, FittedPipeline, PipelineConfig};
use crate::svm::{accuracy, train, SvmConfig};
use crate::{fmt_f64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits sample indices into `cfg.folds` folds. With stratification each
/// class is shuffled and dealt round-robin, continuing the deal across
/// classes so fold sizes also stay balanced. Index lists are sorted.
pub fn make_folds(labels: ArrayView1<u32>, cfg: &CvConfig) -> Result<Vec<Fold>> {
    if cfg.folds < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 folds, got {}",
            cfg.folds
        )));
    }
    let m = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut assignment = vec![0usize; m];
    if cfg.stratified {
        let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_class.entry(l).or_default().push(i);
        }
        if let Some((class, members)) = by_class.iter().find(|(_, v)| v.len() < cfg.folds) {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} samples, fewer than {} folds",
                members.len(),
                cfg.folds
            )));
        }
        let mut dealt = 0;
        for members in by_class.values_mut() {
            members.shuffle(&mut rng);
            for &i in members.iter() {
                assignment[i] = dealt % cfg.folds;
                dealt += 1;
            }
        }
    } else {
        if m < cfg.folds {
            return Err(Error::InvalidInput(format!(
                "{m} samples cannot fill {} folds",
                cfg.folds
            )));
        }
        let mut idx: Vec<usize> = (0..m).collect();
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            assignment[i] = pos % cfg.folds;
        }
    }
    Ok((0..cfg.folds)
        .map(|f| Fold {
            train: (0..m).filter(|&i| assignment[i] != f).collect(),
            test: (0..m).filter(|&i| assignment[i] == f).collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

impl CellStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, CellStatus::Ok)
    }
}

/// Accuracy of one (task, scheme, component count) cell across folds.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub task: ClassPairTask,
    pub scheme: SchemeKind,
    pub n_components: usize,
    pub train_mean: f64,
    pub train_std: f64,
    pub test_mean: f64,
    pub test_std: f64,
    pub folds: usize,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn get(&self, task: ClassPairTask, scheme: SchemeKind, k: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.task == task && r.scheme == scheme && r.n_components == k)
    }

    pub fn failed_cells(&self) -> usize {
        self.rows.iter().filter(|r| !r.status.is_ok()).count()
    }

    pub const CSV_HEADER: &'static str =
        "task,scheme,n_components,train_mean,train_std,test_mean,test_std,folds,status";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let status = match &r.status {
                CellStatus::Ok => "ok".to_string(),
                CellStatus::Failed(msg) => format!("failed: {}", msg.replace([',', '\n'], ";")),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.task,
                r.scheme,
                r.n_components,
                fmt_f64(r.train_mean),
                fmt_f64(r.train_std),
                fmt_f64(r.test_mean),
                fmt_f64(r.test_std),
                r.folds,
                status
            )
            .unwrap();
        }
        out
    }

    /// Text table with `mean(std)` cells at two decimals: one line per
    /// (task, k), a Train and Test column per scheme.
    pub fn render_table(&self) -> String {
        let mut schemes: Vec<SchemeKind> = Vec::new();
        let mut keys: Vec<(ClassPairTask, usize)> = Vec::new();
        for r in &self.rows {
            if !schemes.contains(&r.scheme) {
                schemes.push(r.scheme);
            }
            if !keys.contains(&(r.task, r.n_components)) {
                keys.push((r.task, r.n_components));
            }
        }
        let cell = |mean: f64, std: f64| format!("{mean:.2}({std:.2})");
        let mut out = String::new();
        write!(out, "{:<6} {:>3}", "Task", "n").unwrap();
        for s in &schemes {
            write!(out, " | {:^23}", s.name()).unwrap();
        }
        out.push('\n');
        write!(out, "{:<6} {:>3}", "", "").unwrap();
        for _ in &schemes {
            write!(out, " | {:>11} {:>11}", "Train", "Test").unwrap();
        }
        out.push('\n');
        let mut last_task = None;
        for (task, k) in keys {
            let label = if last_task == Some(task) {
                String::new()
            } else {
                task.to_string()
            };
            last_task = Some(task);
            write!(out, "{label:<6} {k:>3}").unwrap();
            for &s in &schemes {
                match self.get(task, s, k) {
                    Some(r) if r.status.is_ok() => write!(
                        out,
                        " | {:>11} {:>11}",
                        cell(r.train_mean, r.train_std),
                        cell(r.test_mean, r.test_std)
                    )
                    .unwrap(),
                    _ => write!(out, " | {:>11} {:>11}", "failed", "failed").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Train/test accuracy of one fold for each requested component count.
pub fn evaluate_fold(
    ds: &SpectralDataset,
    fold: &Fold,
    scheme: Scheme,
    ks: &[usize],
    svm_cfg: &SvmConfig,
) -> Result<Vec<Result<(f64, f64)>>> {
    let x = ds.samples();
    let y = ds.labels();
    let x_train = x.select(Axis(0), &fold.train);
    let x_test = x.select(Axis(0), &fold.test);
    let y_train = y.select(Axis(0), &fold.train);
    let y_test = y.select(Axis(0), &fold.test);
    let fit = SchemeFit::fit(x_train.view(), scheme)?;
    Ok(ks
        .iter()
        .map(|&k| {
            let model = fit.model(k)?;
            let z_train = model.transform(x_train.view())?;
            let z_test = model.transform(x_test.view())?;
            let svm = train(z_train.view(), y_train.view(), svm_cfg)?;
            let (p_train, _) = svm.predict(z_train.view())?;
            let (p_test, _) = svm.predict(z_test.view())?;
            Ok((
                accuracy(y_train.view(), p_train.view())?,
                accuracy(y_test.view(), p_test.view())?,
            ))
        })
        .collect())
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// (task, fold, scheme) indices of one unit of work.
type UnitKey = (usize, usize, usize);
/// Per-k (train, test) accuracies of one unit.
type UnitResult = Result<Vec<Result<(f64, f64)>>>;

/// Runs the full (task, scheme, k) grid under cross-validation. Units of
/// work (task, fold, scheme) run on the current rayon pool; the report row
/// order follows the order of `tasks`, `schemes` and `ks`.
pub fn run_classification(
    ds: &SpectralDataset,
    tasks: &[ClassPairTask],
    schemes: &[Scheme],
    ks: &[usize],
    cv: &CvConfig,
    svm_cfg: &SvmConfig,
) -> ExperimentReport {
    let prepared: Vec<Result<(SpectralDataset, Vec<Fold>)>> = tasks
        .iter()
        .map(|&task| {
            let pair = select_pair(ds, task)?;
            let folds = make_folds(pair.labels().view(), cv)?;
            Ok((pair, folds))
        })
        .collect();

    let mut units = Vec::new();
    for (t, p) in prepared.iter().enumerate() {
        if let Ok((_, folds)) = p {
            for f in 0..folds.len() {
                for s in 0..schemes.len() {
                    units.push((t, f, s));
                }
            }
        }
    }
    let results: Vec<(UnitKey, UnitResult)> = units
        .into_par_iter()
        .map(|(t, f, s)| {
            let (pair, folds) = prepared[t]
                .as_ref()
                .expect("only prepared tasks are scheduled");
            (
                (t, f, s),
                evaluate_fold(pair, &folds[f], schemes[s], ks, svm_cfg),
            )
        })
        .collect();
    let mut by_unit: BTreeMap<UnitKey, UnitResult> = results.into_iter().collect();

    let mut rows = Vec::with_capacity(tasks.len() * schemes.len() * ks.len());
    for (t, &task) in tasks.iter().enumerate() {
        for (s, scheme) in schemes.iter().enumerate() {
            for (ki, &k) in ks.iter().enumerate() {
                let mut row = ReportRow {
                    task,
                    scheme: scheme.kind(),
                    n_components: k,
                    train_mean: f64::NAN,
                    train_std: f64::NAN,
                    test_mean: f64::NAN,
                    test_std: f64::NAN,
                    folds: cv.folds,
                    status: CellStatus::Ok,
                };
                match &prepared[t] {
                    Err(e) => row.status = CellStatus::Failed(e.to_string()),
                    Ok((_, folds)) => {
                        let mut train_acc = Vec::with_capacity(folds.len());
                        let mut test_acc = Vec::with_capacity(folds.len());
                        for f in 0..folds.len() {
                            let outcome = match by_unit.get_mut(&(t, f, s)).expect("every unit ran")
                            {
                                Err(e) => Err(e.to_string()),
                                Ok(per_k) => match &per_k[ki] {
                                    Ok(acc) => Ok(*acc),
                                    Err(e) => Err(e.to_string()),
                                },
                            };
                            match outcome {
                                Ok((a, b)) => {
                                    train_acc.push(a);
                                    test_acc.push(b);
                                }
                                Err(msg) => {
                                    row.status = CellStatus::Failed(format!("fold {f}: {msg}"));
                                    break;
                                }
                            }
                        }
                        if row.status.is_ok() {
                            (row.train_mean, row.train_std) = mean_std(&train_acc);
                            (row.test_mean, row.test_std) = mean_std(&test_acc);
                        }
                    }
                }
                rows.push(row);
            }
        }
    }
    by_unit.clear();
    ExperimentReport { rows }
}

/// Standardize, center by `gamma`, L2-normalize the whole subset (no
/// cross-validation), then build `Q` and `rho_bar`.
pub fn preprocess_pair(
    ds: &SpectralDataset,
    task: ClassPairTask,
    gamma: f64,
) -> Result<CovariancePair> {
    check_gamma(gamma)?;
    let pair = select_pair(ds, task)?;
    let cfg = PipelineConfig::new(true, gamma, true)?;
    let fitted = FittedPipeline::fit(pair.samples(), cfg)?;
    let x = fitted.apply(pair.samples())?;
    build_pair(x.view())
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub task: ClassPairTask,
    pub gamma: f64,
    pub mu_norm: f64,
    pub q: EigenDecomposition,
    pub rho_bar: EigenDecomposition,
    pub unshifted: SpectrumComparison,
    pub shifted: SpectrumComparison,
}

impl SpectrumReport {
    pub fn to_csv(&self) -> String {
        crate::eigen::spectrum_csv(&self.q.eigenvalues, &self.rho_bar.eigenvalues)
    }

    pub fn summary(&self) -> String {
        format!(
            "task {} gamma {} |mu| {:.6}: shift-0 max_rel_diff {:.6e}, shift-1 max_rel_diff {:.6e}",
            self.task,
            self.gamma,
            self.mu_norm,
            self.unshifted.max_rel_diff,
            self.shifted.max_rel_diff
        )
    }
}

pub fn run_spectrum_report(
    ds: &SpectralDataset,
    task: ClassPairTask,
    gamma: f64,
) -> Result<SpectrumReport> {
    let pair = preprocess_pair(ds, task, gamma)?;
    let q = eigendecompose_tagged(pair.q.view(), "Q")?;
    let rho_bar = eigendecompose_tagged(pair.rho_bar.view(), "rho_bar")?;
    Ok(SpectrumReport {
        task,
        gamma,
        mu_norm: pair.mu_norm(),
        unshifted: compare_spectra(&q, &rho_bar, 0)?,
        shifted: compare_spectra(&q, &rho_bar, 1)?,
        q,
        rho_bar,
    })
}

/// Relation between the leading eigenvector of `Q` and the two leading
/// eigenvectors of `rho_bar` at one centering strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub gamma: f64,
    pub mu_norm: f64,
    pub fid_q1_rho0: f64,
    pub fid_q1_rho1: f64,
    pub overlap_q1_rho0: f64,
    pub overlap_q1_rho1: f64,
}

impl SweepRecord {
    pub fn from_pair(gamma: f64, pair: &CovariancePair) -> Result<Self> {
        let q = eigendecompose_tagged(pair.q.view(), "Q")?;
        let rho = eigendecompose_tagged(pair.rho_bar.view(), "rho_bar")?;
        if rho.dim() < 2 {
            return Err(Error::InvalidInput(
                "sweep needs at least 2 features".into(),
            ));
        }
        let q0 = q.vector(0);
        Ok(Self {
            gamma,
            mu_norm: pair.mu_norm(),
            fid_q1_rho0: fidelity(q0, rho.vector(0))?,
            fid_q1_rho1: fidelity(q0, rho.vector(1))?,
            overlap_q1_rho0: overlap(q0, rho.vector(0))?,
            overlap_q1_rho1: overlap(q0, rho.vector(1))?,
        })
    }
}

/// 101 uniform points on `[0, 1]` plus 100 points at the midpoints of a
/// 0.001-spaced grid on `[0.9, 1.0]`: 201 distinct values, sorted.
pub fn default_gamma_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    grid.extend((0..100).map(|i| 0.9 + (i as f64 + 0.5) / 1000.0));
    grid.sort_by(f64::total_cmp);
    grid
}

pub fn run_gamma_sweep(
    ds: &SpectralDataset,
    task: ClassPairTask,
    grid: &[f64],
) -> Result<Vec<SweepRecord>> {
    for &g in grid {
        check_gamma(g)?;
    }
    let pair = select_pair(ds, task)?;
    let mut records = grid
        .par_iter()
        .map(|&gamma| {
            let cfg = PipelineConfig::new(true, gamma, true)?;
            let x = FittedPipeline::fit(pair.samples(), cfg)?.apply(pair.samples())?;
            SweepRecord::from_pair(gamma, &build_pair(x.view())?)
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
    Ok(records)
}

pub const SWEEP_CSV_HEADER: &str =
    "gamma,mu_norm,fid_q1_rho0,fid_q1_rho1,overlap_q1_rho0,overlap_q1_rho1";

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.gamma),
            fmt_f64(r.mu_norm),
            fmt_f64(r.fid_q1_rho0),
            fmt_f64(r.fid_q1_rho1),
            fmt_f64(r.overlap_q1_rho0),
            fmt_f64(r.overlap_q1_rho1)
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub gamma: f64,
    pub mu_norm: f64,
}

/// First sign change of `fid_q1_rho0 - fid_q1_rho1` along the sorted
/// records, linearly interpolated in both gamma and `||mu||`.
pub fn find_crossing(records: &[SweepRecord]) -> Result<Option<Crossing>> {
    crossing_by(records, |r| r.fid_q1_rho0 - r.fid_q1_rho1)
}

/// Same as [`find_crossing`] on the linear overlaps.
pub fn find_overlap_crossing(records: &[SweepRecord]) -> Result<Option<Crossing>> {
    crossing_by(records, |r| r.overlap_q1_rho0 - r.overlap_q1_rho1)
}

fn crossing_by(
    records: &[SweepRecord],
    diff: impl Fn(&SweepRecord) -> f64,
) -> Result<Option<Crossing>> {
    if records.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "crossing search needs at least 2 records, got {}",
            records.len()
        )));
    }
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (da, db) = (diff(a), diff(b));
        if da == 0.0 {
            return Ok(Some(Crossing {
                gamma: a.gamma,
                mu_norm: a.mu_norm,
            }));
        }
        if da.signum() != db.signum() {
            let t = if db == 0.0 { 1.0 } else { -da / (db - da) };
            return Ok(Some(Crossing {
                gamma: a.gamma + t * (b.gamma - a.gamma),
                mu_norm: a.mu_norm + t * (b.mu_norm - a.mu_norm),
            }));
        }
    }
    Ok(None)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Per-class sample counts of the labels of one fold split.
pub fn class_counts(labels: ArrayView1<u32>, idx: &[usize]) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for &i in idx {
        *counts.entry(labels[i]).or_insert(0) += 1;
    }
    counts
}
