//! Run configuration and the commands behind the `qcov` binary.
//!
//! A run is described by a TOML file ([`RunConfig`]); command-line flags are
//! applied on top of it by the binary. Every command writes plain CSV
//! outputs plus a `manifest.toml` recording the resolved configuration, the
//! seed and SHA-256 hashes of every input, so a rerun from the manifest
//! reproduces the outputs byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{
    flatten_cube, load_dataset, save_dataset_csv, save_dataset_npy, ClassPairTask, HsiCube,
    SpectralDataset,
};
use crate::experiment::{
    default_gamma_grid, find_crossing, find_overlap_crossing, run_classification, run_gamma_sweep,
    run_spectrum_report, sweep_csv, write_text, CvConfig, ExperimentReport,
};
use crate::pca::{Scheme, SchemeKind, DEFAULT_GAMMA_HC};
use crate::svm::{GammaMode, SvmConfig};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads for grid parallelism; 0 uses every available core.
    pub workers: usize,
    pub out: PathBuf,
    pub data: DataConfig,
    pub eigen: EigenConfig,
    pub sweep: SweepConfig,
    pub classify: ClassifyConfig,
    pub cv: CvSection,
    pub svm: SvmSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 0,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            eigen: EigenConfig::default(),
            sweep: SweepConfig::default(),
            classify: ClassifyConfig::default(),
            cv: CvSection::default(),
            svm: SvmSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// `H x W x B` reflectance cube (NPY).
    pub cube: Option<PathBuf>,
    /// `H x W` ground truth (NPY); required together with `cube`.
    pub gt: Option<PathBuf>,
    /// Flat dataset: a `.csv` file or a directory with `samples.npy` and `labels.npy`.
    pub dataset: Option<PathBuf>,
    /// Classes kept when flattening a cube; defaults to the classes the
    /// command needs.
    pub classes: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    pub task: String,
    pub gammas: Vec<f64>,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            task: "3/10".into(),
            gammas: vec![0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub task: String,
    /// Explicit grid; empty selects the default 201-point grid.
    pub grid: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            task: "3/10".into(),
            grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub tasks: Vec<String>,
    pub schemes: Vec<String>,
    pub components: Vec<usize>,
    pub gamma_hc: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            tasks: vec!["3/10".into(), "2/11".into(), "5/8".into()],
            schemes: SchemeKind::ALL
                .iter()
                .map(|s| s.name().to_string())
                .collect(),
            components: vec![2, 3, 4, 5, 10],
            gamma_hc: DEFAULT_GAMMA_HC,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub folds: usize,
    pub stratified: bool,
}

impl Default for CvSection {
    fn default() -> Self {
        Self {
            folds: 5,
            stratified: true,
        }
    }
}

/// RBF width: the string `"scale"` or a positive number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    pub c: f64,
    pub gamma: GammaSetting,
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for SvmSection {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: GammaSetting::Named("scale".into()),
            tol: 1e-3,
            max_iter: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn cv_config(&self) -> Result<CvConfig> {
        if self.cv.folds < 2 {
            return Err(Error::Config(format!(
                "cv.folds must be at least 2, got {}",
                self.cv.folds
            )));
        }
        Ok(CvConfig {
            folds: self.cv.folds,
            seed: self.seed,
            stratified: self.cv.stratified,
        })
    }

    pub fn svm_config(&self) -> Result<SvmConfig> {
        let gamma = match &self.svm.gamma {
            GammaSetting::Value(g) => GammaMode::Value(*g),
            GammaSetting::Named(s) if s == "scale" => GammaMode::Scale,
            GammaSetting::Named(s) => {
                return Err(Error::Config(format!(
                    "svm.gamma must be \"scale\" or a number, got \"{s}\""
                )))
            }
        };
        let cfg = SvmConfig {
            c: self.svm.c,
            gamma,
            tol: self.svm.tol,
            max_iter: self.svm.max_iter,
            seed: self.seed,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        self.classify
            .schemes
            .iter()
            .map(|s| {
                let kind: SchemeKind = s.parse()?;
                Scheme::with_gamma_hc(kind, self.classify.gamma_hc)
            })
            .collect()
    }

    pub fn tasks(&self) -> Result<Vec<ClassPairTask>> {
        self.classify.tasks.iter().map(|t| t.parse()).collect()
    }

    pub fn sweep_grid(&self) -> Result<Vec<f64>> {
        if self.sweep.grid.is_empty() {
            return Ok(default_gamma_grid());
        }
        parse_grid_values(&self.sweep.grid)
    }

    /// Checks every embedded setting without touching the filesystem.
    pub fn validate(&self) -> Result<()> {
        self.cv_config()?;
        self.svm_config()?;
        self.schemes()?;
        self.tasks()?;
        self.eigen.task.parse::<ClassPairTask>()?;
        self.sweep.task.parse::<ClassPairTask>()?;
        parse_grid_values(&self.eigen.gammas)?;
        self.sweep_grid()?;
        if self.classify.components.contains(&0) {
            return Err(Error::Config("component counts must be positive".into()));
        }
        Ok(())
    }
}

fn parse_grid_values(values: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = values.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::Config(format!(
            "gamma value {bad} is outside [0, 1]"
        )));
    }
    let mut grid = values.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Parses a grid given as `default` or comma-separated values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    if spec.trim() == "default" {
        return Ok(Vec::new());
    }
    let values = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("'{s}' is not a gamma value")))
        })
        .collect::<Result<Vec<_>>>()?;
    parse_grid_values(&values)
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut hasher = Sha256::new();
    if path.is_dir() {
        // NPY pair directories hash their two payload files in name order
        for name in [crate::dataio::LABELS_FILE, crate::dataio::SAMPLES_FILE] {
            let p = path.join(name);
            let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
            hasher.update(name.as_bytes());
            hasher.update(&bytes);
        }
    } else {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    config: &'a RunConfig,
}

fn write_manifest(
    out: &Path,
    command: &str,
    cfg: &RunConfig,
    inputs: &[PathBuf],
    outputs: &[String],
) -> Result<()> {
    let inputs = inputs
        .iter()
        .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
        inputs,
        outputs: outputs.to_vec(),
        config: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    write_text(out.join(MANIFEST_FILE), &text)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// What a command produced: a human-readable summary and whether every
/// cell succeeded.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub summary: String,
    pub outputs: Vec<PathBuf>,
    pub clean: bool,
}

/// Loads the dataset named by `cfg.data`. Cubes are flattened to
/// `cfg.data.classes`, or to `needed` when no classes are configured.
pub fn load_input(
    cfg: &RunConfig,
    needed: &BTreeSet<u32>,
) -> Result<(SpectralDataset, Vec<PathBuf>)> {
    match (&cfg.data.cube, &cfg.data.gt, &cfg.data.dataset) {
        (Some(cube), Some(gt), _) => {
            let keep: BTreeSet<u32> = if cfg.data.classes.is_empty() {
                needed.clone()
            } else {
                cfg.data.classes.iter().copied().collect()
            };
            let ds = flatten_cube(&HsiCube::load(cube, gt)?, &keep)?;
            log::info!(
                "{}: {} samples x {} bands, classes {:?}",
                cube.display(),
                ds.len(),
                ds.band_count(),
                ds.class_counts()
            );
            Ok((ds, vec![cube.clone(), gt.clone()]))
        }
        (Some(_), None, _) => Err(Error::Config("data.cube needs data.gt".into())),
        (None, Some(_), _) => Err(Error::Config("data.gt needs data.cube".into())),
        (None, None, Some(path)) => {
            let ds = load_dataset(path)?;
            log::info!(
                "{}: {} samples x {} bands, classes {:?}",
                path.display(),
                ds.len(),
                ds.band_count(),
                ds.class_counts()
            );
            Ok((ds, vec![path.clone()]))
        }
        (None, None, None) => Err(Error::Config(
            "no input: set data.dataset or data.cube + data.gt".into(),
        )),
    }
}

fn task_classes(tasks: &[ClassPairTask]) -> BTreeSet<u32> {
    tasks
        .iter()
        .flat_map(|t| [t.class_a(), t.class_b()])
        .collect()
}

/// Flattens a cube to the kept classes and writes the dataset to `out`: an
/// NPY pair directory, or a single CSV file when `out` ends in `.csv`. A
/// metadata sidecar (`dataset.toml`, or `<out>.meta.toml` for CSV) records
/// class counts, band count and input hashes.
pub fn cmd_convert(
    cube_path: &Path,
    gt_path: &Path,
    out_path: &Path,
    keep_classes: &BTreeSet<u32>,
) -> Result<CommandOutcome> {
    if keep_classes.is_empty() {
        return Err(Error::Config(
            "convert needs at least one class to keep".into(),
        ));
    }
    let cube = HsiCube::load(cube_path, gt_path)?;
    let ds = flatten_cube(&cube, keep_classes)?;

    #[derive(Serialize)]
    struct Sidecar {
        samples: usize,
        band_count: usize,
        class_counts: BTreeMap<String, usize>,
        cube: String,
        cube_sha256: String,
        gt: String,
        gt_sha256: String,
    }
    let sidecar = Sidecar {
        samples: ds.len(),
        band_count: ds.band_count(),
        class_counts: ds
            .class_counts()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        cube: cube_path.display().to_string(),
        cube_sha256: sha256_file(cube_path)?,
        gt: gt_path.display().to_string(),
        gt_sha256: sha256_file(gt_path)?,
    };
    let sidecar_text = toml::to_string(&sidecar).map_err(|e| Error::Config(e.to_string()))?;

    let is_csv = out_path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let meta_path = if is_csv {
        if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        save_dataset_csv(&ds, out_path)?;
        PathBuf::from(format!("{}.meta.toml", out_path.display()))
    } else {
        save_dataset_npy(&ds, out_path)?;
        out_path.join("dataset.toml")
    };
    write_text(&meta_path, &sidecar_text)?;

    let counts: Vec<String> = ds
        .class_counts()
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect();
    Ok(CommandOutcome {
        summary: format!(
            "{} samples x {} bands (classes {}) -> {}",
            ds.len(),
            ds.band_count(),
            counts.join(" "),
            out_path.display()
        ),
        outputs: vec![out_path.to_path_buf(), meta_path],
        clean: true,
    })
}

fn gamma_tag(gamma: f64) -> String {
    format!("{gamma:.4}")
}

/// Spectrum CSV per configured gamma (`spectrum_g<gamma>.csv`) and a
/// shift-0/shift-1 comparison line per gamma.
pub fn cmd_eigen(cfg: &RunConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    let task: ClassPairTask = cfg.eigen.task.parse()?;
    let gammas = parse_grid_values(&cfg.eigen.gammas)?;
    let (ds, inputs) = load_input(cfg, &task_classes(&[task]))?;
    ensure_dir(&cfg.out)?;

    let mut summary = String::new();
    let mut outputs = Vec::new();
    for gamma in gammas {
        let report = run_spectrum_report(&ds, task, gamma)?;
        let name = format!("spectrum_g{}.csv", gamma_tag(gamma));
        write_text(cfg.out.join(&name), &report.to_csv())?;
        writeln!(summary, "{}", report.summary()).unwrap();
        outputs.push(name);
    }
    write_manifest(&cfg.out, "eigen", cfg, &inputs, &outputs)?;
    Ok(CommandOutcome {
        summary,
        outputs: outputs.iter().map(|o| cfg.out.join(o)).collect(),
        clean: true,
    })
}

/// `sweep.csv` over the gamma grid plus the fidelity crossing summary.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    let task: ClassPairTask = cfg.sweep.task.parse()?;
    let grid = cfg.sweep_grid()?;
    let (ds, inputs) = load_input(cfg, &task_classes(&[task]))?;
    ensure_dir(&cfg.out)?;

    let records = run_gamma_sweep(&ds, task, &grid)?;
    write_text(cfg.out.join("sweep.csv"), &sweep_csv(&records))?;
    let mut summary = String::new();
    match find_crossing(&records)? {
        Some(c) => writeln!(
            summary,
            "task {task}: fidelity crossing at gamma* = {:.4}, ||mu|| = {:.4}",
            c.gamma, c.mu_norm
        ),
        None => writeln!(summary, "task {task}: no fidelity crossing on the grid"),
    }
    .unwrap();
    if let Some(c) = find_overlap_crossing(&records)? {
        writeln!(
            summary,
            "task {task}: overlap crossing at gamma* = {:.4}, ||mu|| = {:.4}",
            c.gamma, c.mu_norm
        )
        .unwrap();
    }
    let outputs = vec!["sweep.csv".to_string()];
    write_manifest(&cfg.out, "sweep", cfg, &inputs, &outputs)?;
    Ok(CommandOutcome {
        summary,
        outputs: vec![cfg.out.join("sweep.csv")],
        clean: true,
    })
}

/// `report.csv` plus `table.txt`, the report rendered as a mean(std) table.
pub fn cmd_classify(cfg: &RunConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    let tasks = cfg.tasks()?;
    let schemes = cfg.schemes()?;
    let (ds, inputs) = load_input(cfg, &task_classes(&tasks))?;
    ensure_dir(&cfg.out)?;

    let report: ExperimentReport = run_classification(
        &ds,
        &tasks,
        &schemes,
        &cfg.classify.components,
        &cfg.cv_config()?,
        &cfg.svm_config()?,
    );
    let table = report.render_table();
    write_text(cfg.out.join("report.csv"), &report.to_csv())?;
    write_text(cfg.out.join("table.txt"), &table)?;
    let outputs = vec!["report.csv".to_string(), "table.txt".to_string()];
    write_manifest(&cfg.out, "classify", cfg, &inputs, &outputs)?;
    let failed = report.failed_cells();
    let mut summary = table;
    if failed > 0 {
        writeln!(summary, "{failed} cell(s) failed; see report.csv").unwrap();
    }
    Ok(CommandOutcome {
        summary,
        outputs: outputs.iter().map(|o| cfg.out.join(o)).collect(),
        clean: failed == 0,
    })
}

/// Runs `f` on a rayon pool of `workers` threads (0 = all cores).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
