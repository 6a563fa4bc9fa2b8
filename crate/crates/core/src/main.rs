use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcov::cli::{self, CommandOutcome, RunConfig};
use qcov::pca::SchemeKind;

#[derive(Parser)]
#[command(
    name = "qcov",
    version,
    about = "Classical vs. amplitude-encoded covariance analysis of hyperspectral data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Flat dataset (CSV file or NPY pair directory), or the cube NPY when --gt is given.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Ground-truth NPY for a cube given with --data.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Comma-separated class ids to keep when flattening a cube.
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<u32>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Flatten a cube + ground truth into a labeled dataset.
    Convert {
        #[command(flatten)]
        common: Common,
    },
    /// Spectra of Q and rho_bar with shift-0/shift-1 comparisons.
    Eigen {
        #[command(flatten)]
        common: Common,
        /// Class pair, e.g. 3/10.
        #[arg(long)]
        task: Option<String>,
        /// Centering strengths, comma-separated.
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
    },
    /// Eigenvector fidelities across centering strengths.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        task: Option<String>,
        /// `default` or comma-separated gamma values in [0, 1].
        #[arg(long)]
        grid: Option<String>,
    },
    /// Cross-validated PCA + RBF-SVM accuracy grid.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated class pairs, e.g. 3/10,2/11.
        #[arg(long, value_delimiter = ',')]
        tasks: Option<Vec<String>>,
        /// Comma-separated schemes out of CL, UC, UC-skip, C, HC.
        #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
        schemes: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        components: Option<Vec<usize>>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        gamma_hc: Option<f64>,
    },
}

fn parse_scheme(s: &str) -> Result<String, String> {
    s.parse::<SchemeKind>()
        .map(|k| k.name().to_string())
        .map_err(|e| e.to_string())
}

fn resolve(common: &Common) -> qcov::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(gt) = &common.gt {
        cfg.data.gt = Some(gt.clone());
        cfg.data.cube = common.data.clone().or(cfg.data.cube.take());
        cfg.data.dataset = None;
    } else if let Some(data) = &common.data {
        cfg.data.dataset = Some(data.clone());
        cfg.data.cube = None;
        cfg.data.gt = None;
    }
    if let Some(classes) = &common.classes {
        cfg.data.classes = classes.clone();
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> qcov::Result<CommandOutcome> {
    match cli.command {
        Command::Convert { common } => {
            let keep: BTreeSet<u32> = common
                .classes
                .clone()
                .unwrap_or_default()
                .into_iter()
                .collect();
            if keep.is_empty() {
                return Err(qcov::Error::Config("convert needs --classes".into()));
            }
            let cfg = resolve(&common)?;
            let (Some(cube), Some(gt)) = (cfg.data.cube.as_ref(), cfg.data.gt.as_ref()) else {
                return Err(qcov::Error::Config(
                    "convert needs --data <cube.npy> and --gt <gt.npy>".into(),
                ));
            };
            cli::cmd_convert(cube, gt, &cfg.out, &keep)
        }
        Command::Eigen {
            common,
            task,
            gamma,
        } => {
            let mut cfg = resolve(&common)?;
            if let Some(task) = task {
                cfg.eigen.task = task;
            }
            if let Some(gamma) = gamma {
                cfg.eigen.gammas = gamma;
            }
            cli::with_workers(cfg.workers, || cli::cmd_eigen(&cfg))?
        }
        Command::Sweep { common, task, grid } => {
            let mut cfg = resolve(&common)?;
            if let Some(task) = task {
                cfg.sweep.task = task;
            }
            if let Some(grid) = grid {
                cfg.sweep.grid = cli::parse_grid(&grid)?;
            }
            cli::with_workers(cfg.workers, || cli::cmd_sweep(&cfg))?
        }
        Command::Classify {
            common,
            tasks,
            schemes,
            components,
            folds,
            gamma_hc,
        } => {
            let mut cfg = resolve(&common)?;
            if let Some(tasks) = tasks {
                cfg.classify.tasks = tasks;
            }
            if let Some(schemes) = schemes {
                cfg.classify.schemes = schemes;
            }
            if let Some(components) = components {
                cfg.classify.components = components;
            }
            if let Some(folds) = folds {
                cfg.cv.folds = folds;
            }
            if let Some(g) = gamma_hc {
                cfg.classify.gamma_hc = g;
            }
            cli::with_workers(cfg.workers, || cli::cmd_classify(&cfg))?
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                qcov::Error::Config(_) | qcov::Error::InvalidInput(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
