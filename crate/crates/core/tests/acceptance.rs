//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Dataset-backed criteria read the Indian Pines scene from
//! `QCOV_IP_CUBE` + `QCOV_IP_GT` (NPY cube `H x W x B` and ground truth
//! `H x W`). Without them those criteria print `FAIL ... BLOCKED` and, unless
//! `QCOV_REQUIRE_DATA=1`, do not affect the exit status.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use common::{dual_objective, eigenvalues_oracle, max_abs_diff, rbf_gram, rng, svm_dual_oracle};
use ndarray::{s, Array1, Array2};
use qcov::covariance::{build_pair, outer};
use qcov::dataio::{flatten_cube, ClassPairTask, HsiCube, SpectralDataset};
use qcov::eigen::eigendecompose;
use qcov::experiment::{
    default_gamma_grid, find_crossing, find_overlap_crossing, make_folds, run_classification,
    run_gamma_sweep, run_spectrum_report, CvConfig, ExperimentReport,
};
use qcov::pca::{self, Scheme, SchemeKind};
use qcov::preprocess::{
    fit_stats, l2_normalize, partial_center, run_pipeline, FittedPipeline, PipelineConfig,
};
use qcov::svm::{train, GammaMode, SvmConfig};
use rand::Rng;

const IDENTITY_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-8;
const SVM_OBJECTIVE_TOL: f64 = 1e-3;
const SVM_KKT_TOL: f64 = 1e-3;
const SPECTRUM_TOL: f64 = 0.05;
const SHIFT_RATIO: f64 = 0.2;
const CROSSING_GAMMA: (f64, f64) = (0.95, 1.0);
const CROSSING_MU: (f64, f64) = (0.50, 0.80);
const TABLE_TOL: f64 = 0.05;
const UC_LEVEL: f64 = 0.54;
const UC_SKIP_MARGIN: f64 = 0.20;
const HC_TOL: f64 = 0.07;

const KS: [usize; 5] = [2, 3, 4, 5, 10];
const TASKS: [&str; 3] = ["3/10", "2/11", "5/8"];
/// Published test-accuracy means, columns CL, UC, UC-skip, C, HC.
const TABLE: [[[f64; 5]; 5]; 3] = [
    [
        [0.85, 0.54, 0.86, 0.84, 0.59],
        [0.91, 0.54, 0.93, 0.92, 0.80],
        [0.96, 0.54, 0.97, 0.98, 0.83],
        [0.98, 0.54, 0.99, 0.99, 0.94],
        [0.98, 0.54, 0.99, 0.99, 0.94],
    ],
    [
        [0.77, 0.63, 0.77, 0.74, 0.72],
        [0.78, 0.63, 0.78, 0.76, 0.77],
        [0.78, 0.63, 0.79, 0.81, 0.76],
        [0.81, 0.63, 0.81, 0.83, 0.77],
        [0.88, 0.63, 0.89, 0.88, 0.84],
    ],
    [
        [0.96, 0.83, 0.96, 0.96, 0.88],
        [0.97, 0.83, 0.98, 0.97, 0.96],
        [0.98, 0.83, 0.98, 0.98, 0.96],
        [0.99, 0.83, 0.99, 0.98, 0.96],
        [0.99, 0.83, 0.99, 0.99, 0.98],
    ],
];

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

struct Suite {
    failed: usize,
    blocked: usize,
}

impl Suite {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(detail) => println!("PASS  {name:<34} {detail} [{secs:.1}s]"),
            Outcome::Fail(detail) => {
                self.failed += 1;
                println!("FAIL  {name:<34} {detail} [{secs:.1}s]");
            }
            Outcome::Blocked(detail) => {
                self.blocked += 1;
                println!("FAIL  {name:<34} BLOCKED: {detail}");
            }
        }
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn random_unit_rows(r: &mut rand_chacha::ChaCha8Rng) -> Array2<f64> {
    let m = r.random_range(2..=200);
    let n = r.random_range(2..=50);
    let offset = r.random_range(-2.0..2.0);
    let x = common::random_matrix(r, m, n, offset - 1.0, offset + 1.0);
    l2_normalize(x.view()).unwrap()
}

fn identity_suite() -> Outcome {
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = random_unit_rows(&mut r);
        let pair = build_pair(x.view()).unwrap();
        let rhs = &pair.rho_bar - &outer(&pair.mu);
        worst = worst.max(max_abs_diff(pair.q.view(), rhs.view()));
    }
    verdict(
        worst <= IDENTITY_TOL,
        format!("max |Q - (rho - mu mu^T)| = {worst:.2e} (tol {IDENTITY_TOL:.0e})"),
    )
}

fn density_structure_suite() -> Outcome {
    let mut r = rng(2024);
    let (mut worst_trace, mut min_eig) = (0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let x = random_unit_rows(&mut r);
        let pair = build_pair(x.view()).unwrap();
        worst_trace = worst_trace.max((pair.rho_bar.diag().sum() - 1.0).abs());
        let ev = eigenvalues_oracle(pair.rho_bar.view());
        min_eig = min_eig.min(*ev.last().unwrap());
    }
    verdict(
        worst_trace <= TRACE_TOL && min_eig >= -PSD_TOL,
        format!("max |tr - 1| = {worst_trace:.2e}, min eigenvalue = {min_eig:.2e}"),
    )
}

fn eigen_oracle_suite() -> Outcome {
    let mut r = rng(77);
    let (mut worst_val, mut worst_rec) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let n = r.random_range(1..=12);
        let a = common::random_symmetric(&mut r, n);
        let d = match eigendecompose(a.view()) {
            Ok(d) => d,
            Err(e) => return Outcome::Fail(format!("n={n}: {e}")),
        };
        let oracle = eigenvalues_oracle(a.view());
        for (x, y) in d.eigenvalues.iter().zip(&oracle) {
            worst_val = worst_val.max((x - y).abs());
        }
        worst_rec = worst_rec.max(max_abs_diff(d.reconstruct().view(), a.view()));
    }
    verdict(
        worst_val <= EIGEN_TOL && worst_rec <= EIGEN_TOL,
        format!(
            "eigenvalue err {worst_val:.2e}, reconstruction {worst_rec:.2e} (tol {EIGEN_TOL:.0e})"
        ),
    )
}

fn svm_oracle_suite() -> Outcome {
    let mut r = rng(31);
    let (mut worst_obj, mut worst_kkt) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let m = r.random_range(2..=8);
        let n = r.random_range(1..=4);
        let x = common::random_matrix(&mut r, m, n, -2.0, 2.0);
        let mut y: Array1<u32> = (0..m).map(|_| r.random_range(0..2)).collect();
        y[0] = 0;
        y[1] = 1;
        let g = r.random_range(0.1..2.0);
        let c = [0.1, 1.0, 10.0][r.random_range(0..3)];
        let cfg = SvmConfig {
            c,
            gamma: GammaMode::Value(g),
            tol: SVM_KKT_TOL,
            ..SvmConfig::default()
        };
        let model = train(x.view(), y.view(), &cfg).unwrap();
        let ys: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let mut alpha = vec![0.0; m];
        for (sv, coef) in model
            .support_vectors
            .rows()
            .into_iter()
            .zip(model.dual_coefs.iter())
        {
            let i = x.rows().into_iter().position(|row| row == sv).unwrap();
            alpha[i] = coef.abs();
        }
        let k = rbf_gram(x.view(), g);
        let (_, oracle) = svm_dual_oracle(&k, &ys, c, 20_000);
        worst_obj = worst_obj.max((dual_objective(&k, &ys, &alpha) - oracle).abs());

        let f = model.decision_function(x.view()).unwrap();
        for i in 0..m {
            let margin = ys[i] * f[i];
            let v = if alpha[i] <= 1e-12 {
                (1.0 - margin).max(0.0)
            } else if alpha[i] >= c - 1e-12 {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            worst_kkt = worst_kkt.max(v);
        }
        let balance: f64 = alpha.iter().zip(&ys).map(|(a, y)| a * y).sum();
        worst_kkt = worst_kkt.max(balance.abs());
    }
    verdict(
        worst_obj <= SVM_OBJECTIVE_TOL && worst_kkt <= SVM_KKT_TOL + 1e-9,
        format!("objective gap {worst_obj:.2e}, KKT residual {worst_kkt:.2e} (tol {SVM_OBJECTIVE_TOL:.0e})"),
    )
}

fn pipeline_invariant_suite() -> Outcome {
    let mut problems = Vec::new();
    for seed in 0..50u64 {
        let mut r = rng(seed);
        let x = common::random_matrix(&mut r, 40, 8, 0.0, 10.0);
        let stats = fit_stats(x.view()).unwrap();
        let centered = partial_center(x.view(), &stats, 1.0).unwrap();
        let worst_mean = common::mean_oracle(centered.view())
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if worst_mean > 1e-10 {
            problems.push(format!("centered mean {worst_mean:.2e}"));
        }
        let once = l2_normalize(x.view()).unwrap();
        if max_abs_diff(once.view(), l2_normalize(once.view()).unwrap().view()) > 1e-15
            || max_abs_diff(
                once.view(),
                l2_normalize((&x * 37.5).view()).unwrap().view(),
            ) > 1e-14
        {
            problems.push("normalization".into());
        }
        let skip = pca::fit(x.view(), Scheme::new(SchemeKind::UcSkip), 3)
            .unwrap()
            .transform(x.view())
            .unwrap();
        let uc = pca::fit(x.view(), Scheme::new(SchemeKind::Uc), 4)
            .unwrap()
            .transform(x.view())
            .unwrap();
        if skip != uc.slice(s![.., 1..]) {
            problems.push("UC-skip column shift".into());
        }
        let labels: Array1<u32> = (0..40).map(|i| (i % 3) as u32).collect();
        let folds = make_folds(
            labels.view(),
            &CvConfig {
                folds: 5,
                seed,
                stratified: true,
            },
        )
        .unwrap();
        let mut seen = BTreeSet::new();
        for f in &folds {
            let train_set: BTreeSet<_> = f.train.iter().copied().collect();
            if f.test
                .iter()
                .any(|i| train_set.contains(i) || !seen.insert(*i))
            {
                problems.push("fold overlap".into());
            }
            let tr = x.select(ndarray::Axis(0), &f.train);
            let poisoned = x.select(ndarray::Axis(0), &f.test).mapv(|v| v * 1e9);
            let cfg = PipelineConfig::new(true, 0.95, true).unwrap();
            let (_, _, fitted) = run_pipeline(tr.view(), poisoned.view(), cfg).unwrap();
            if fitted != FittedPipeline::fit(tr.view(), cfg).unwrap() {
                problems.push("fold isolation".into());
            }
        }
        if seen.len() != 40 {
            problems.push("fold coverage".into());
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            "50 synthetic datasets".into()
        } else {
            problems.join(", ")
        },
    )
}

fn load_scene() -> Result<SpectralDataset, String> {
    let (Ok(cube), Ok(gt)) = (std::env::var("QCOV_IP_CUBE"), std::env::var("QCOV_IP_GT")) else {
        return Err("Indian Pines not present (set QCOV_IP_CUBE and QCOV_IP_GT)".into());
    };
    let scene = HsiCube::load(&cube, &gt).map_err(|e| e.to_string())?;
    flatten_cube(&scene, &[2, 3, 5, 8, 10, 11].into_iter().collect()).map_err(|e| e.to_string())
}

fn task(s: &str) -> ClassPairTask {
    s.parse().unwrap()
}

fn spectrum_top(ds: &SpectralDataset) -> Outcome {
    let rep = run_spectrum_report(ds, task("3/10"), 0.0).unwrap();
    let (s0, s1) = (rep.unshifted.max_rel_diff, rep.shifted.max_rel_diff);
    verdict(
        s1 <= SPECTRUM_TOL && s1 < SHIFT_RATIO * s0,
        format!("gamma=0: shift-1 {s1:.4}, shift-0 {s0:.4} (need <= {SPECTRUM_TOL}, ratio < {SHIFT_RATIO})"),
    )
}

fn spectrum_middle(ds: &SpectralDataset) -> Outcome {
    let rep = run_spectrum_report(ds, task("3/10"), 1.0).unwrap();
    let s0 = rep.unshifted.max_rel_diff;
    verdict(
        s0 <= SPECTRUM_TOL,
        format!("gamma=1: shift-0 {s0:.4}, |mu| {:.4}", rep.mu_norm),
    )
}

fn crossing(ds: &SpectralDataset) -> Outcome {
    let records = run_gamma_sweep(ds, task("3/10"), &default_gamma_grid()).unwrap();
    if let Some(c) = find_overlap_crossing(&records).unwrap() {
        println!(
            "INFO  overlap |v.w| crossing: gamma* = {:.4}, |mu| = {:.4}",
            c.gamma, c.mu_norm
        );
    }
    match find_crossing(&records).unwrap() {
        Some(c) => verdict(
            (CROSSING_GAMMA.0..=CROSSING_GAMMA.1).contains(&c.gamma)
                && (CROSSING_MU.0..=CROSSING_MU.1).contains(&c.mu_norm),
            format!("gamma* = {:.4}, |mu| = {:.4}", c.gamma, c.mu_norm),
        ),
        None => Outcome::Fail("no crossing on the grid".into()),
    }
}

/// UC-skip read as "n listed, n - 1 retained", against the same table column.
fn uc_skip_sensitivity(ds: &SpectralDataset) {
    let tasks: Vec<ClassPairTask> = TASKS.iter().map(|t| task(t)).collect();
    let retained: Vec<usize> = KS.iter().map(|k| k - 1).collect();
    let report = run_classification(
        ds,
        &tasks,
        &[Scheme::new(SchemeKind::UcSkip)],
        &retained,
        &CvConfig::default(),
        &SvmConfig::default(),
    );
    let mut worst = 0.0f64;
    for (ti, t) in TASKS.iter().enumerate() {
        for (ki, &k) in retained.iter().enumerate() {
            worst =
                worst.max((test_mean(&report, t, SchemeKind::UcSkip, k) - TABLE[ti][ki][2]).abs());
        }
    }
    println!("INFO  UC-skip with n-1 retained: max |test - table| = {worst:.3}");
}

fn table_report(ds: &SpectralDataset) -> ExperimentReport {
    let tasks: Vec<ClassPairTask> = TASKS.iter().map(|t| task(t)).collect();
    let schemes: Vec<Scheme> = SchemeKind::ALL.iter().map(|&k| Scheme::new(k)).collect();
    run_classification(
        ds,
        &tasks,
        &schemes,
        &KS,
        &CvConfig::default(),
        &SvmConfig::default(),
    )
}

fn test_mean(report: &ExperimentReport, t: &str, kind: SchemeKind, k: usize) -> f64 {
    report
        .get(task(t), kind, k)
        .map_or(f64::NAN, |r| r.test_mean)
}

fn table_a(report: &ExperimentReport) -> Outcome {
    let mut misses = Vec::new();
    for (ti, t) in TASKS.iter().enumerate() {
        for (ki, &k) in KS.iter().enumerate() {
            for (col, kind) in [
                (0, SchemeKind::Cl),
                (2, SchemeKind::UcSkip),
                (3, SchemeKind::C),
            ] {
                let got = test_mean(report, t, kind, k);
                let want = TABLE[ti][ki][col];
                if got.is_nan() || (got - want).abs() > TABLE_TOL {
                    misses.push(format!("{t} {kind} k={k}: {got:.3} vs {want:.2}"));
                }
            }
        }
    }
    verdict(
        misses.is_empty(),
        if misses.is_empty() {
            "45 cells within 0.05".into()
        } else {
            misses.join("; ")
        },
    )
}

fn table_b(report: &ExperimentReport) -> Outcome {
    let mut misses = Vec::new();
    for k in KS {
        let uc = test_mean(report, "3/10", SchemeKind::Uc, k);
        let skip = test_mean(report, "3/10", SchemeKind::UcSkip, k);
        if !((uc - UC_LEVEL).abs() <= TABLE_TOL && skip - uc >= UC_SKIP_MARGIN) {
            misses.push(format!("k={k}: UC {uc:.3}, UC-skip {skip:.3}"));
        }
    }
    verdict(
        misses.is_empty(),
        if misses.is_empty() {
            "UC flat at 0.54, UC-skip >= UC + 0.20".into()
        } else {
            misses.join("; ")
        },
    )
}

fn table_c(report: &ExperimentReport) -> Outcome {
    let uc = test_mean(report, "3/10", SchemeKind::Uc, 2);
    let hc = test_mean(report, "3/10", SchemeKind::Hc, 2);
    let skip = test_mean(report, "3/10", SchemeKind::UcSkip, 2);
    verdict(
        uc < hc && hc < skip && (hc - TABLE[0][0][4]).abs() <= HC_TOL,
        format!("3/10 k=2: UC {uc:.3} < HC {hc:.3} < UC-skip {skip:.3}"),
    )
}

/// The dataset criteria's code paths on a synthetic scene; informational only.
fn synthetic_rehearsal() {
    let (cube, gt) = common::synthetic_cube(5, 30, 30, 40, 3);
    let ds = flatten_cube(
        &HsiCube::new(cube, gt).unwrap(),
        &[1, 2, 3].into_iter().collect(),
    )
    .unwrap();
    let t = task("1/2");
    let top = run_spectrum_report(&ds, t, 0.0).unwrap();
    let mid = run_spectrum_report(&ds, t, 1.0).unwrap();
    let grid: Vec<f64> = default_gamma_grid().into_iter().step_by(4).collect();
    let records = run_gamma_sweep(&ds, t, &grid).unwrap();
    let cross = find_crossing(&records).unwrap();
    println!(
        "INFO  synthetic rehearsal: gamma=0 shift-1 {:.4} shift-0 {:.4}; gamma=1 shift-0 {:.4}; crossing {:?}",
        top.shifted.max_rel_diff, top.unshifted.max_rel_diff, mid.unshifted.max_rel_diff, cross.map(|c| (c.gamma, c.mu_norm))
    );
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--nocapture`; `--list` must
    // not run anything.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut suite = Suite {
        failed: 0,
        blocked: 0,
    };
    suite.check("identity Q = rho - mu mu^T", identity_suite);
    suite.check("rho trace and positivity", density_structure_suite);
    suite.check("eigensolver vs oracle", eigen_oracle_suite);
    suite.check("SVM vs QP oracle + KKT", svm_oracle_suite);

    match load_scene() {
        Ok(ds) => {
            suite.check("uncentered spectrum shift", || spectrum_top(&ds));
            suite.check("centered spectra match", || spectrum_middle(&ds));
            suite.check("fidelity crossing", || crossing(&ds));
            let start = Instant::now();
            let report = table_report(&ds);
            println!(
                "INFO  75-cell accuracy grid computed in {:.1}s",
                start.elapsed().as_secs_f64()
            );
            suite.check("accuracy table (a) CL/UC-skip/C", || table_a(&report));
            suite.check("accuracy table (b) UC plateau", || table_b(&report));
            suite.check("accuracy table (c) HC ordering", || table_c(&report));
            uc_skip_sensitivity(&ds);
        }
        Err(reason) => {
            for name in [
                "uncentered spectrum shift",
                "centered spectra match",
                "fidelity crossing",
                "accuracy table (a) CL/UC-skip/C",
                "accuracy table (b) UC plateau",
                "accuracy table (c) HC ordering",
            ] {
                suite.check(name, || Outcome::Blocked(reason.clone()));
            }
            synthetic_rehearsal();
        }
    }
    suite.check("pipeline invariants (synthetic)", pipeline_invariant_suite);

    println!(
        "{} failed, {} blocked on missing data",
        suite.failed, suite.blocked
    );
    let require_data = std::env::var("QCOV_REQUIRE_DATA").is_ok_and(|v| v == "1");
    if suite.failed > 0 || (require_data && suite.blocked > 0) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
