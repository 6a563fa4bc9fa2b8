//! Eigenvalue spectra of Q and rho_bar for a class pair, compared with and
//! without a one-index shift.
//!
//! ```text
//! cargo run --release --example spectrum_report [-- <cube.npy> <gt.npy> <A/B>]
//! ```

use qcov::dataio::{flatten_cube, ClassPairTask, HsiCube};
use qcov::experiment::run_spectrum_report;

fn main() -> qcov::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (scene, task): (HsiCube, ClassPairTask) = match args.as_slice() {
        [cube, gt, task] => (HsiCube::load(cube, gt)?, task.parse()?),
        _ => (HsiCube::synthetic(3, 40, 40, 48, 3)?, "1/2".parse()?),
    };
    let ds = flatten_cube(
        &scene,
        &[task.class_a(), task.class_b()].into_iter().collect(),
    )?;

    for gamma in [0.0, 1.0] {
        let report = run_spectrum_report(&ds, task, gamma)?;
        println!("{}", report.summary());
        println!("  k  lambda_Q        lambda_rho");
        for k in 0..6.min(report.q.dim()) {
            println!(
                "  {k}  {:.6e}  {:.6e}",
                report.q.eigenvalues[k], report.rho_bar.eigenvalues[k]
            );
        }
    }
    Ok(())
}
