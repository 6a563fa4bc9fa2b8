//! Fidelity of Q's leading eigenvector with rho_bar's first two eigenvectors
//! as the centering strength goes from 0 to 1, and where they cross.
//!
//! ```text
//! cargo run --release --example gamma_sweep [-- <cube.npy> <gt.npy> <A/B>]
//! ```

use qcov::dataio::{flatten_cube, ClassPairTask, HsiCube};
use qcov::experiment::{default_gamma_grid, find_crossing, find_overlap_crossing, run_gamma_sweep};

fn main() -> qcov::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (scene, task): (HsiCube, ClassPairTask) = match args.as_slice() {
        [cube, gt, task] => (HsiCube::load(cube, gt)?, task.parse()?),
        _ => (HsiCube::synthetic(4, 40, 40, 48, 3)?, "1/2".parse()?),
    };
    let ds = flatten_cube(
        &scene,
        &[task.class_a(), task.class_b()].into_iter().collect(),
    )?;

    let records = run_gamma_sweep(&ds, task, &default_gamma_grid())?;
    println!("gamma   |mu|    fid(q0,r0) fid(q0,r1)");
    for r in records.iter().step_by(10) {
        println!(
            "{:.4}  {:.4}  {:.4}     {:.4}",
            r.gamma, r.mu_norm, r.fid_q1_rho0, r.fid_q1_rho1
        );
    }
    match find_crossing(&records)? {
        Some(c) => println!(
            "fidelity crossing: gamma* = {:.4}, |mu| = {:.4}",
            c.gamma, c.mu_norm
        ),
        None => println!("no fidelity crossing on the grid"),
    }
    if let Some(c) = find_overlap_crossing(&records)? {
        println!(
            "overlap crossing:  gamma* = {:.4}, |mu| = {:.4}",
            c.gamma, c.mu_norm
        );
    }
    Ok(())
}
