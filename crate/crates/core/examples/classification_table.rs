//! Cross-validated accuracy of every scheme and component count for a set of
//! class pairs, rendered as a mean(std) table.
//!
//! ```text
//! cargo run --release --example classification_table [-- <cube.npy> <gt.npy>]
//! ```
//!
//! With a scene given, the tasks are 3/10, 2/11 and 5/8.

use std::collections::BTreeSet;

use qcov::dataio::{flatten_cube, ClassPairTask, HsiCube};
use qcov::experiment::{run_classification, CvConfig};
use qcov::pca::{Scheme, SchemeKind};
use qcov::svm::SvmConfig;

fn main() -> qcov::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (scene, tasks): (HsiCube, Vec<&str>) = match args.as_slice() {
        [cube, gt] => (HsiCube::load(cube, gt)?, vec!["3/10", "2/11", "5/8"]),
        _ => (HsiCube::synthetic(6, 40, 40, 30, 4)?, vec!["1/2", "3/4"]),
    };
    let tasks: Vec<ClassPairTask> = tasks
        .iter()
        .map(|t| t.parse())
        .collect::<qcov::Result<_>>()?;
    let keep: BTreeSet<u32> = tasks
        .iter()
        .flat_map(|t| [t.class_a(), t.class_b()])
        .collect();
    let ds = flatten_cube(&scene, &keep)?;

    let schemes: Vec<Scheme> = SchemeKind::ALL.iter().map(|&k| Scheme::new(k)).collect();
    let report = run_classification(
        &ds,
        &tasks,
        &schemes,
        &[2, 3, 4, 5, 10],
        &CvConfig::default(),
        &SvmConfig::default(),
    );
    print!("{}", report.render_table());
    if report.failed_cells() > 0 {
        eprintln!("{} cells failed", report.failed_cells());
    }
    Ok(())
}
