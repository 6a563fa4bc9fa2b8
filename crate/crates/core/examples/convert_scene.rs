//! Flatten a hyperspectral scene into labeled samples and round-trip them
//! through the NPY pair and CSV formats.
//!
//! ```text
//! cargo run --example convert_scene [-- <cube.npy> <gt.npy>]
//! ```

use std::collections::BTreeSet;

use qcov::dataio::{
    flatten_cube, load_dataset, save_dataset_csv, save_dataset_npy, write_npy, HsiCube, NpyArray,
    NpyData,
};

fn main() -> qcov::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scene = match args.as_slice() {
        [cube, gt] => HsiCube::load(cube, gt)?,
        _ => {
            let scene = HsiCube::synthetic(1, 40, 40, 32, 4)?;
            // write it the way a numpy user would hand it over
            let (h, w) = scene.ground_truth().dim();
            write_npy(
                dir.path().join("cube.npy"),
                &NpyArray::from_f64(&scene.data().clone().into_dyn()),
            )?;
            let gt: Vec<u8> = scene.ground_truth().iter().map(|&c| c as u8).collect();
            write_npy(
                dir.path().join("gt.npy"),
                &NpyArray::new(vec![h, w], NpyData::U8(gt))?,
            )?;
            HsiCube::load(dir.path().join("cube.npy"), dir.path().join("gt.npy"))?
        }
    };
    let (h, w, b) = scene.data().dim();
    println!("scene {h}x{w}, {b} bands");

    let keep: BTreeSet<u32> = [1, 3].into_iter().collect();
    let ds = flatten_cube(&scene, &keep)?;
    println!("kept classes {:?}: {} samples", ds.class_counts(), ds.len());

    let npy_dir = dir.path().join("pair");
    save_dataset_npy(&ds, &npy_dir)?;
    let csv_path = dir.path().join("pair.csv");
    save_dataset_csv(&ds, &csv_path)?;

    let from_npy = load_dataset(&npy_dir)?;
    let from_csv = load_dataset(&csv_path)?;
    assert_eq!(from_npy.samples(), ds.samples());
    assert_eq!(from_csv.samples(), ds.samples());
    assert_eq!(from_csv.labels(), ds.labels());
    println!("NPY and CSV round trips are exact");
    Ok(())
}
