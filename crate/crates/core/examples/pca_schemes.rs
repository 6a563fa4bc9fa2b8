//! The five preprocessing + PCA schemes fitted on one training split and
//! applied to held-out rows.
//!
//! ```text
//! cargo run --example pca_schemes
//! ```

use ndarray::{s, Axis};
use qcov::dataio::{flatten_cube, select_pair, HsiCube};
use qcov::pca::{Scheme, SchemeFit, SchemeKind};

fn main() -> qcov::Result<()> {
    let scene = HsiCube::synthetic(5, 30, 30, 20, 3)?;
    let ds = select_pair(
        &flatten_cube(&scene, &[2, 3].into_iter().collect())?,
        "2/3".parse()?,
    )?;
    let split = ds.len() * 4 / 5;
    let train = ds.samples().slice(s![..split, ..]).to_owned();
    let test = ds.samples().slice(s![split.., ..]).to_owned();

    for kind in SchemeKind::ALL {
        // one eigendecomposition serves every component count
        let fit = SchemeFit::fit(train.view(), Scheme::new(kind))?;
        let model = fit.model(3)?;
        let z = model.transform(test.view())?;
        let spread = z.var_axis(Axis(0), 0.0);
        println!(
            "{:<8} eigenvalues {:.3e} {:.3e} {:.3e}  held-out variance {:.3e} {:.3e} {:.3e}",
            kind.name(),
            model.eigenvalues[0],
            model.eigenvalues[1],
            model.eigenvalues[2],
            spread[0],
            spread[1],
            spread[2]
        );
    }
    Ok(())
}
