//! Classical and quantum covariance of L2-normalized data, and the identity
//! that links them through the outer product of the mean.
//!
//! ```text
//! cargo run --example covariance_identity
//! ```

use qcov::covariance::{build_pair, max_asymmetry, outer, trace};
use qcov::dataio::{flatten_cube, select_pair, HsiCube};
use qcov::preprocess::{FittedPipeline, PipelineConfig};

fn main() -> qcov::Result<()> {
    let scene = HsiCube::synthetic(2, 30, 30, 24, 3)?;
    let ds = flatten_cube(&scene, &[1, 2].into_iter().collect())?;
    let pair = select_pair(&ds, "1/2".parse()?)?;

    for gamma in [0.0, 0.5, 0.95, 1.0] {
        let cfg = PipelineConfig::new(true, gamma, true)?;
        let x = FittedPipeline::fit(pair.samples(), cfg)?.apply(pair.samples())?;
        let cov = build_pair(x.view())?;
        let residual = (&cov.q - &(&cov.rho_bar - &outer(&cov.mu)))
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        println!(
            "gamma {gamma:<4}  |mu| {:.4}  tr(rho) {:.12}  tr(Q) {:.4}  identity residual {residual:.1e}  asymmetry {:.1e}",
            cov.mu_norm(),
            trace(cov.rho_bar.view()),
            trace(cov.q.view()),
            max_asymmetry(cov.rho_bar.view()),
        );
    }
    Ok(())
}
