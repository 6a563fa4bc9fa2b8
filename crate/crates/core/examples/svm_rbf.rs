//! Train the RBF-kernel SVM on two interleaved spirals and report
//! accuracy, support vectors and convergence.
//!
//! ```text
//! cargo run --release --example svm_rbf
//! ```

use ndarray::{Array1, Array2};
use qcov::svm::{accuracy, train, GammaMode, SvmConfig};

fn spirals(points_per_arm: usize) -> (Array2<f64>, Array1<u32>) {
    let m = 2 * points_per_arm;
    let mut x = Array2::zeros((m, 2));
    let mut y = Array1::zeros(m);
    for i in 0..m {
        let arm = i % 2;
        let t = (i / 2) as f64 / points_per_arm as f64 * 3.0 * std::f64::consts::PI + 0.5;
        let sign = if arm == 0 { 1.0 } else { -1.0 };
        x[[i, 0]] = sign * t * t.cos() / 10.0;
        x[[i, 1]] = sign * t * t.sin() / 10.0;
        y[i] = arm as u32;
    }
    (x, y)
}

fn main() -> qcov::Result<()> {
    let (x, y) = spirals(150);
    for (c, gamma) in [(1.0, GammaMode::Scale), (100.0, GammaMode::Value(5.0))] {
        let cfg = SvmConfig {
            c,
            gamma,
            ..SvmConfig::default()
        };
        let model = train(x.view(), y.view(), &cfg)?;
        let (pred, _) = model.predict(x.view())?;
        println!(
            "C={c:<5} gamma={:.3}: train accuracy {:.3}, {} support vectors, {} iterations, converged {}",
            model.gamma_rbf,
            accuracy(y.view(), pred.view())?,
            model.support_vectors.nrows(),
            model.iterations,
            model.converged
        );
    }
    Ok(())
}
