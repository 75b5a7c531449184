//! Kernelized fit with an RBF kernel; new samples are embedded through their
//! Gram rows against the training data.

use lpjt::pipeline::{embed, evaluate, fit, predict, Domain, FitConfig};
use lpjt::synth::{gauss_shift, GaussShift};
use lpjt::{Hyperparams, Kernel, Normalization};

fn main() -> lpjt::Result<()> {
    let pair = gauss_shift(
        &GaussShift {
            n_per_class: 30,
            ..Default::default()
        },
        2,
    )?;
    let (src, tgt) = (&pair.source, &pair.target);
    let cfg = FitConfig {
        hyper: Hyperparams {
            d: 3,
            kernel: Kernel::Rbf { bandwidth: 2.0 },
            ..Default::default()
        },
        normalization: Normalization::ZScore,
        ..Default::default()
    };
    let model = fit(src, &tgt.features, None, &cfg)?;
    println!(
        "coefficient matrices: A {}x{}, B {}x{}",
        model.a.nrows(),
        model.a.ncols(),
        model.b.nrows(),
        model.b.ncols()
    );
    let z = embed(&model, &tgt.features, Domain::Target)?;
    println!("target embedding {}x{}", z.dim(), z.n());
    let pred = predict(&model, src, &tgt.features, None)?;
    println!("accuracy {:.3}", evaluate(&pred, tgt.labels())?);
    Ok(())
}
