//! Unsupervised adaptation to a rotated target, against source-only 1-NN.

use lpjt::labelprop::nearest_neighbor;
use lpjt::pipeline::{evaluate, fit, predict, FitConfig};
use lpjt::synth::{rotated, Rotated};
use lpjt::{Hyperparams, Normalization};

fn main() -> lpjt::Result<()> {
    let pair = rotated(&Rotated::default(), 0)?;
    let (src, tgt) = (&pair.source, &pair.target);
    let cfg = FitConfig {
        hyper: Hyperparams {
            d: 2,
            ..Default::default()
        },
        // classes sit on an arc around the origin; unit scaling would fold it
        normalization: Normalization::None,
        ..Default::default()
    };
    let model = fit(src, &tgt.features, None, &cfg)?;
    let pred = predict(&model, src, &tgt.features, None)?;
    let base = nearest_neighbor(src.features.as_matrix(), src.labels(), tgt.features.as_matrix())?;
    println!("source-only 1-NN {:.3}", evaluate(&base, tgt.labels())?);
    println!("adapted          {:.3}", evaluate(&pred, tgt.labels())?);
    Ok(())
}
