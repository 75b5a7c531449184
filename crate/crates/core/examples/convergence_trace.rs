//! Per-iteration objective, distribution gap and pseudo-label changes.

use lpjt::io::format_trace;
use lpjt::pipeline::{fit, FitConfig};
use lpjt::synth::{rotated, Rotated};
use lpjt::{Hyperparams, Normalization};

fn main() -> lpjt::Result<()> {
    let pair = rotated(
        &Rotated {
            n_per_class: 60,
            ..Default::default()
        },
        5,
    )?;
    let cfg = FitConfig {
        hyper: Hyperparams {
            d: 2,
            iterations: 8,
            ..Default::default()
        },
        normalization: Normalization::None,
        ..Default::default()
    };
    let model = fit(&pair.source, &pair.target.features, None, &cfg)?;
    print!("{}", format_trace(&model.trace));
    Ok(())
}
