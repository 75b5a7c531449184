//! Source and target with different feature dimensions, three labeled
//! target samples per class.

use lpjt::labelprop::nearest_neighbor;
use lpjt::pipeline::{evaluate, fit, pca_embed, predict, FitConfig, Mode};
use lpjt::synth::{hetero_map, HeteroMap};
use lpjt::{Hyperparams, LabeledDataset};

fn main() -> lpjt::Result<()> {
    let spec = HeteroMap::default();
    let pair = hetero_map(&spec, 4)?;
    let (src, tgt) = (&pair.source, &pair.target);
    let per = spec.n_per_class;
    let lab: Vec<usize> = (0..spec.num_classes)
        .flat_map(|c| (0..3).map(move |i| c * per + i))
        .collect();
    let unl: Vec<usize> = (0..tgt.n()).filter(|i| !lab.contains(i)).collect();
    let tl = LabeledDataset::new(
        tgt.features.select(&lab)?,
        lab.iter().map(|&i| tgt.labels()[i]).collect(),
        spec.num_classes,
    )?;
    let tu = tgt.features.select(&unl)?;
    let truth: Vec<usize> = unl.iter().map(|&i| tgt.labels()[i]).collect();

    let cfg = FitConfig {
        hyper: Hyperparams {
            d: 3,
            ..Default::default()
        },
        mode: Mode::Semisupervised,
        ..Default::default()
    };
    let model = fit(src, &tu, Some(&tl), &cfg)?;
    println!(
        "A is {}x{}, B is {}x{}",
        model.a.nrows(),
        model.a.ncols(),
        model.b.nrows(),
        model.b.ncols()
    );
    let pred = predict(&model, src, &tu, Some(&tl))?;

    let zs = pca_embed(src.features.as_matrix(), 3)?;
    let zu = pca_embed(tu.as_matrix(), 3)?;
    let base = nearest_neighbor(&zs, src.labels(), &zu)?;
    println!("per-domain PCA + 1-NN {:.3}", evaluate(&base, &truth)?);
    println!("adapted               {:.3}", evaluate(&pred, &truth)?);
    Ok(())
}
