//! CSV datasets, a run config and the binary model file on disk.

use std::path::Path;

use lpjt::io::{read_csv, read_model, write_labeled_csv, write_model, RunConfig};
use lpjt::pipeline::{fit, predict};
use lpjt::synth::{generate, SynthKind};

fn main() -> lpjt::Result<()> {
    let dir = std::env::temp_dir().join("lpjt-model-files");
    std::fs::create_dir_all(&dir)?;
    let pair = generate(SynthKind::GaussShift, 20, 3, 7)?;
    write_labeled_csv(&dir.join("source.csv"), &pair.source)?;
    write_labeled_csv(&dir.join("target.csv"), &pair.target)?;

    let cfg = RunConfig::parse("d = 2\nT = 3\nnormalization = zscore\nsource = source.csv\n", &dir)?;
    let source = read_csv(cfg.source.as_deref().unwrap_or(Path::new("")))?.labeled(3)?;
    let target = read_csv(&dir.join("target.csv"))?;

    let model = fit(&source, &target.features, None, &cfg.fit)?;
    let path = dir.join("model.lpjt");
    write_model(&path, &model)?;
    let loaded = read_model(&path)?;
    println!(
        "model file {} bytes, A identical: {}",
        std::fs::metadata(&path)?.len(),
        loaded.a == model.a
    );
    let pred = predict(&loaded, &source, &target.features, None)?;
    println!("first predictions {:?}", &pred[..10]);
    Ok(())
}
