//! Command-line verbs over CSV datasets and run configs.
//!
//! Artifacts land in the output directory: `model.lpjt`, `trace.csv` and
//! `predictions.csv`. Labels in the `target_unlabeled` file are never used for
//! fitting or prediction; `eval` scores against them.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{FeatureMatrix, LabeledDataset, Normalization};
use crate::error::{LpjtError, Result};
use crate::io::{self, CsvDataset, RunConfig};
use crate::pipeline::{self, Mode, SubspaceModel};
use crate::synth::{self, SynthKind};

pub const MODEL_FILE: &str = "model.lpjt";
pub const TRACE_FILE: &str = "trace.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

#[derive(Debug, Parser)]
#[command(
    name = "lpjt",
    version,
    about = "Locality preserving joint transfer for domain adaptation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic source/target pair and a matching run.cfg.
    Synth(SynthArgs),
    /// Fit a model; writes model.lpjt and trace.csv.
    Fit(RunArgs),
    /// Label the unlabeled target with a fitted model; writes predictions.csv.
    Predict(RunArgs),
    /// Score predictions.csv against the labels in the target file.
    Eval(RunArgs),
    /// Fit, write trace.csv and print it.
    Trace(RunArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 50)]
    pub n_per_class: usize,
    #[arg(long = "classes", default_value_t = 3)]
    pub num_classes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<SynthKind, String> {
    s.parse().map_err(|e: LpjtError| e.to_string())
}

/// 1 for I/O and file format, 2 for configuration and input, 3 for numeric
/// failure.
pub fn exit_code(err: &LpjtError) -> i32 {
    match err {
        LpjtError::Io(_) | LpjtError::Format(_) => 1,
        LpjtError::Config(_)
        | LpjtError::InvalidInput(_)
        | LpjtError::DimensionMismatch(_)
        | LpjtError::ClassOutOfRange { .. } => 2,
        LpjtError::Numeric(_) | LpjtError::Factorization { .. } | LpjtError::NonFinite(_) => 3,
    }
}

/// Runs one verb, reporting errors on stderr; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a.kind, a.n_per_class, a.num_classes, a.seed, &a.out).map(|_| ()),
        Command::Fit(a) => load(&a).and_then(|r| cmd_fit(&r)).map(|_| ()),
        Command::Predict(a) => load(&a).and_then(|r| cmd_predict(&r)).map(|_| ()),
        Command::Eval(a) => load(&a)
            .and_then(|r| cmd_eval(&r))
            .map(|acc| println!("accuracy={acc}")),
        Command::Trace(a) => load(&a).and_then(|r| cmd_trace(&r)).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.fit.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

/// Writes `source.csv`, `target.csv` (true labels) and `run.cfg` into `out`.
pub fn cmd_synth(
    kind: SynthKind,
    n_per_class: usize,
    num_classes: usize,
    seed: u64,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let pair = synth::generate(kind, n_per_class, num_classes, seed)?;
    fs::create_dir_all(out)?;
    let source = out.join("source.csv");
    let target = out.join("target.csv");
    let config = out.join("run.cfg");
    io::write_labeled_csv(&source, &pair.source)?;
    io::write_labeled_csv(&target, &pair.target)?;

    let mut cfg = RunConfig::default();
    cfg.fit.seed = seed;
    cfg.fit.hyper.d = pair.source.dim().min(pair.target.dim());
    if kind == SynthKind::Rotated {
        // origin-centred classes lose their layout under unit scaling
        cfg.fit.normalization = Normalization::None;
    }
    cfg.num_classes = Some(num_classes);
    cfg.source = Some("source.csv".into());
    cfg.target_unlabeled = Some("target.csv".into());
    cfg.output_dir = Some(".".into());
    fs::write(&config, cfg.to_text())?;
    Ok(vec![source, target, config])
}

/// Datasets named by a run config.
#[derive(Debug, Clone)]
pub struct RunData {
    pub source: LabeledDataset,
    pub target: CsvDataset,
    pub target_labeled: Option<LabeledDataset>,
    pub num_classes: usize,
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| LpjtError::Config(format!("missing required key `{key}`")))
}

pub fn load_data(cfg: &RunConfig) -> Result<RunData> {
    let source = io::read_csv(required(&cfg.source, "source")?)?;
    let target = io::read_csv(required(&cfg.target_unlabeled, "target_unlabeled")?)?;
    let labeled = match (&cfg.target_labeled, cfg.fit.mode) {
        (Some(p), _) => Some(io::read_csv(p)?),
        (None, Mode::Semisupervised) => {
            return Err(LpjtError::Config("semisupervised mode needs `target_labeled`".into()))
        }
        (None, Mode::Unsupervised) => None,
    };
    let num_classes = match cfg.num_classes {
        Some(c) => c,
        None => {
            let max = [Some(&source), labeled.as_ref()]
                .into_iter()
                .flatten()
                .filter_map(CsvDataset::max_label)
                .max()
                .ok_or_else(|| LpjtError::invalid("source has no labels"))?;
            max + 1
        }
    };
    Ok(RunData {
        source: source.labeled(num_classes)?,
        target_labeled: labeled.map(|l| l.labeled(num_classes)).transpose()?,
        target,
        num_classes,
    })
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn fit_and_write(cfg: &RunConfig) -> Result<(SubspaceModel, PathBuf)> {
    let data = load_data(cfg)?;
    let model = pipeline::fit(
        &data.source,
        &data.target.features,
        data.target_labeled.as_ref(),
        &cfg.fit,
    )?;
    let dir = output_dir(cfg)?;
    io::write_model(&dir.join(MODEL_FILE), &model)?;
    fs::write(dir.join(TRACE_FILE), io::format_trace(&model.trace))?;
    Ok((model, dir))
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<SubspaceModel> {
    fit_and_write(cfg).map(|(m, _)| m)
}

/// Loads the model from the output directory and labels the target file.
pub fn cmd_predict(cfg: &RunConfig) -> Result<Vec<usize>> {
    let data = load_data(cfg)?;
    let dir = output_dir(cfg)?;
    let model = io::read_model(&dir.join(MODEL_FILE))?;
    let tgt_l = match model.mode {
        Mode::Semisupervised => data.target_labeled.as_ref(),
        Mode::Unsupervised => None,
    };
    let labels = pipeline::predict(&model, &data.source, &data.target.features, tgt_l)?;
    fs::write(dir.join(PREDICTIONS_FILE), io::format_predictions(&labels))?;
    Ok(labels)
}

/// Accuracy of `predictions.csv` over target samples that carry a label.
pub fn cmd_eval(cfg: &RunConfig) -> Result<f64> {
    let target = io::read_csv(required(&cfg.target_unlabeled, "target_unlabeled")?)?;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let pred = io::parse_predictions(&fs::read_to_string(dir.join(PREDICTIONS_FILE))?)?;
    if pred.len() != target.labels.len() {
        return Err(LpjtError::dims(format!(
            "{} predictions for {} target samples",
            pred.len(),
            target.labels.len()
        )));
    }
    let (p, t): (Vec<usize>, Vec<usize>) = pred
        .iter()
        .zip(&target.labels)
        .filter_map(|(&p, t)| t.map(|t| (p, t)))
        .unzip();
    pipeline::evaluate(&p, &t)
}

/// Fits and returns the trace CSV text, which is also written to disk.
pub fn cmd_trace(cfg: &RunConfig) -> Result<String> {
    fit_and_write(cfg).map(|(m, _)| io::format_trace(&m.trace))
}

/// Raw features of a CSV file, labels dropped.
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    io::read_csv(path).map(|d| d.features)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&LpjtError::Config("x".into())), 2);
        assert_eq!(exit_code(&LpjtError::Numeric("x".into())), 3);
        assert_eq!(exit_code(&LpjtError::Factorization { condition: 1e20 }), 3);
        assert_eq!(exit_code(&LpjtError::Format("x".into())), 1);
    }

    #[test]
    fn parses_verbs_and_flags() {
        let cli = Cli::try_parse_from(["lpjt", "fit", "--config", "a.cfg", "--seed", "4", "--out", "o"]).unwrap();
        match cli.command {
            Command::Fit(a) => {
                assert_eq!(a.config, PathBuf::from("a.cfg"));
                assert_eq!(a.seed, Some(4));
                assert_eq!(a.out, Some(PathBuf::from("o")));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(Cli::try_parse_from(["lpjt", "synth", "--kind", "spiral", "--out", "o"]).is_err());
    }

    #[test]
    fn synth_is_byte_identical_on_rerun() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        cmd_synth(SynthKind::HeteroMap, 5, 3, 9, a.path()).unwrap();
        cmd_synth(SynthKind::HeteroMap, 5, 3, 9, b.path()).unwrap();
        for f in ["source.csv", "target.csv", "run.cfg"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
        let target = io::read_csv(&a.path().join("target.csv")).unwrap();
        assert_eq!(target.features.dim(), 3);
    }
}
