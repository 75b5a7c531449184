//! CSV datasets, the binary model file and flat `key=value` run configs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::data::{FeatureMatrix, LabeledDataset, Normalization, Normalizer, ZScore};
use crate::error::{LpjtError, Result};
use crate::hyper::{Coupling, Hyperparams};
use crate::kernel::Kernel;
use crate::landmark::LandmarkWeights;
use crate::pipeline::{FitConfig, InitStrategy, KernelBasis, Mode, SubspaceModel, TrainTrace};

pub const MODEL_MAGIC: &[u8; 4] = b"LPJT";
pub const MODEL_VERSION: u32 = 1;

/// Features plus per-sample labels; `None` marks an unlabeled sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvDataset {
    pub features: FeatureMatrix,
    pub labels: Vec<Option<usize>>,
}

impl CsvDataset {
    /// All samples as a labeled dataset; fails if any label is missing.
    pub fn labeled(&self, num_classes: usize) -> Result<LabeledDataset> {
        let labels = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| LpjtError::invalid(format!("sample {i} has no label"))))
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(self.features.clone(), labels, num_classes)
    }

    pub fn max_label(&self) -> Option<usize> {
        self.labels.iter().flatten().copied().max()
    }
}

/// Parses `f0,…,f{d−1},label` CSV text; label `-1` means unlabeled.
pub fn parse_csv(text: &str) -> Result<CsvDataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| LpjtError::Format("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let dim = cols.len().saturating_sub(1);
    let expected: Vec<String> = (0..dim).map(|i| format!("f{i}")).chain(["label".to_string()]).collect();
    if dim == 0 || cols != expected {
        return Err(LpjtError::Format(format!(
            "CSV header must be f0..f{{d-1}},label, got `{header}`"
        )));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(LpjtError::Format(format!(
                "line {}: expected {} fields, found {}",
                lineno + 1,
                dim + 1,
                fields.len()
            )));
        }
        for f in &fields[..dim] {
            let v: f64 = f
                .parse()
                .map_err(|_| LpjtError::Format(format!("line {}: bad number `{f}`", lineno + 1)))?;
            values.push(v);
        }
        let label: i64 = fields[dim]
            .parse()
            .map_err(|_| LpjtError::Format(format!("line {}: bad label `{}`", lineno + 1, fields[dim])))?;
        labels.push(match label {
            -1 => None,
            l if l >= 0 => Some(l as usize),
            l => return Err(LpjtError::Format(format!("line {}: label {l} < -1", lineno + 1))),
        });
    }
    if labels.is_empty() {
        return Err(LpjtError::Format("CSV has no samples".into()));
    }
    // rows are samples; the matrix stores samples as columns
    let features = FeatureMatrix::new(DMatrix::from_column_slice(dim, labels.len(), &values))?;
    Ok(CsvDataset { features, labels })
}

pub fn format_csv(x: &FeatureMatrix, labels: &[Option<usize>]) -> Result<String> {
    if labels.len() != x.n() {
        return Err(LpjtError::dims("one label per sample required".to_string()));
    }
    let mut out = String::new();
    let header: Vec<String> = (0..x.dim()).map(|i| format!("f{i}")).collect();
    out.push_str(&header.join(","));
    out.push_str(",label\n");
    for (j, label) in labels.iter().enumerate() {
        for v in x.as_matrix().column(j).iter() {
            out.push_str(&format!("{v},"));
        }
        match label {
            Some(l) => out.push_str(&format!("{l}\n")),
            None => out.push_str("-1\n"),
        }
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<CsvDataset> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn write_csv(path: &Path, x: &FeatureMatrix, labels: &[Option<usize>]) -> Result<()> {
    fs::write(path, format_csv(x, labels)?)?;
    Ok(())
}

pub fn write_labeled_csv(path: &Path, data: &LabeledDataset) -> Result<()> {
    let labels: Vec<Option<usize>> = data.labels().iter().map(|&l| Some(l)).collect();
    write_csv(path, &data.features, &labels)
}

/// `iter,objective,mmd,label_changes`, one row per executed iteration.
pub fn format_trace(trace: &TrainTrace) -> String {
    let mut out = String::from("iter,objective,mmd,label_changes\n");
    for i in 0..trace.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            trace.objective[i],
            trace.mmd[i],
            trace.label_changes[i]
        ));
    }
    out
}

pub fn format_predictions(labels: &[usize]) -> String {
    let mut out = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}

pub fn parse_predictions(text: &str) -> Result<Vec<usize>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("index,label") {
        return Err(LpjtError::Format("predictions must start with `index,label`".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let (idx, label) = line
                .split_once(',')
                .ok_or_else(|| LpjtError::Format(format!("bad prediction row `{line}`")))?;
            if idx.trim().parse::<usize>().ok() != Some(i) {
                return Err(LpjtError::Format(format!("prediction rows out of order at `{line}`")));
            }
            label
                .trim()
                .parse()
                .map_err(|_| LpjtError::Format(format!("bad label in `{line}`")))
        })
        .collect()
}

// ---- model file ----

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        v.iter().for_each(|&x| self.f64(x));
    }
    fn row_major(&mut self, m: &DMatrix<f64>) {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)]);
            }
        }
    }
    fn matrix(&mut self, m: &DMatrix<f64>) {
        self.u64(m.nrows() as u64);
        self.u64(m.ncols() as u64);
        self.row_major(m);
    }
    fn text(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| LpjtError::Format("truncated model file".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        usize::try_from(n)
            .ok()
            .filter(|&n| n <= self.buf.len())
            .ok_or_else(|| LpjtError::Format(format!("implausible length {n}")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn row_major(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        if rows.saturating_mul(cols).saturating_mul(8) > self.buf.len() {
            return Err(LpjtError::Format("matrix larger than file".into()));
        }
        let mut m = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = self.f64()?;
            }
        }
        Ok(m)
    }
    fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let rows = self.len()?;
        let cols = self.len()?;
        self.row_major(rows, cols)
    }
    fn text(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| LpjtError::Format("invalid UTF-8".into()))
    }
}

fn normalization_code(n: Normalization) -> u8 {
    match n {
        Normalization::None => 0,
        Normalization::ZScore => 1,
        Normalization::Unit => 2,
        Normalization::UnitThenZScore => 3,
    }
}

fn normalization_from_code(c: u8) -> Result<Normalization> {
    Ok(match c {
        0 => Normalization::None,
        1 => Normalization::ZScore,
        2 => Normalization::Unit,
        3 => Normalization::UnitThenZScore,
        _ => return Err(LpjtError::Format(format!("unknown normalization code {c}"))),
    })
}

/// Serializes a model: magic, version, `rows(A)`, `rows(B)`, `d`, then `A`
/// and `B` row-major as little-endian `f64`, then hyperparameters and the
/// remaining fitted state.
pub fn encode_model(model: &SubspaceModel) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MODEL_MAGIC);
    w.u32(MODEL_VERSION);
    w.u64(model.a.nrows() as u64);
    w.u64(model.b.nrows() as u64);
    w.u64(model.a.ncols() as u64);
    w.row_major(&model.a);
    w.row_major(&model.b);
    w.text(&hyper_to_text(&model.hyper));
    for n in [&model.source_normalizer, &model.target_normalizer] {
        w.u8(normalization_code(n.kind));
        match &n.zscore {
            Some(z) => {
                w.u8(1);
                w.f64s(&z.mean);
                w.f64s(&z.std);
            }
            None => w.u8(0),
        }
    }
    w.u64(model.num_classes as u64);
    w.u8(match model.mode {
        Mode::Unsupervised => 0,
        Mode::Semisupervised => 1,
    });
    w.u64(model.seed);
    w.f64(model.weights.delta);
    w.f64s(model.weights.alpha.as_slice());
    w.f64s(model.weights.beta.as_slice());
    w.u64(model.pseudo_labels.len() as u64);
    model.pseudo_labels.iter().for_each(|&l| w.u64(l as u64));
    match &model.basis {
        Some(b) => {
            w.u8(1);
            w.matrix(&b.source);
            w.matrix(&b.target);
        }
        None => w.u8(0),
    }
    w.0
}

pub fn decode_model(bytes: &[u8]) -> Result<SubspaceModel> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(LpjtError::Format("not an LPJT model file".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(LpjtError::Format(format!("unsupported model version {version}")));
    }
    let rows_a = r.len()?;
    let rows_b = r.len()?;
    let d = r.len()?;
    let a = r.row_major(rows_a, d)?;
    let b = r.row_major(rows_b, d)?;
    let hyper = parse_hyper_text(&r.text()?)?;
    let mut normalizers = Vec::new();
    for _ in 0..2 {
        let kind = normalization_from_code(r.u8()?)?;
        let zscore = match r.u8()? {
            0 => None,
            1 => Some(ZScore {
                mean: r.f64s()?,
                std: r.f64s()?,
            }),
            f => return Err(LpjtError::Format(format!("bad z-score flag {f}"))),
        };
        normalizers.push(Normalizer { kind, zscore });
    }
    let num_classes = r.len()?;
    let mode = match r.u8()? {
        0 => Mode::Unsupervised,
        1 => Mode::Semisupervised,
        m => return Err(LpjtError::Format(format!("bad mode code {m}"))),
    };
    let seed = r.u64()?;
    let delta = r.f64()?;
    let alpha = DVector::from_vec(r.f64s()?);
    let beta = DVector::from_vec(r.f64s()?);
    let n_pseudo = r.len()?;
    let pseudo_labels = (0..n_pseudo).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
    let basis = match r.u8()? {
        0 => None,
        1 => Some(KernelBasis {
            source: r.matrix()?,
            target: r.matrix()?,
        }),
        f => return Err(LpjtError::Format(format!("bad basis flag {f}"))),
    };
    if r.pos != bytes.len() {
        return Err(LpjtError::Format("trailing bytes after model".into()));
    }
    let target_normalizer = normalizers.pop().expect("two normalizers");
    let source_normalizer = normalizers.pop().expect("two normalizers");
    Ok(SubspaceModel {
        a,
        b,
        hyper,
        weights: LandmarkWeights { alpha, beta, delta },
        trace: TrainTrace::default(),
        source_normalizer,
        target_normalizer,
        pseudo_labels,
        num_classes,
        mode,
        seed,
        basis,
    })
}

pub fn write_model(path: &Path, model: &SubspaceModel) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_model(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<SubspaceModel> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_model(&bytes)
}

// ---- run config ----

/// Everything a CLI run needs. Relative paths resolve against the directory
/// of the config file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub fit: FitConfig,
    pub source: Option<PathBuf>,
    pub target_unlabeled: Option<PathBuf>,
    pub target_labeled: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Inferred from the largest source label when absent.
    pub num_classes: Option<usize>,
}

const HYPER_KEYS: &[&str] = &[
    "delta",
    "gamma",
    "mu",
    "d",
    "T",
    "k_w",
    "k_b",
    "k_lp",
    "lp_fully_connected",
    "sigma_lp",
    "lambda_couple",
    "eps_reg",
    "kernel",
    "bandwidth",
    "normalize_embedding",
];

fn cfg_err(key: &str, value: &str) -> LpjtError {
    LpjtError::Config(format!("invalid value `{value}` for key `{key}`"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| cfg_err(key, value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(cfg_err(key, value)),
    }
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LpjtError::Config(format!("line {}: expected key=value", i + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if out.insert(k.clone(), v).is_some() {
            return Err(LpjtError::Config(format!("duplicate key `{k}`")));
        }
    }
    Ok(out)
}

fn apply_hyper(h: &mut Hyperparams, pairs: &BTreeMap<String, String>) -> Result<()> {
    let mut bandwidth = None;
    let mut kernel_name = None;
    for (k, v) in pairs {
        match k.as_str() {
            "delta" => h.delta = parse_num(k, v)?,
            "gamma" => h.gamma = parse_num(k, v)?,
            "mu" => h.mu = parse_num(k, v)?,
            "d" => h.d = parse_num(k, v)?,
            "T" => h.iterations = parse_num(k, v)?,
            "k_w" => h.k_w = parse_num(k, v)?,
            "k_b" => h.k_b = parse_num(k, v)?,
            "k_lp" => h.k_lp = parse_num(k, v)?,
            "lp_fully_connected" => h.lp_fully_connected = parse_bool(k, v)?,
            "sigma_lp" => h.sigma_lp = parse_num(k, v)?,
            "lambda_couple" => {
                h.lambda_couple = match v.as_str() {
                    "off" => Coupling::Off,
                    "auto" => Coupling::Auto,
                    w => Coupling::Weight(parse_num(k, w)?),
                }
            }
            "eps_reg" => h.eps_reg = parse_num(k, v)?,
            "kernel" => kernel_name = Some(v.clone()),
            "bandwidth" => bandwidth = Some(parse_num::<f64>(k, v)?),
            "normalize_embedding" => h.normalize_embedding = parse_bool(k, v)?,
            _ => {}
        }
    }
    match kernel_name.as_deref() {
        None | Some("none") => h.kernel = Kernel::None,
        Some("linear") => h.kernel = Kernel::Linear,
        Some("rbf") => {
            h.kernel = Kernel::Rbf {
                bandwidth: bandwidth.ok_or_else(|| LpjtError::Config("kernel=rbf requires `bandwidth`".into()))?,
            }
        }
        Some(other) => return Err(cfg_err("kernel", other)),
    }
    Ok(())
}

pub fn hyper_to_text(h: &Hyperparams) -> String {
    let coupling = match h.lambda_couple {
        Coupling::Off => "off".to_string(),
        Coupling::Auto => "auto".to_string(),
        Coupling::Weight(w) => format!("{w}"),
    };
    let mut s = format!(
        "delta={}\ngamma={}\nmu={}\nd={}\nT={}\nk_w={}\nk_b={}\nk_lp={}\nlp_fully_connected={}\nsigma_lp={}\nlambda_couple={}\neps_reg={}\nnormalize_embedding={}\n",
        h.delta,
        h.gamma,
        h.mu,
        h.d,
        h.iterations,
        h.k_w,
        h.k_b,
        h.k_lp,
        h.lp_fully_connected,
        h.sigma_lp,
        coupling,
        h.eps_reg,
        h.normalize_embedding
    );
    match h.kernel {
        Kernel::None => s.push_str("kernel=none\n"),
        Kernel::Linear => s.push_str("kernel=linear\n"),
        Kernel::Rbf { bandwidth } => s.push_str(&format!("kernel=rbf\nbandwidth={bandwidth}\n")),
    }
    s
}

fn parse_hyper_text(text: &str) -> Result<Hyperparams> {
    let pairs = parse_pairs(text)?;
    if let Some(k) = pairs.keys().find(|k| !HYPER_KEYS.contains(&k.as_str())) {
        return Err(LpjtError::Format(format!("unknown hyperparameter `{k}` in model")));
    }
    let mut h = Hyperparams::default();
    apply_hyper(&mut h, &pairs)?;
    Ok(h)
}

impl RunConfig {
    /// Parses config text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let mut cfg = RunConfig::default();
        let path = |v: &str| base.join(v);
        for (k, v) in &pairs {
            match k.as_str() {
                k if HYPER_KEYS.contains(&k) => {}
                "mode" => {
                    cfg.fit.mode = match v.as_str() {
                        "unsupervised" => Mode::Unsupervised,
                        "semisupervised" => Mode::Semisupervised,
                        _ => return Err(cfg_err(k, v)),
                    }
                }
                "init" => {
                    cfg.fit.init_strategy = match v.as_str() {
                        "labelprop_raw" => InitStrategy::LabelpropRaw,
                        "nn_raw" => InitStrategy::NnRaw,
                        _ => return Err(cfg_err(k, v)),
                    }
                }
                "normalization" => {
                    cfg.fit.normalization = match v.as_str() {
                        "none" => Normalization::None,
                        "zscore" => Normalization::ZScore,
                        "unit" => Normalization::Unit,
                        "unit_zscore" => Normalization::UnitThenZScore,
                        _ => return Err(cfg_err(k, v)),
                    }
                }
                "damping" => cfg.fit.damping = parse_bool(k, v)?,
                "seed" => cfg.fit.seed = parse_num(k, v)?,
                "num_classes" => cfg.num_classes = Some(parse_num(k, v)?),
                "source" => cfg.source = Some(path(v)),
                "target_unlabeled" => cfg.target_unlabeled = Some(path(v)),
                "target_labeled" => cfg.target_labeled = Some(path(v)),
                "output_dir" => cfg.output_dir = Some(path(v)),
                other => return Err(LpjtError::Config(format!("unknown config key `{other}`"))),
            }
        }
        apply_hyper(&mut cfg.fit.hyper, &pairs)?;
        cfg.fit.hyper.validate().map_err(|e| LpjtError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Serializes back to config text. Paths are written as stored.
    pub fn to_text(&self) -> String {
        let f = &self.fit;
        let mut s = hyper_to_text(&f.hyper);
        s.push_str(&format!(
            "mode={}\ninit={}\nnormalization={}\ndamping={}\nseed={}\n",
            match f.mode {
                Mode::Unsupervised => "unsupervised",
                Mode::Semisupervised => "semisupervised",
            },
            match f.init_strategy {
                InitStrategy::LabelpropRaw => "labelprop_raw",
                InitStrategy::NnRaw => "nn_raw",
            },
            match f.normalization {
                Normalization::None => "none",
                Normalization::ZScore => "zscore",
                Normalization::Unit => "unit",
                Normalization::UnitThenZScore => "unit_zscore",
            },
            f.damping,
            f.seed
        ));
        if let Some(c) = self.num_classes {
            s.push_str(&format!("num_classes={c}\n"));
        }
        for (key, p) in [
            ("source", &self.source),
            ("target_unlabeled", &self.target_unlabeled),
            ("target_labeled", &self.target_labeled),
            ("output_dir", &self.output_dir),
        ] {
            if let Some(p) = p {
                s.push_str(&format!("{key}={}\n", p.display()));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{fit, FitConfig};
    use crate::synth::{generate, SynthKind};
    use proptest::prelude::*;

    #[test]
    fn csv_roundtrip_with_unlabeled() {
        let x = FeatureMatrix::new(DMatrix::from_row_slice(2, 3, &[0.1, -2.5, 1e-300, 3.0, 4.0, 5.5])).unwrap();
        let labels = vec![Some(0), None, Some(2)];
        let parsed = parse_csv(&format_csv(&x, &labels).unwrap()).unwrap();
        assert_eq!(parsed.features, x);
        assert_eq!(parsed.labels, labels);
        assert!(parsed.labeled(3).is_err());
    }

    #[test]
    fn csv_rejects_ragged_and_bad_header() {
        assert!(parse_csv("f0,f1,label\n1,2,0\n1,0\n").is_err());
        assert!(parse_csv("a,b,label\n1,2,0\n").is_err());
        assert!(parse_csv("f0,label\n1,-2\n").is_err());
        assert!(parse_csv("f0,label\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_values_survive(values in prop::collection::vec(-1e12f64..1e12, 1..30)) {
            let n = values.len();
            let x = FeatureMatrix::new(DMatrix::from_row_slice(1, n, &values)).unwrap();
            let labels = vec![None; n];
            let back = parse_csv(&format_csv(&x, &labels).unwrap()).unwrap();
            for (a, b) in back.features.as_matrix().iter().zip(&values) {
                prop_assert!((a - b).abs() <= 1e-15 * b.abs());
            }
        }
    }

    #[test]
    fn model_roundtrip_is_bit_exact() {
        let pair = generate(SynthKind::GaussShift, 6, 2, 3).unwrap();
        let cfg = FitConfig {
            hyper: Hyperparams {
                d: 2,
                iterations: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let model = fit(&pair.source, &pair.target.features, None, &cfg).unwrap();
        let back = decode_model(&encode_model(&model)).unwrap();
        let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.a), bits(&model.a));
        assert_eq!(bits(&back.b), bits(&model.b));
        assert_eq!(back.hyper, model.hyper);
        assert_eq!(back.source_normalizer, model.source_normalizer);
        assert_eq!(back.target_normalizer, model.target_normalizer);
        assert_eq!(back.weights, model.weights);
        assert_eq!(back.pseudo_labels, model.pseudo_labels);
    }

    #[test]
    fn model_header_layout() {
        let model =
            SubspaceModel::from_projections(DMatrix::from_row_slice(1, 2, &[1.0, 2.0]), DMatrix::zeros(3, 2), 2)
                .unwrap();
        let bytes = encode_model(&model);
        assert_eq!(&bytes[..4], b"LPJT");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), MODEL_VERSION);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), 2.0);
        assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_model(&bad).is_err());
    }

    #[test]
    fn config_parses_and_rejects_unknown_keys() {
        let text = "# comment\ndelta=0.4\nT=3\nkernel=rbf\nbandwidth=2\nlambda_couple=auto\nmode=semisupervised\nsource=a.csv\n";
        let cfg = RunConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.fit.hyper.delta, 0.4);
        assert_eq!(cfg.fit.hyper.iterations, 3);
        assert_eq!(cfg.fit.hyper.kernel, Kernel::Rbf { bandwidth: 2.0 });
        assert_eq!(cfg.fit.hyper.lambda_couple, Coupling::Auto);
        assert_eq!(cfg.fit.mode, Mode::Semisupervised);
        assert_eq!(cfg.source, Some(PathBuf::from("/data/a.csv")));

        let err = RunConfig::parse("gamma=0.1\nlearning_rate=3\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("learning_rate"));
        assert!(matches!(
            RunConfig::parse("delta=2\n", Path::new(".")),
            Err(LpjtError::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("kernel=rbf\n", Path::new(".")),
            Err(LpjtError::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("delta\n", Path::new(".")),
            Err(LpjtError::Config(_))
        ));
    }

    #[test]
    fn config_text_roundtrip() {
        let mut cfg = RunConfig::default();
        cfg.fit.hyper.gamma = 0.125;
        cfg.fit.hyper.lambda_couple = Coupling::Weight(0.3);
        cfg.fit.normalization = Normalization::ZScore;
        cfg.num_classes = Some(4);
        cfg.source = Some(PathBuf::from("s.csv"));
        let back = RunConfig::parse(&cfg.to_text(), Path::new("")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn predictions_roundtrip() {
        let labels = vec![2, 0, 1, 1];
        assert_eq!(parse_predictions(&format_predictions(&labels)).unwrap(), labels);
        assert!(parse_predictions("index,label\n1,0\n").is_err());
    }
}
