//! Seeded synthetic source/target pairs with known target labels.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{FeatureMatrix, LabeledDataset};
use crate::error::{LpjtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    GaussShift,
    Rotated,
    HeteroMap,
}

impl std::str::FromStr for SynthKind {
    type Err = LpjtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss_shift" => Ok(SynthKind::GaussShift),
            "rotated" => Ok(SynthKind::Rotated),
            "hetero_map" => Ok(SynthKind::HeteroMap),
            other => Err(LpjtError::Config(format!("unknown synthetic kind `{other}`"))),
        }
    }
}

/// Source and target with ground-truth target labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPair {
    pub source: LabeledDataset,
    pub target: LabeledDataset,
}

/// Isotropic Gaussian classes in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussShift {
    pub n_per_class: usize,
    pub num_classes: usize,
    pub dim: usize,
    /// Added to every coordinate of the target class means.
    pub translation: f64,
    /// Class means are drawn uniformly from `[-spread_means, spread_means]^dim`.
    pub spread_means: f64,
    pub sigma: f64,
}

impl Default for GaussShift {
    fn default() -> Self {
        GaussShift {
            n_per_class: 50,
            num_classes: 3,
            dim: 2,
            translation: 2.0,
            spread_means: 5.0,
            sigma: 0.5,
        }
    }
}

/// 2-D classes whose means sit on an arc; the target is rotated about the
/// origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotated {
    pub n_per_class: usize,
    pub num_classes: usize,
    pub angle_deg: f64,
    /// Angular distance between consecutive class means.
    pub spacing_deg: f64,
    pub radius: f64,
    pub sigma: f64,
    /// Extra isotropic noise on the rotated target.
    pub noise: f64,
}

impl Default for Rotated {
    fn default() -> Self {
        Rotated {
            n_per_class: 100,
            num_classes: 3,
            angle_deg: 30.0,
            spacing_deg: 50.0,
            radius: 4.0,
            sigma: 0.6,
            noise: 0.1,
        }
    }
}

/// Gaussian classes in `d_s` dimensions; the target is `R x + noise` for a
/// seeded random `d_t × d_s` map `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroMap {
    pub n_per_class: usize,
    pub num_classes: usize,
    pub d_s: usize,
    pub d_t: usize,
    pub spread_means: f64,
    pub sigma: f64,
    pub noise: f64,
}

impl Default for HeteroMap {
    fn default() -> Self {
        HeteroMap {
            n_per_class: 50,
            num_classes: 3,
            d_s: 10,
            d_t: 3,
            spread_means: 3.0,
            sigma: 1.0,
            noise: 0.1,
        }
    }
}

fn check_sizes(n_per_class: usize, num_classes: usize) -> Result<()> {
    if n_per_class == 0 || num_classes == 0 {
        return Err(LpjtError::invalid("n_per_class and num_classes must be positive"));
    }
    Ok(())
}

fn sample_classes(
    rng: &mut ChaCha8Rng,
    means: &[DVector<f64>],
    n_per_class: usize,
    sigma: f64,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let normal = Normal::new(0.0, sigma).map_err(|e| LpjtError::invalid(e.to_string()))?;
    let dim = means[0].len();
    let n = means.len() * n_per_class;
    let mut x = DMatrix::zeros(dim, n);
    let mut labels = Vec::with_capacity(n);
    for (c, m) in means.iter().enumerate() {
        for k in 0..n_per_class {
            let col = c * n_per_class + k;
            for r in 0..dim {
                x[(r, col)] = m[r] + normal.sample(rng);
            }
            labels.push(c);
        }
    }
    Ok((x, labels))
}

fn dataset(x: DMatrix<f64>, labels: Vec<usize>, num_classes: usize) -> Result<LabeledDataset> {
    LabeledDataset::new(FeatureMatrix::new(x)?, labels, num_classes)
}

pub fn gauss_shift(spec: &GaussShift, seed: u64) -> Result<SynthPair> {
    check_sizes(spec.n_per_class, spec.num_classes)?;
    if spec.dim == 0 {
        return Err(LpjtError::invalid("dim must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<DVector<f64>> = (0..spec.num_classes)
        .map(|_| {
            DVector::from_fn(spec.dim, |_, _| {
                rng.random_range(-spec.spread_means..=spec.spread_means)
            })
        })
        .collect();
    let shifted: Vec<DVector<f64>> = means.iter().map(|m| m.add_scalar(spec.translation)).collect();
    let (xs, ys) = sample_classes(&mut rng, &means, spec.n_per_class, spec.sigma)?;
    let (xt, yt) = sample_classes(&mut rng, &shifted, spec.n_per_class, spec.sigma)?;
    Ok(SynthPair {
        source: dataset(xs, ys, spec.num_classes)?,
        target: dataset(xt, yt, spec.num_classes)?,
    })
}

pub fn rotation(angle_deg: f64) -> DMatrix<f64> {
    let (s, c) = angle_deg.to_radians().sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

pub fn rotated(spec: &Rotated, seed: u64) -> Result<SynthPair> {
    check_sizes(spec.n_per_class, spec.num_classes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<DVector<f64>> = (0..spec.num_classes)
        .map(|c| {
            let (s, co) = (c as f64 * spec.spacing_deg).to_radians().sin_cos();
            DVector::from_vec(vec![spec.radius * co, spec.radius * s])
        })
        .collect();
    let (xs, ys) = sample_classes(&mut rng, &means, spec.n_per_class, spec.sigma)?;
    let (xt, yt) = sample_classes(&mut rng, &means, spec.n_per_class, spec.sigma)?;
    let mut xt = rotation(spec.angle_deg) * xt;
    add_noise(&mut rng, &mut xt, spec.noise)?;
    Ok(SynthPair {
        source: dataset(xs, ys, spec.num_classes)?,
        target: dataset(xt, yt, spec.num_classes)?,
    })
}

pub fn hetero_map(spec: &HeteroMap, seed: u64) -> Result<SynthPair> {
    check_sizes(spec.n_per_class, spec.num_classes)?;
    if spec.d_s == 0 || spec.d_t == 0 {
        return Err(LpjtError::invalid("d_s and d_t must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<DVector<f64>> = (0..spec.num_classes)
        .map(|_| {
            DVector::from_fn(spec.d_s, |_, _| {
                rng.random_range(-spec.spread_means..=spec.spread_means)
            })
        })
        .collect();
    let map = DMatrix::from_fn(spec.d_t, spec.d_s, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v / (spec.d_s as f64).sqrt()
    });
    let (xs, ys) = sample_classes(&mut rng, &means, spec.n_per_class, spec.sigma)?;
    let (xt, yt) = sample_classes(&mut rng, &means, spec.n_per_class, spec.sigma)?;
    let mut xt = map * xt;
    add_noise(&mut rng, &mut xt, spec.noise)?;
    Ok(SynthPair {
        source: dataset(xs, ys, spec.num_classes)?,
        target: dataset(xt, yt, spec.num_classes)?,
    })
}

fn add_noise(rng: &mut ChaCha8Rng, x: &mut DMatrix<f64>, sd: f64) -> Result<()> {
    if sd > 0.0 {
        let normal = Normal::new(0.0, sd).map_err(|e| LpjtError::invalid(e.to_string()))?;
        x.iter_mut().for_each(|v| *v += normal.sample(rng));
    }
    Ok(())
}

/// Generator by kind with default shape parameters.
pub fn generate(kind: SynthKind, n_per_class: usize, num_classes: usize, seed: u64) -> Result<SynthPair> {
    match kind {
        SynthKind::GaussShift => gauss_shift(
            &GaussShift {
                n_per_class,
                num_classes,
                ..Default::default()
            },
            seed,
        ),
        SynthKind::Rotated => rotated(
            &Rotated {
                n_per_class,
                num_classes,
                ..Default::default()
            },
            seed,
        ),
        SynthKind::HeteroMap => hetero_map(
            &HeteroMap {
                n_per_class,
                num_classes,
                ..Default::default()
            },
            seed,
        ),
    }
}
