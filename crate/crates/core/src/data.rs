//! Domain data types, feature normalization and problem validation.
//!
//! Samples are stored one per column (`features × samples`), so a domain with
//! `d` features and `n` samples is a `d × n` matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{LpjtError, Result};

/// Dense feature matrix with one column per sample. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(LpjtError::invalid(format!(
                "feature matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LpjtError::NonFinite("feature matrix"));
        }
        Ok(FeatureMatrix { data })
    }

    /// Builds a matrix from per-sample feature vectors.
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        let dim = samples.first().map_or(0, Vec::len);
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(LpjtError::dims(format!(
                "ragged samples: expected {dim} features, found {}",
                bad.len()
            )));
        }
        Self::new(DMatrix::from_fn(dim, n, |r, c| samples[c][r]))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn sample(&self, i: usize) -> DVector<f64> {
        self.data.column(i).into_owned()
    }

    /// Concatenates the samples of `self` and `other` (same dimensionality).
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.dim() != other.dim() {
            return Err(LpjtError::dims(format!(
                "cannot stack {}-dim and {}-dim samples",
                self.dim(),
                other.dim()
            )));
        }
        let mut data = DMatrix::zeros(self.dim(), self.n() + other.n());
        data.columns_mut(0, self.n()).copy_from(&self.data);
        data.columns_mut(self.n(), other.n()).copy_from(&other.data);
        Ok(FeatureMatrix { data })
    }

    /// Selects a subset of samples by index.
    pub fn select(&self, idx: &[usize]) -> Result<FeatureMatrix> {
        FeatureMatrix::new(self.data.select_columns(idx))
    }
}

/// Features plus integer class labels in `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.len() != features.n() {
            return Err(LpjtError::dims(format!(
                "{} labels for {} samples",
                labels.len(),
                features.n()
            )));
        }
        if num_classes == 0 {
            return Err(LpjtError::invalid("num_classes must be positive"));
        }
        check_labels(&labels, num_classes, "labeled dataset")?;
        Ok(LabeledDataset {
            features,
            labels,
            num_classes,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }
}

pub(crate) fn check_labels(labels: &[usize], num_classes: usize, context: &'static str) -> Result<()> {
    match labels.iter().find(|&&l| l >= num_classes) {
        Some(&label) => Err(LpjtError::ClassOutOfRange {
            label,
            num_classes,
            context,
        }),
        None => Ok(()),
    }
}

/// Per-feature affine statistics fitted by [`zscore_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZScore {
    pub mean: Vec<f64>,
    /// Population standard deviation per feature; constant features store 0.
    pub std: Vec<f64>,
}

/// Below this standard deviation a feature is treated as constant.
pub const CONSTANT_FEATURE_STD: f64 = 1e-12;

impl ZScore {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let n = x.n() as f64;
        let data = x.as_matrix();
        let mut mean = Vec::with_capacity(x.dim());
        let mut std = Vec::with_capacity(x.dim());
        for row in data.row_iter() {
            let m = row.sum() / n;
            let var = row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            std.push(var.sqrt());
        }
        ZScore { mean, std }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.dim() != self.mean.len() {
            return Err(LpjtError::dims(format!(
                "z-score fitted on {} features, applied to {}",
                self.mean.len(),
                x.dim()
            )));
        }
        let mut out = x.as_matrix().clone();
        for (r, mut row) in out.row_iter_mut().enumerate() {
            let (m, s) = (self.mean[r], self.std[r]);
            if s < CONSTANT_FEATURE_STD {
                row.fill(0.0);
            } else {
                row.apply(|v| *v = (*v - m) / s);
            }
        }
        FeatureMatrix::new(out)
    }
}

/// Standardizes every feature row to zero mean and unit (population) variance.
///
/// Constant rows become all zeros. The fitted statistics are returned so the
/// same transform can be applied to held-out samples of the same domain.
pub fn zscore_normalize(x: &FeatureMatrix) -> Result<(FeatureMatrix, ZScore)> {
    let stats = ZScore::fit(x);
    let out = stats.apply(x)?;
    Ok((out, stats))
}

/// Scales every sample column to unit Euclidean norm; zero columns stay zero.
pub fn unit_normalize(x: &FeatureMatrix) -> FeatureMatrix {
    let mut out = x.as_matrix().clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    FeatureMatrix { data: out }
}

/// Feature preprocessing applied per domain before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    None,
    ZScore,
    Unit,
    /// Unit-normalize samples, then z-score features.
    #[default]
    UnitThenZScore,
}

/// Fitted per-domain normalizer, reusable on held-out data of that domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub kind: Normalization,
    pub zscore: Option<ZScore>,
}

impl Normalizer {
    pub fn fit(kind: Normalization, x: &FeatureMatrix) -> Self {
        let zscore = match kind {
            Normalization::ZScore => Some(ZScore::fit(x)),
            Normalization::UnitThenZScore => Some(ZScore::fit(&unit_normalize(x))),
            Normalization::None | Normalization::Unit => None,
        };
        Normalizer { kind, zscore }
    }

    pub fn identity() -> Self {
        Normalizer {
            kind: Normalization::None,
            zscore: None,
        }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        let unit = matches!(self.kind, Normalization::Unit | Normalization::UnitThenZScore);
        let base = if unit { unit_normalize(x) } else { x.clone() };
        match &self.zscore {
            Some(z) => z.apply(&base),
            None => Ok(base),
        }
    }
}

/// A checked adaptation problem: labeled source, unlabeled target and an
/// optional labeled target subset.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub source: &'a LabeledDataset,
    pub target_unlabeled: &'a FeatureMatrix,
    pub target_labeled: Option<&'a LabeledDataset>,
    /// `true` when source and target share the same feature dimensionality.
    pub homogeneous: bool,
    pub num_classes: usize,
}

/// Checks that the domains can be adapted together.
///
/// Heterogeneous feature spaces are allowed and reported through
/// [`Problem::homogeneous`].
pub fn validate_pair<'a>(
    src: &'a LabeledDataset,
    tgt_u: &'a FeatureMatrix,
    tgt_l: Option<&'a LabeledDataset>,
) -> Result<Problem<'a>> {
    // FeatureMatrix construction already rejects empty and non-finite data;
    // re-check since the fields are reachable through `features`.
    for (m, what) in [(&src.features, "source"), (tgt_u, "unlabeled target")] {
        if m.n() == 0 {
            return Err(LpjtError::invalid(format!("{what} domain is empty")));
        }
        if m.as_matrix().iter().any(|v| !v.is_finite()) {
            return Err(LpjtError::NonFinite("domain features"));
        }
    }
    let num_classes = src.num_classes();
    check_labels(src.labels(), num_classes, "source")?;
    if let Some(l) = tgt_l {
        if l.dim() != tgt_u.dim() {
            return Err(LpjtError::dims(format!(
                "labeled target has {} features, unlabeled target {}",
                l.dim(),
                tgt_u.dim()
            )));
        }
        check_labels(l.labels(), num_classes, "labeled target")?;
        if l.num_classes() != num_classes {
            return Err(LpjtError::invalid(format!(
                "class count mismatch: source {num_classes}, labeled target {}",
                l.num_classes()
            )));
        }
    }
    Ok(Problem {
        source: src,
        target_unlabeled: tgt_u,
        target_labeled: tgt_l,
        homogeneous: src.dim() == tgt_u.dim(),
        num_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        let r = rows.len();
        let c = rows[0].len();
        FeatureMatrix::new(DMatrix::from_fn(r, c, |i, j| rows[i][j])).unwrap()
    }

    fn random_fm(rng: &mut ChaCha8Rng, d: usize, n: usize) -> FeatureMatrix {
        FeatureMatrix::new(DMatrix::from_fn(d, n, |_, _| rng.random_range(-3.0..5.0))).unwrap()
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(FeatureMatrix::new(DMatrix::zeros(0, 3)).is_err());
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 1)] = f64::NAN;
        assert!(matches!(FeatureMatrix::new(m), Err(LpjtError::NonFinite(_))));
    }

    #[test]
    fn zscore_constant_row_is_zero() {
        let (z, _) = zscore_normalize(&fm(&[&[1.0, 1.0, 1.0]])).unwrap();
        assert_eq!(z.as_matrix().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn zscore_two_points() {
        let (z, stats) = zscore_normalize(&fm(&[&[0.0, 2.0]])).unwrap();
        assert_eq!(z.as_matrix().as_slice(), &[-1.0, 1.0]);
        assert_eq!(stats.mean, vec![1.0]);
        assert_eq!(stats.std, vec![1.0]);
    }

    #[test]
    fn zscore_moments_recomputed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_fm(&mut rng, 5, 20);
        let (z, _) = zscore_normalize(&x).unwrap();
        for row in z.as_matrix().row_iter() {
            let m = row.sum() / 20.0;
            let s = (row.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 20.0).sqrt();
            assert!(m.abs() <= 1e-12, "mean {m}");
            assert!((s - 1.0).abs() <= 1e-12, "std {s}");
        }
    }

    #[test]
    fn unit_normalize_examples() {
        let x = fm(&[&[3.0, 0.0], &[4.0, 0.0]]);
        let u = unit_normalize(&x);
        assert!((u.as_matrix()[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((u.as_matrix()[(1, 0)] - 0.8).abs() < 1e-15);
        assert_eq!(u.as_matrix()[(0, 1)], 0.0);
        assert_eq!(u.as_matrix()[(1, 1)], 0.0);
    }

    #[test]
    fn unit_normalize_random_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = unit_normalize(&random_fm(&mut rng, 6, 15));
        for col in u.as_matrix().column_iter() {
            assert!((col.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn zscore_apply_dimension_mismatch() {
        let stats = ZScore::fit(&fm(&[&[1.0, 2.0]]));
        assert!(stats.apply(&fm(&[&[1.0], &[2.0]])).is_err());
    }

    fn labeled(x: FeatureMatrix, labels: Vec<usize>, c: usize) -> LabeledDataset {
        LabeledDataset::new(x, labels, c).unwrap()
    }

    #[test]
    fn validate_heterogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = labeled(random_fm(&mut rng, 10, 4), vec![0, 1, 2, 0], 3);
        let tgt = random_fm(&mut rng, 3, 5);
        let p = validate_pair(&src, &tgt, None).unwrap();
        assert!(!p.homogeneous);
    }

    #[test]
    fn validate_identical_is_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_fm(&mut rng, 4, 6);
        let src = labeled(x.clone(), vec![0, 1, 2, 0, 1, 2], 3);
        let p = validate_pair(&src, &x, Some(&src)).unwrap();
        assert!(p.homogeneous);
        assert_eq!(p.num_classes, 3);
    }

    #[test]
    fn validate_rejects_out_of_range_target_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let src = labeled(random_fm(&mut rng, 2, 3), vec![0, 1, 2], 3);
        let tgt = random_fm(&mut rng, 2, 4);
        let tl = labeled(random_fm(&mut rng, 2, 2), vec![0, 3], 4);
        let err = validate_pair(&src, &tgt, Some(&tl)).unwrap_err();
        assert!(matches!(err, LpjtError::ClassOutOfRange { label: 3, .. }));
        // and the dataset itself refuses labels outside its own range
        assert!(LabeledDataset::new(random_fm(&mut rng, 2, 2), vec![0, 3], 3).is_err());
    }

    #[test]
    fn normalizer_roundtrip_matches_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_fm(&mut rng, 3, 9);
        let n = Normalizer::fit(Normalization::UnitThenZScore, &x);
        let (expected, _) = zscore_normalize(&unit_normalize(&x)).unwrap();
        assert_eq!(n.apply(&x).unwrap(), expected);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix() -> impl Strategy<Value = FeatureMatrix> {
            (1usize..6, 2usize..12).prop_flat_map(|(d, n)| {
                proptest::collection::vec(-50.0f64..50.0, d * n)
                    .prop_map(move |v| FeatureMatrix::new(DMatrix::from_vec(d, n, v)).unwrap())
            })
        }

        proptest! {
            #[test]
            fn zscore_idempotent(x in matrix()) {
                let (once, _) = zscore_normalize(&x).unwrap();
                let (twice, _) = zscore_normalize(&once).unwrap();
                for (a, b) in once.as_matrix().iter().zip(twice.as_matrix().iter()) {
                    prop_assert!((a - b).abs() <= 1e-10);
                }
            }

            #[test]
            fn unit_idempotent(x in matrix()) {
                let once = unit_normalize(&x);
                let twice = unit_normalize(&once);
                for (a, b) in once.as_matrix().iter().zip(twice.as_matrix().iter()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }

            #[test]
            fn validate_does_not_mutate(x in matrix()) {
                let labels: Vec<usize> = (0..x.n()).map(|i| i % 2).collect();
                let src = LabeledDataset::new(x.clone(), labels, 2).unwrap();
                let before = (src.clone(), x.clone());
                let _ = validate_pair(&src, &x, None);
                prop_assert_eq!(before, (src, x));
            }
        }
    }
}
