//! Alternating optimization: eigensolve for the projections, pseudo-label
//! refresh by label propagation, and landmark reweighting.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::{validate_pair, FeatureMatrix, LabeledDataset, Normalization, Normalizer};
use crate::eigsolve::{assemble_problem, kernelize_with_grams, solve, split_projection, EigProblem, Grams};
use crate::error::{LpjtError, Result};
use crate::graph::{centered_scatter, DomainGraphs, ScatterSet};
use crate::hyper::Hyperparams;
use crate::labelprop::{classify, nearest_neighbor};
use crate::landmark::{build_qp, solve_qp, LandmarkWeights};
use crate::mmd::{assemble_m, distribution_gap, MmdCoeffs};

/// Relative objective increase above which a pseudo-label refresh is undone.
pub const DAMPING_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Unsupervised,
    /// Uses a labeled target subset for initialization and propagation; it
    /// never enters the MMD or graph terms.
    Semisupervised,
}

/// Classifier used for the initial pseudo-labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitStrategy {
    #[default]
    LabelpropRaw,
    NnRaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitConfig {
    pub hyper: Hyperparams,
    pub mode: Mode,
    pub init_strategy: InitStrategy,
    pub normalization: Normalization,
    /// Undo a pseudo-label refresh when the objective then rises by more than
    /// [`DAMPING_THRESHOLD`]. Off by default: the trace ratio grows as the
    /// pseudo-labels improve, so damping tends to freeze the first labels.
    pub damping: bool,
    /// Recorded with the model; fitting itself draws no random numbers.
    pub seed: u64,
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    /// Trace ratio `Tr(PᵀRHS P) / Tr(PᵀLHS P)` at the selected projection.
    pub objective: Vec<f64>,
    /// Unweighted distribution gap of the embedded domains under the
    /// refreshed pseudo-labels.
    pub mmd: Vec<f64>,
    pub label_changes: Vec<usize>,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }
}

/// Normalized training samples that kernel projections are expressed over.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBasis {
    pub source: DMatrix<f64>,
    pub target: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    /// `d_s × d`, or `n_s × d` coefficients under a kernel.
    pub a: DMatrix<f64>,
    /// `d_t × d`, or `n_u × d` coefficients under a kernel.
    pub b: DMatrix<f64>,
    /// Hyperparameters as used; `d` may be lowered to the problem size.
    pub hyper: Hyperparams,
    pub weights: LandmarkWeights,
    pub trace: TrainTrace,
    pub source_normalizer: Normalizer,
    pub target_normalizer: Normalizer,
    pub pseudo_labels: Vec<usize>,
    pub num_classes: usize,
    pub mode: Mode,
    pub seed: u64,
    pub basis: Option<KernelBasis>,
}

impl SubspaceModel {
    /// Wraps bare projections with identity normalization and no kernel.
    pub fn from_projections(a: DMatrix<f64>, b: DMatrix<f64>, num_classes: usize) -> Result<Self> {
        if a.ncols() != b.ncols() {
            return Err(LpjtError::dims("A and B must have the same column count".to_string()));
        }
        let hyper = Hyperparams {
            d: a.ncols(),
            ..Default::default()
        };
        Ok(SubspaceModel {
            weights: LandmarkWeights::uniform(0, 0, hyper.delta),
            a,
            b,
            hyper,
            trace: TrainTrace::default(),
            source_normalizer: Normalizer::identity(),
            target_normalizer: Normalizer::identity(),
            pseudo_labels: Vec::new(),
            num_classes,
            mode: Mode::Unsupervised,
            seed: 0,
            basis: None,
        })
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }
}

/// Projects each domain onto its leading `k` principal directions.
pub fn pca_embed(x: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    if k == 0 || k > x.nrows() {
        return Err(LpjtError::invalid(format!(
            "cannot keep {k} of {} components",
            x.nrows()
        )));
    }
    let mean = x.column_mean();
    let mut centered = x.clone();
    for mut c in centered.column_iter_mut() {
        c -= &mean;
    }
    let cov = &centered * centered.transpose();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut basis = DMatrix::from_fn(x.nrows(), k, |r, c| eig.eigenvectors[(r, order[c])]);
    for mut col in basis.column_iter_mut() {
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(basis.transpose() * centered)
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Labeled references (source plus optional labeled target) in one matrix.
fn references(
    zs: &DMatrix<f64>,
    ys: &[usize],
    labeled: Option<(&DMatrix<f64>, &[usize])>,
) -> (DMatrix<f64>, Vec<usize>) {
    match labeled {
        Some((zl, yl)) => (hstack(zs, zl), ys.iter().chain(yl).copied().collect()),
        None => (zs.clone(), ys.to_vec()),
    }
}

fn initial_pseudo_labels(
    xs: &DMatrix<f64>,
    ys: &[usize],
    xu: &DMatrix<f64>,
    labeled: Option<(&DMatrix<f64>, &[usize])>,
    num_classes: usize,
    cfg: &FitConfig,
) -> Result<Vec<usize>> {
    let run = |train: &DMatrix<f64>, labels: &[usize], test: &DMatrix<f64>| match cfg.init_strategy {
        InitStrategy::LabelpropRaw => classify(train, labels, num_classes, test, &cfg.hyper),
        InitStrategy::NnRaw => nearest_neighbor(train, labels, test),
    };
    if let Some((xl, yl)) = labeled {
        return run(xl, yl, xu);
    }
    if xs.nrows() == xu.nrows() {
        return run(xs, ys, xu);
    }
    let k = xs.nrows().min(xu.nrows()).min(cfg.hyper.d);
    run(&pca_embed(xs, k)?, ys, &pca_embed(xu, k)?)
}

struct Trainer<'a> {
    xs: &'a DMatrix<f64>,
    ys: &'a [usize],
    xu: &'a DMatrix<f64>,
    num_classes: usize,
    hyper: &'a Hyperparams,
    homogeneous: bool,
    grams: Option<Grams>,
    source_graphs: DomainGraphs,
    sh_u: Option<DMatrix<f64>>,
}

impl Trainer<'_> {
    fn problem(&self, pseudo: &[usize], weights: &LandmarkWeights) -> Result<EigProblem> {
        let h = self.hyper;
        let coeffs = MmdCoeffs::new(
            &weights.alpha,
            &weights.beta,
            self.ys,
            pseudo,
            h.delta,
            self.num_classes,
        )?;
        let xu = FeatureMatrix::new(self.xu.clone())?;
        let target_graphs = DomainGraphs::build(&xu, pseudo, h.k_w, h.k_b)?;
        match &self.grams {
            Some(g) => kernelize_with_grams(g, &coeffs, &self.source_graphs, &target_graphs, h),
            None => {
                let m = assemble_m(self.xs, self.xu, &coeffs)?;
                let sh_u = self.sh_u.clone().unwrap_or_else(|| centered_scatter(self.xu));
                let s = ScatterSet::from_graphs(self.xs, &self.source_graphs, self.xu, &target_graphs, sh_u);
                assemble_problem(&m, &s, h, self.homogeneous)
            }
        }
    }

    fn solve(&self, pseudo: &[usize], weights: &LandmarkWeights, d: usize) -> Result<(DMatrix<f64>, f64)> {
        let problem = self.problem(pseudo, weights)?;
        let sol = solve(&problem, d)?;
        let objective = problem.ratio(&sol.p);
        if !objective.is_finite() {
            return Err(LpjtError::Numeric(format!("objective is not finite ({objective})")));
        }
        Ok((sol.p, objective))
    }

    fn embed(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        match &self.grams {
            Some(g) => (a.transpose() * &g.k_s, b.transpose() * &g.k_u),
            None => (a.transpose() * self.xs, b.transpose() * self.xu),
        }
    }
}

/// Fits projections `A`, `B` and landmark weights on a labeled source and an
/// unlabeled target.
///
/// In semisupervised mode `tgt_l` is required and seeds the pseudo-labels; in
/// unsupervised mode it is ignored.
pub fn fit(
    src: &LabeledDataset,
    tgt_u: &FeatureMatrix,
    tgt_l: Option<&LabeledDataset>,
    cfg: &FitConfig,
) -> Result<SubspaceModel> {
    cfg.hyper.validate()?;
    let problem = validate_pair(src, tgt_u, tgt_l)?;
    let tgt_l = match cfg.mode {
        Mode::Unsupervised => None,
        Mode::Semisupervised => Some(
            tgt_l.ok_or_else(|| LpjtError::Config("semisupervised mode requires a labeled target subset".into()))?,
        ),
    };
    if cfg.hyper.delta == 0.0 {
        return Err(LpjtError::invalid("delta must be > 0 to fit"));
    }
    let c = problem.num_classes;
    let source_normalizer = Normalizer::fit(cfg.normalization, &src.features);
    let target_normalizer = match tgt_l {
        Some(l) => Normalizer::fit(cfg.normalization, &tgt_u.hstack(&l.features)?),
        None => Normalizer::fit(cfg.normalization, tgt_u),
    };
    let xs_fm = source_normalizer.apply(&src.features)?;
    let xs = xs_fm.as_matrix().clone();
    let xu = target_normalizer.apply(tgt_u)?.into_matrix();
    let xl = tgt_l
        .map(|l| target_normalizer.apply(&l.features).map(FeatureMatrix::into_matrix))
        .transpose()?;
    let ys = src.labels();
    let labeled = xl.as_ref().zip(tgt_l.map(|l| l.labels()));

    let mut pseudo = initial_pseudo_labels(&xs, ys, &xu, labeled, c, cfg)?;

    let kernel = cfg.hyper.kernel;
    let grams = (!kernel.is_none()).then(|| Grams::new(kernel, &xs, &xu)).transpose()?;
    let (ds, dt) = match &grams {
        Some(_) => (xs.ncols(), xu.ncols()),
        None => (xs.nrows(), xu.nrows()),
    };
    let mut hyper = cfg.hyper.clone();
    if hyper.d > ds + dt {
        log::warn!(
            "d = {} exceeds the problem size {}; using {}",
            hyper.d,
            ds + dt,
            ds + dt
        );
        hyper.d = ds + dt;
    }
    let trainer = Trainer {
        xs: &xs,
        ys,
        xu: &xu,
        num_classes: c,
        hyper: &hyper,
        homogeneous: problem.homogeneous,
        source_graphs: DomainGraphs::build(&xs_fm, ys, hyper.k_w, hyper.k_b)?,
        sh_u: grams.is_none().then(|| centered_scatter(&xu)),
        grams,
    };

    let (ns, nu) = (xs.ncols(), xu.ncols());
    let mut weights = LandmarkWeights::uniform(ns, nu, hyper.delta);
    let mut previous: Option<(Vec<usize>, LandmarkWeights)> = None;
    let mut trace = TrainTrace::default();
    let mut projections = (DMatrix::zeros(ds, hyper.d), DMatrix::zeros(dt, hyper.d));

    for t in 0..hyper.iterations {
        let (mut p, mut objective) = trainer.solve(&pseudo, &weights, hyper.d)?;
        if let (Some(&last), Some((prev_labels, prev_weights))) = (trace.objective.last(), &previous) {
            if cfg.damping && *prev_labels != pseudo && objective > last + DAMPING_THRESHOLD * last.abs() {
                log::debug!("iteration {t}: objective rose from {last} to {objective}; keeping previous pseudo-labels");
                pseudo = prev_labels.clone();
                weights = prev_weights.clone();
                (p, objective) = trainer.solve(&pseudo, &weights, hyper.d)?;
            }
        }
        let (a, b) = split_projection(&p, ds, dt)?;
        let (zs, zu) = trainer.embed(&a, &b);

        let zl = match (&xl, &trainer.grams) {
            (Some(xl), Some(_)) => Some(b.transpose() * kernel.gram(&xu, xl)?),
            (Some(xl), None) => Some(b.transpose() * xl),
            _ => None,
        };
        let (train, train_labels) = references(&zs, ys, zl.as_ref().zip(tgt_l.map(|l| l.labels())));
        let refreshed = classify(&train, &train_labels, c, &zu, &hyper)?;
        let changes = refreshed.iter().zip(&pseudo).filter(|(a, b)| a != b).count();

        let qp = build_qp(&zs, &zu, ys, &refreshed, hyper.delta, c)?;
        let sol = solve_qp(&qp, &LandmarkWeights::uniform(ns, nu, hyper.delta))?;
        let gap = distribution_gap(&zs, &zu, ys, &refreshed, c)?;
        if !gap.is_finite() {
            return Err(LpjtError::Numeric("distribution gap is not finite".into()));
        }
        trace.objective.push(objective);
        trace.mmd.push(gap);
        trace.label_changes.push(changes);
        log::debug!("iteration {t}: objective {objective:.6e}, gap {gap:.6e}, {changes} label changes");

        previous = Some((
            std::mem::replace(&mut pseudo, refreshed),
            std::mem::replace(&mut weights, sol.weights),
        ));
        projections = (a, b);
    }

    let basis = trainer.grams.as_ref().map(|_| KernelBasis {
        source: xs.clone(),
        target: xu.clone(),
    });
    Ok(SubspaceModel {
        a: projections.0,
        b: projections.1,
        hyper,
        weights,
        trace,
        source_normalizer,
        target_normalizer,
        pseudo_labels: pseudo,
        num_classes: c,
        mode: cfg.mode,
        seed: cfg.seed,
        basis,
    })
}

/// `AᵀX` or `BᵀX` on already-normalized features. Under a kernel the input is
/// first mapped to its Gram matrix against the training samples.
pub fn transform(model: &SubspaceModel, x: &FeatureMatrix, domain: Domain) -> Result<FeatureMatrix> {
    let p = match domain {
        Domain::Source => &model.a,
        Domain::Target => &model.b,
    };
    let z = match &model.basis {
        Some(basis) => {
            let train = match domain {
                Domain::Source => &basis.source,
                Domain::Target => &basis.target,
            };
            if train.nrows() != x.dim() {
                return Err(LpjtError::dims(format!(
                    "model expects {} features, got {}",
                    train.nrows(),
                    x.dim()
                )));
            }
            p.transpose() * model.hyper.kernel.gram(train, x.as_matrix())?
        }
        None => {
            if p.nrows() != x.dim() {
                return Err(LpjtError::dims(format!(
                    "projection expects {} features, got {}",
                    p.nrows(),
                    x.dim()
                )));
            }
            p.transpose() * x.as_matrix()
        }
    };
    FeatureMatrix::new(z)
}

/// Normalizes raw features with the fitted statistics, then projects.
pub fn embed(model: &SubspaceModel, x: &FeatureMatrix, domain: Domain) -> Result<FeatureMatrix> {
    let normalizer = match domain {
        Domain::Source => &model.source_normalizer,
        Domain::Target => &model.target_normalizer,
    };
    transform(model, &normalizer.apply(x)?, domain)
}

/// Labels of `tgt_u` by propagation from the embedded source (and labeled
/// target, if given) in the learned subspace.
pub fn predict(
    model: &SubspaceModel,
    src: &LabeledDataset,
    tgt_u: &FeatureMatrix,
    tgt_l: Option<&LabeledDataset>,
) -> Result<Vec<usize>> {
    if model.a.ncols() == 0 || model.a.iter().chain(model.b.iter()).any(|v| !v.is_finite()) {
        return Err(LpjtError::invalid("model is not fitted"));
    }
    let zs = embed(model, &src.features, Domain::Source)?;
    let zu = embed(model, tgt_u, Domain::Target)?;
    let zl = tgt_l.map(|l| embed(model, &l.features, Domain::Target)).transpose()?;
    let (train, labels) = references(
        zs.as_matrix(),
        src.labels(),
        zl.as_ref().map(|z| z.as_matrix()).zip(tgt_l.map(|l| l.labels())),
    );
    classify(&train, &labels, model.num_classes, zu.as_matrix(), &model.hyper)
}

/// Fraction of exact matches.
pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(LpjtError::dims(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(LpjtError::invalid("nothing to evaluate"));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyper::Coupling;
    use crate::kernel::Kernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(rng: &mut ChaCha8Rng, centers: &[[f64; 2]], per_class: usize, spread: f64) -> LabeledDataset {
        let noise = Normal::new(0.0, spread).unwrap();
        let mut cols = Vec::new();
        let mut labels = Vec::new();
        for (c, m) in centers.iter().enumerate() {
            for _ in 0..per_class {
                cols.push(vec![m[0] + noise.sample(rng), m[1] + noise.sample(rng)]);
                labels.push(c);
            }
        }
        LabeledDataset::new(FeatureMatrix::from_samples(&cols).unwrap(), labels, centers.len()).unwrap()
    }

    fn small_cfg() -> FitConfig {
        FitConfig {
            hyper: Hyperparams {
                d: 2,
                iterations: 2,
                ..Default::default()
            },
            normalization: Normalization::ZScore,
            ..Default::default()
        }
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(evaluate(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(evaluate(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(evaluate(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
        assert!(evaluate(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn identity_projection_transform() {
        let model = SubspaceModel::from_projections(DMatrix::identity(3, 3), DMatrix::identity(3, 3), 2).unwrap();
        let x = FeatureMatrix::new(DMatrix::from_fn(3, 4, |r, c| (r * 4 + c) as f64)).unwrap();
        assert_eq!(transform(&model, &x, Domain::Source).unwrap(), x);
        let zero = FeatureMatrix::new(DMatrix::zeros(3, 2)).unwrap();
        assert_eq!(
            transform(&model, &zero, Domain::Target).unwrap().as_matrix().amax(),
            0.0
        );
        let wrong = FeatureMatrix::new(DMatrix::zeros(2, 2)).unwrap();
        assert!(transform(&model, &wrong, Domain::Source).is_err());
    }

    #[test]
    fn duplicate_source_point_gets_its_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let src = blobs(&mut rng, &[[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]], 5, 0.3);
        let model = SubspaceModel::from_projections(DMatrix::identity(2, 2), DMatrix::identity(2, 2), 3).unwrap();
        let tgt = src.features.select(&[7]).unwrap();
        assert_eq!(predict(&model, &src, &tgt, None).unwrap(), vec![src.labels()[7]]);
    }

    #[test]
    fn pca_keeps_leading_direction() {
        // variance concentrated along the second coordinate
        let x = DMatrix::from_row_slice(2, 4, &[0.0, 0.1, 0.0, -0.1, -3.0, -1.0, 1.0, 3.0]);
        let z = pca_embed(&x, 1).unwrap();
        let expected = [-3.0, -1.0, 1.0, 3.0];
        for (v, e) in z.iter().zip(expected) {
            assert!((v - e).abs() < 0.05, "{z}");
        }
        assert!(pca_embed(&x, 3).is_err());
    }

    #[test]
    fn fit_shapes_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let centers = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]];
        let src = blobs(&mut rng, &centers, 8, 0.5);
        let tgt = blobs(&mut rng, &centers, 8, 0.5);
        let model = fit(&src, &tgt.features, None, &small_cfg()).unwrap();
        assert_eq!(model.a.shape(), (2, 2));
        assert_eq!(model.b.shape(), (2, 2));
        assert_eq!(model.trace.len(), 2);
        assert!(model.trace.mmd.iter().all(|&m| m >= 0.0));
        let z = transform(&model, &src.features, Domain::Source).unwrap();
        assert_eq!(z.dim(), 2);
        let pred = predict(&model, &src, &tgt.features, None).unwrap();
        assert_eq!(pred.len(), tgt.n());
        assert!(evaluate(&pred, tgt.labels()).unwrap() >= 0.9);
    }

    #[test]
    fn identical_domains_have_no_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let src = blobs(&mut rng, &[[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]], 10, 0.4);
        let cfg = |lambda_couple| FitConfig {
            hyper: Hyperparams {
                d: 2,
                iterations: 1,
                lambda_couple,
                ..Default::default()
            },
            normalization: Normalization::ZScore,
            ..Default::default()
        };
        // the variance terms act on B only, so A = B needs the coupling term
        let loose = fit(&src, &src.features, None, &cfg(Coupling::Off)).unwrap();
        assert!(loose.trace.mmd[0] <= 1e-2, "{:?}", loose.trace.mmd);
        let tied = fit(&src, &src.features, None, &cfg(Coupling::Weight(1e6))).unwrap();
        assert!(tied.trace.mmd[0] <= 1e-6, "{:?}", tied.trace.mmd);
    }

    #[test]
    fn fit_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let centers = [[0.0, 0.0], [3.0, 1.0]];
        let src = blobs(&mut rng, &centers, 10, 0.6);
        let tgt = blobs(&mut rng, &[[0.5, 0.5], [3.5, 1.5]], 10, 0.6);
        let m1 = fit(&src, &tgt.features, None, &small_cfg()).unwrap();
        let m2 = fit(&src, &tgt.features, None, &small_cfg()).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(
            predict(&m1, &src, &tgt.features, None).unwrap(),
            predict(&m2, &src, &tgt.features, None).unwrap()
        );
    }

    #[test]
    fn semisupervised_requires_labeled_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let src = blobs(&mut rng, &[[0.0, 0.0], [3.0, 0.0]], 5, 0.3);
        let cfg = FitConfig {
            mode: Mode::Semisupervised,
            ..small_cfg()
        };
        assert!(matches!(
            fit(&src, &src.features, None, &cfg),
            Err(LpjtError::Config(_))
        ));
    }

    #[test]
    fn every_iteration_keeps_weights_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let centers = [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]];
        let src = blobs(&mut rng, &centers, 6, 0.5);
        let tgt = blobs(&mut rng, &centers, 6, 0.5);
        for t in 1..=3 {
            let cfg = FitConfig {
                hyper: Hyperparams {
                    d: 2,
                    iterations: t,
                    ..Default::default()
                },
                ..Default::default()
            };
            let model = fit(&src, &tgt.features, None, &cfg).unwrap();
            assert!(model.weights.max_violation(src.labels(), &model.pseudo_labels, 3) <= 1e-8);
        }
    }

    #[test]
    fn heterogeneous_and_kernel_fits_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let src = blobs(&mut rng, &[[0.0, 0.0], [4.0, 0.0]], 6, 0.4);
        let map = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let tgt = FeatureMatrix::new(&map * src.features.as_matrix()).unwrap();
        let model = fit(&src, &tgt, None, &small_cfg()).unwrap();
        assert_eq!(model.b.nrows(), 3);
        assert_eq!(predict(&model, &src, &tgt, None).unwrap().len(), tgt.n());

        let cfg = FitConfig {
            hyper: Hyperparams {
                d: 2,
                iterations: 2,
                kernel: Kernel::Rbf { bandwidth: 1.0 },
                ..Default::default()
            },
            normalization: Normalization::ZScore,
            ..Default::default()
        };
        let model = fit(&src, &src.features, None, &cfg).unwrap();
        assert_eq!(model.a.nrows(), src.n());
        let pred = predict(&model, &src, &src.features, None).unwrap();
        assert!(evaluate(&pred, src.labels()).unwrap() >= 0.9);
    }
    #[test]
    fn damping_caps_objective_rise_after_label_changes() {
        let pair = crate::synth::generate(crate::synth::SynthKind::Rotated, 20, 3, 2).unwrap();
        let cfg = FitConfig {
            hyper: Hyperparams {
                d: 2,
                iterations: 6,
                ..Default::default()
            },
            normalization: Normalization::None,
            damping: true,
            ..Default::default()
        };
        let model = fit(&pair.source, &pair.target.features, None, &cfg).unwrap();
        let tr = &model.trace;
        for t in 1..tr.len() {
            if tr.label_changes[t - 1] > 0 {
                let cap = tr.objective[t - 1] * (1.0 + DAMPING_THRESHOLD) + 1e-12;
                assert!(tr.objective[t] <= cap, "iteration {t}: {:?}", tr.objective);
            }
        }
    }
}
