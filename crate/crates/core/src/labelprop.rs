//! Graph label propagation, `Y(t+1) = σ S Y(t) + (1 − σ) Y(0)`, with
//! `S = D^{-1/2} W D^{-1/2}` over a heat-kernel neighbor graph.

use nalgebra::DMatrix;

use crate::error::{LpjtError, Result};
use crate::graph::{knn_graph, pairwise_sq_dists};
use crate::hyper::Hyperparams;

pub const MAX_PROPAGATION_STEPS: usize = 1000;
pub const PROPAGATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PropagationResult {
    /// `n × C` class scores.
    pub soft_labels: DMatrix<f64>,
    /// Row-wise argmax; ties go to the lowest class index.
    pub hard_labels: Vec<usize>,
    pub iterations_used: usize,
}

/// Symmetrically normalized affinity of a k-NN graph over the columns of `z`
/// (`k = None` for a fully connected graph). Isolated nodes get zero rows.
pub fn similarity_matrix(z: &DMatrix<f64>, k: Option<usize>) -> DMatrix<f64> {
    let w = knn_graph(z, k);
    let w = w.weights();
    let inv_sqrt: Vec<f64> = w
        .row_iter()
        .map(|r| {
            let d = r.sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| inv_sqrt[i] * w[(i, j)] * inv_sqrt[j])
}

pub(crate) fn argmax_rows(y: &DMatrix<f64>) -> Vec<usize> {
    y.row_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Iterates the propagation recurrence until the max-norm step falls below
/// [`PROPAGATION_TOLERANCE`] or [`MAX_PROPAGATION_STEPS`] is reached.
pub fn propagate(s: &DMatrix<f64>, y0: &DMatrix<f64>, sigma: f64) -> Result<PropagationResult> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(LpjtError::invalid(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    if !s.is_square() || s.nrows() != y0.nrows() {
        return Err(LpjtError::dims(format!(
            "similarity {}x{} vs labels {}x{}",
            s.nrows(),
            s.ncols(),
            y0.nrows(),
            y0.ncols()
        )));
    }
    let anchor = y0 * (1.0 - sigma);
    // neighbor graphs are sparse; iterate over nonzeros only
    let rows: Vec<Vec<(usize, f64)>> = s
        .row_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, &v)| (j, v))
                .collect()
        })
        .collect();
    let mut y = y0.clone();
    let mut next = anchor.clone();
    let mut used = 0;
    for step in 1..=MAX_PROPAGATION_STEPS {
        for (i, row) in rows.iter().enumerate() {
            for c in 0..y.ncols() {
                let acc: f64 = row.iter().map(|&(j, v)| v * y[(j, c)]).sum();
                next[(i, c)] = sigma * acc + anchor[(i, c)];
            }
        }
        let delta = (&next - &y).amax();
        std::mem::swap(&mut y, &mut next);
        used = step;
        if delta < PROPAGATION_TOLERANCE {
            break;
        }
    }
    let hard_labels = argmax_rows(&y);
    Ok(PropagationResult {
        soft_labels: y,
        hard_labels,
        iterations_used: used,
    })
}

/// One-hot rows for the labeled samples followed by zero rows.
pub fn initial_labels(labels: &[usize], n_unlabeled: usize, num_classes: usize) -> DMatrix<f64> {
    let mut y0 = DMatrix::zeros(labels.len() + n_unlabeled, num_classes);
    for (i, &l) in labels.iter().enumerate() {
        y0[(i, l)] = 1.0;
    }
    y0
}

fn unit_columns(z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = z.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    out
}

/// Propagates labels from `train` to `test` over a joint graph and returns the
/// hard labels of the test columns.
///
/// Test samples that receive no label mass (disconnected from every labeled
/// sample) take the label of their nearest training sample.
pub fn classify(
    train: &DMatrix<f64>,
    train_labels: &[usize],
    num_classes: usize,
    test: &DMatrix<f64>,
    hyper: &Hyperparams,
) -> Result<Vec<usize>> {
    if train.nrows() != test.nrows() {
        return Err(LpjtError::dims(format!(
            "train has {} features, test {}",
            train.nrows(),
            test.nrows()
        )));
    }
    if train_labels.len() != train.ncols() {
        return Err(LpjtError::dims("train labels do not match train samples".to_string()));
    }
    if train.ncols() == 0 {
        return Err(LpjtError::invalid("no labeled samples to propagate from"));
    }
    crate::data::check_labels(train_labels, num_classes, "propagation")?;
    let (nl, nt) = (train.ncols(), test.ncols());
    let mut joint = DMatrix::zeros(train.nrows(), nl + nt);
    joint.columns_mut(0, nl).copy_from(train);
    joint.columns_mut(nl, nt).copy_from(test);
    if hyper.normalize_embedding {
        joint = unit_columns(&joint);
    }
    let k = (!hyper.lp_fully_connected).then_some(hyper.k_lp);
    let s = similarity_matrix(&joint, k);
    let y0 = initial_labels(train_labels, nt, num_classes);
    let result = propagate(&s, &y0, hyper.sigma_lp)?;

    let mut labels = result.hard_labels[nl..].to_vec();
    let mut dists: Option<DMatrix<f64>> = None;
    for (t, label) in labels.iter_mut().enumerate() {
        let row = result.soft_labels.row(nl + t);
        if row.iter().all(|&v| v <= 0.0) {
            let d = dists.get_or_insert_with(|| pairwise_sq_dists(&joint));
            let nearest = (0..nl)
                .min_by(|&a, &b| d[(nl + t, a)].total_cmp(&d[(nl + t, b)]).then(a.cmp(&b)))
                .unwrap_or(0);
            *label = train_labels[nearest];
        }
    }
    Ok(labels)
}

/// 1-nearest-neighbor labels of `test` columns against labeled `train` columns.
pub fn nearest_neighbor(train: &DMatrix<f64>, train_labels: &[usize], test: &DMatrix<f64>) -> Result<Vec<usize>> {
    if train.nrows() != test.nrows() {
        return Err(LpjtError::dims("train and test dimensionality differ".to_string()));
    }
    if train.ncols() == 0 || train_labels.len() != train.ncols() {
        return Err(LpjtError::invalid("nearest neighbor needs labeled training samples"));
    }
    Ok(test
        .column_iter()
        .map(|x| {
            let best = (0..train.ncols())
                .map(|i| ((train.column(i) - x).norm_squared(), i))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, i)| i)
                .unwrap_or(0);
            train_labels[best]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DVector, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn closed_form(s: &DMatrix<f64>, y0: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
        let n = s.nrows();
        let a = DMatrix::identity(n, n) - s * sigma;
        a.lu().solve(&(y0 * (1.0 - sigma))).unwrap()
    }

    #[test]
    fn two_identical_points() {
        let z = DMatrix::from_element(2, 2, 0.3);
        let s = similarity_matrix(&z, Some(1));
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn isolated_node_has_zero_row() {
        // third point so far away its heat weight underflows to zero
        let z = DMatrix::from_row_slice(1, 3, &[0.0, 0.5, 1e3]);
        let s = similarity_matrix(&z, Some(1));
        assert!(s.row(2).iter().all(|&v| v == 0.0));
        assert!(s.column(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spectral_radius_at_most_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let z = DMatrix::from_fn(3, 10, |_, _| rng.random_range(-1.0..1.0));
        let s = similarity_matrix(&z, Some(3));
        let eig = SymmetricEigen::new(s).eigenvalues;
        assert!(eig.iter().all(|v| v.abs() <= 1.0 + 1e-10));
    }

    #[test]
    fn tiny_sigma_returns_initial() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = DMatrix::from_fn(2, 6, |_, _| rng.random_range(-1.0..1.0));
        let s = similarity_matrix(&z, Some(2));
        let y0 = initial_labels(&[0, 1], 4, 2);
        let r = propagate(&s, &y0, 1e-12).unwrap();
        assert!((&r.soft_labels - &y0).amax() <= 1e-10);
    }

    #[test]
    fn disconnected_components_adopt_their_label() {
        let mut w = DMatrix::zeros(4, 4);
        w[(0, 1)] = 1.0;
        w[(1, 0)] = 1.0;
        w[(2, 3)] = 1.0;
        w[(3, 2)] = 1.0;
        // W is already normalized: every degree is one
        let mut y0 = DMatrix::zeros(4, 2);
        y0[(0, 1)] = 1.0;
        y0[(2, 0)] = 1.0;
        let r = propagate(&w, &y0, 0.9).unwrap();
        assert_eq!(r.hard_labels, vec![1, 1, 0, 0]);
    }

    #[test]
    fn iterate_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let z = DMatrix::from_fn(2, 8, |_, _| rng.random_range(-1.0..1.0));
        let s = similarity_matrix(&z, Some(3));
        let y0 = initial_labels(&[0, 1, 2], 5, 3);
        let r = propagate(&s, &y0, 0.9).unwrap();
        assert!((&r.soft_labels - closed_form(&s, &y0, 0.9)).amax() <= 1e-6);
    }

    #[test]
    fn geometric_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let z = DMatrix::from_fn(2, 12, |_, _| rng.random_range(-1.0..1.0));
        let s = similarity_matrix(&z, Some(4));
        let y0 = initial_labels(&[0, 1, 0], 9, 2);
        let sigma = 0.8;
        let star = closed_form(&s, &y0, sigma);
        let mut y = y0.clone();
        for _ in 0..30 {
            let next = &s * &y * sigma + &y0 * (1.0 - sigma);
            let before = (&y - &star).norm();
            let after = (&next - &star).norm();
            assert!(after <= sigma * before + 1e-12);
            y = next;
        }
    }

    #[test]
    fn rejects_bad_sigma() {
        let s = DMatrix::zeros(2, 2);
        assert!(propagate(&s, &DMatrix::zeros(2, 1), 1.0).is_err());
    }

    #[test]
    fn coincident_test_point_inherits_label() {
        let train = DMatrix::from_row_slice(2, 3, &[0.0, 5.0, 0.0, 0.0, 0.0, 5.0]);
        let test = DMatrix::from_row_slice(2, 1, &[5.0, 0.0]);
        let hyper = Hyperparams {
            k_lp: 1,
            normalize_embedding: false,
            ..Default::default()
        };
        assert_eq!(classify(&train, &[0, 1, 2], 3, &test, &hyper).unwrap(), vec![1]);
    }

    #[test]
    fn equidistant_point_breaks_tie_low() {
        let train = DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]);
        let test = DMatrix::from_row_slice(1, 1, &[0.0]);
        let hyper = Hyperparams {
            k_lp: 2,
            normalize_embedding: false,
            ..Default::default()
        };
        assert_eq!(classify(&train, &[1, 0], 2, &test, &hyper).unwrap(), vec![0]);
    }

    #[test]
    fn separated_blobs_agree_with_nearest_neighbor() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let centers = [(-5.0, 0.0), (5.0, 0.0)];
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..10 {
                pts.push(vec![cx + rng.random_range(-0.3..0.3), cy + rng.random_range(-0.3..0.3)]);
                labels.push(c);
            }
        }
        let all = DMatrix::from_fn(2, 20, |r, c| pts[c][r]);
        // every fourth point is labeled, the rest are test points
        let train_idx: Vec<usize> = (0..20).filter(|i| i % 4 == 0).collect();
        let test_idx: Vec<usize> = (0..20).filter(|i| i % 4 != 0).collect();
        let train = all.select_columns(&train_idx);
        let test = all.select_columns(&test_idx);
        let tl: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
        let truth: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
        let hyper = Hyperparams {
            normalize_embedding: false,
            ..Default::default()
        };
        let pred = classify(&train, &tl, 2, &test, &hyper).unwrap();
        let nn = nearest_neighbor(&train, &tl, &test).unwrap();
        assert_eq!(pred, truth);
        let agree = pred.iter().zip(&nn).filter(|(a, b)| a == b).count();
        assert!(agree as f64 / pred.len() as f64 >= 0.95);
    }

    #[test]
    fn labeled_rows_keep_argmax_at_low_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(90);
        // two tight labeled pairs: each labeled node's heaviest edge is same-label
        let mut cols = Vec::new();
        for &(cx, l) in &[(0.0, 0), (0.1, 0), (3.0, 1), (3.1, 1)] {
            cols.push((vec![cx, rng.random_range(-0.01..0.01)], l));
        }
        let z = DMatrix::from_fn(2, 4, |r, c| cols[c].0[r]);
        let s = similarity_matrix(&z, Some(2));
        let labels: Vec<usize> = cols.iter().map(|c| c.1).collect();
        let y0 = initial_labels(&labels, 0, 2);
        let r = propagate(&s, &y0, 0.5).unwrap();
        assert_eq!(r.hard_labels, labels);
        let _ = DVector::<f64>::zeros(1);
    }
}
