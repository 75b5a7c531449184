//! Neighborhood graphs, Laplacians and the scatter matrices built from them.
//!
//! Two graphs are built per domain. The intrinsic graph links every sample
//! to its `k_w` nearest neighbors of the same label; the penalty graph links
//! every sample to its `k_b` nearest neighbors of a different label. Both are
//! symmetrized by OR and weighted with the heat kernel
//! `exp(-‖x_i − x_j‖² / 2)`.

use nalgebra::DMatrix;

use crate::data::FeatureMatrix;
use crate::error::{LpjtError, Result};
use crate::hyper::Hyperparams;

/// Heat-kernel edge weight; zero when the nodes are not connected.
pub fn heat_kernel_weight(xi: &[f64], xj: &[f64], connected: bool) -> Result<f64> {
    if xi.len() != xj.len() {
        return Err(LpjtError::dims(format!(
            "heat kernel on vectors of length {} and {}",
            xi.len(),
            xj.len()
        )));
    }
    if !connected {
        return Ok(0.0);
    }
    let sq: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(heat(sq))
}

#[inline]
pub(crate) fn heat(sq_dist: f64) -> f64 {
    (-sq_dist / 2.0).exp()
}

/// Squared Euclidean distances between all sample columns.
pub fn pairwise_sq_dists(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = x.column(i);
        for j in (i + 1)..n {
            let d = (xi - x.column(j)).norm_squared();
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    out
}

/// Symmetric weight matrix with zero diagonal and entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    w: DMatrix<f64>,
}

impl WeightedGraph {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(LpjtError::dims(format!("weight matrix is {}x{}", w.nrows(), w.ncols())));
        }
        let n = w.nrows();
        for i in 0..n {
            if w[(i, i)] != 0.0 {
                return Err(LpjtError::invalid(format!("nonzero self-loop at node {i}")));
            }
            for j in 0..n {
                let v = w[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(LpjtError::invalid(format!("weight {v} at ({i},{j}) outside [0,1]")));
                }
                if v != w[(j, i)] {
                    return Err(LpjtError::invalid(format!("asymmetric weight at ({i},{j})")));
                }
            }
        }
        Ok(WeightedGraph { w })
    }

    pub fn empty(n: usize) -> Self {
        WeightedGraph {
            w: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.w[(i, j)] != 0.0)
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.w.iter().all(|&v| v == 0.0)
    }
}

/// k-nearest-neighbor graph restricted to pairs accepted by `admissible`.
///
/// Ties in distance go to the lower index. Edges are symmetrized by OR.
fn restricted_knn(dists: &DMatrix<f64>, k: usize, admissible: impl Fn(usize, usize) -> bool) -> WeightedGraph {
    let n = dists.nrows();
    let mut w = DMatrix::zeros(n, n);
    let mut candidates = Vec::with_capacity(n);
    for i in 0..n {
        candidates.clear();
        candidates.extend((0..n).filter(|&j| j != i && admissible(i, j)));
        candidates.sort_by(|&a, &b| dists[(i, a)].total_cmp(&dists[(i, b)]).then(a.cmp(&b)));
        for &j in candidates.iter().take(k) {
            let v = heat(dists[(i, j)]);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    WeightedGraph { w }
}

/// Unrestricted k-NN graph (`None` connects every pair).
pub fn knn_graph(x: &DMatrix<f64>, k: Option<usize>) -> WeightedGraph {
    let dists = pairwise_sq_dists(x);
    let n = x.ncols();
    restricted_knn(&dists, k.unwrap_or(n), |_, _| true)
}

fn check_labels_len(x: &FeatureMatrix, labels: &[usize]) -> Result<()> {
    if labels.len() != x.n() {
        return Err(LpjtError::dims(format!(
            "{} labels for {} samples",
            labels.len(),
            x.n()
        )));
    }
    Ok(())
}

/// Intrinsic graph: each sample connects to its `k_w` nearest same-label
/// neighbors. `k_w` is effectively clamped to the class size minus one.
pub fn build_intrinsic_graph(x: &FeatureMatrix, labels: &[usize], k_w: usize) -> Result<WeightedGraph> {
    check_labels_len(x, labels)?;
    let dists = pairwise_sq_dists(x.as_matrix());
    Ok(restricted_knn(&dists, k_w, |i, j| labels[i] == labels[j]))
}

/// Penalty graph: each sample connects to its `k_b` nearest neighbors with a
/// different label. With a single class present the graph is empty.
pub fn build_penalty_graph(x: &FeatureMatrix, labels: &[usize], k_b: usize) -> Result<WeightedGraph> {
    check_labels_len(x, labels)?;
    if labels.windows(2).all(|w| w[0] == w[1]) {
        log::warn!("penalty graph requested with a single class present; returning empty graph");
        return Ok(WeightedGraph::empty(x.n()));
    }
    let dists = pairwise_sq_dists(x.as_matrix());
    Ok(restricted_knn(&dists, k_b, |i, j| labels[i] != labels[j]))
}

/// Graph Laplacian `L = D − W` with `D_ii = Σ_{j≠i} W_ij`.
pub fn laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let w = g.weights();
    let mut l = -w.clone();
    for i in 0..g.n() {
        l[(i, i)] = w.row(i).sum();
    }
    l
}

/// `X L Xᵀ`
pub fn scatter(x: &DMatrix<f64>, l: &DMatrix<f64>) -> DMatrix<f64> {
    let xl = x * l;
    symmetrize(xl * x.transpose())
}

/// `X (I − 11ᵀ/n) Xᵀ`, i.e. `n` times the biased covariance.
pub fn centered_scatter(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let mean = x.column_mean();
    let mut centered = x.clone();
    for j in 0..n {
        let mut c = centered.column_mut(j);
        c -= &mean;
    }
    symmetrize(&centered * centered.transpose())
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Intrinsic and penalty Laplacians of one domain.
#[derive(Debug, Clone)]
pub struct DomainGraphs {
    pub intrinsic: DMatrix<f64>,
    pub penalty: DMatrix<f64>,
}

impl DomainGraphs {
    pub fn build(x: &FeatureMatrix, labels: &[usize], k_w: usize, k_b: usize) -> Result<Self> {
        Ok(DomainGraphs {
            intrinsic: laplacian(&build_intrinsic_graph(x, labels, k_w)?),
            penalty: laplacian(&build_penalty_graph(x, labels, k_b)?),
        })
    }
}

/// Scatter matrices of both domains plus the target covariance term.
#[derive(Debug, Clone)]
pub struct ScatterSet {
    pub sw_s: DMatrix<f64>,
    pub sb_s: DMatrix<f64>,
    pub sw_u: DMatrix<f64>,
    pub sb_u: DMatrix<f64>,
    pub sh_u: DMatrix<f64>,
}

impl ScatterSet {
    /// Assembles scatters from already-built graphs; `sh_u` is passed in
    /// because it only depends on the target samples.
    pub fn from_graphs(
        x_s: &DMatrix<f64>,
        source: &DomainGraphs,
        x_u: &DMatrix<f64>,
        target: &DomainGraphs,
        sh_u: DMatrix<f64>,
    ) -> Self {
        ScatterSet {
            sw_s: scatter(x_s, &source.intrinsic),
            sb_s: scatter(x_s, &source.penalty),
            sw_u: scatter(x_u, &target.intrinsic),
            sb_u: scatter(x_u, &target.penalty),
            sh_u,
        }
    }
}

pub fn scatter_matrices(
    x_s: &FeatureMatrix,
    labels_s: &[usize],
    x_u: &FeatureMatrix,
    pseudo_labels_u: &[usize],
    hyper: &Hyperparams,
) -> Result<ScatterSet> {
    let gs = DomainGraphs::build(x_s, labels_s, hyper.k_w, hyper.k_b)?;
    let gu = DomainGraphs::build(x_u, pseudo_labels_u, hyper.k_w, hyper.k_b)?;
    Ok(ScatterSet::from_graphs(
        x_s.as_matrix(),
        &gs,
        x_u.as_matrix(),
        &gu,
        centered_scatter(x_u.as_matrix()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DVector, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, d: usize, n: usize) -> FeatureMatrix {
        FeatureMatrix::new(DMatrix::from_fn(d, n, |_, _| rng.random_range(-2.0..2.0))).unwrap()
    }

    fn min_eig(m: &DMatrix<f64>) -> f64 {
        SymmetricEigen::new(m.clone()).eigenvalues.min()
    }

    #[test]
    fn heat_kernel_examples() {
        assert_eq!(heat_kernel_weight(&[1.0, 2.0], &[1.0, 2.0], true).unwrap(), 1.0);
        let w = heat_kernel_weight(&[0.0, 0.0], &[1.0, 1.0], true).unwrap();
        assert!((w - (-1.0f64).exp()).abs() < 1e-15);
        assert!((w - 0.367879).abs() < 1e-6);
        assert_eq!(heat_kernel_weight(&[0.0], &[5.0], false).unwrap(), 0.0);
        assert!(heat_kernel_weight(&[0.0], &[5.0, 1.0], true).is_err());
    }

    #[test]
    fn two_sample_graphs() {
        let x = FeatureMatrix::from_samples(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let same = build_intrinsic_graph(&x, &[0, 0], 5).unwrap();
        assert_eq!(same.edge_count(), 1);
        assert!((same.weights()[(0, 1)] - (-0.5f64).exp()).abs() < 1e-15);
        let diff = build_intrinsic_graph(&x, &[0, 1], 5).unwrap();
        assert!(diff.is_empty());
        let pen = build_penalty_graph(&x, &[0, 1], 1).unwrap();
        assert_eq!(pen.edge_count(), 1);
        let single = build_penalty_graph(&x, &[1, 1], 1).unwrap();
        assert!(single.is_empty());
    }

    /// Brute-force neighbor oracle: for each node, scan every other node and
    /// keep the admissible one with the smallest distance (lowest index on ties).
    fn nearest_oracle(x: &FeatureMatrix, labels: &[usize], same: bool) -> Vec<(usize, usize)> {
        let n = x.n();
        let mut edges = Vec::new();
        for i in 0..n {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..n {
                if j == i || (labels[i] == labels[j]) != same {
                    continue;
                }
                let d: f64 = (0..x.dim())
                    .map(|r| (x.as_matrix()[(r, i)] - x.as_matrix()[(r, j)]).powi(2))
                    .sum();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            if let Some((_, j)) = best {
                edges.push((i.min(j), i.max(j)));
            }
        }
        edges.sort();
        edges.dedup();
        edges
    }

    fn edges_of(g: &WeightedGraph) -> Vec<(usize, usize)> {
        let n = g.n();
        let mut e = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if g.weights()[(i, j)] != 0.0 {
                    e.push((i, j));
                }
            }
        }
        e
    }

    #[test]
    fn six_point_graphs_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let x = random(&mut rng, 2, 6);
            let labels = [0, 1, 0, 1, 0, 1];
            let wi = build_intrinsic_graph(&x, &labels, 1).unwrap();
            assert_eq!(edges_of(&wi), nearest_oracle(&x, &labels, true));
            let wb = build_penalty_graph(&x, &labels, 1).unwrap();
            assert_eq!(edges_of(&wb), nearest_oracle(&x, &labels, false));
        }
    }

    #[test]
    fn graphs_respect_label_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(&mut rng, 3, 25);
        let labels: Vec<usize> = (0..25).map(|i| (i * 7) % 3).collect();
        let wi = build_intrinsic_graph(&x, &labels, 3).unwrap();
        let wb = build_penalty_graph(&x, &labels, 3).unwrap();
        for g in [&wi, &wb] {
            // re-validate through the checked constructor
            WeightedGraph::new(g.weights().clone()).unwrap();
        }
        for i in 0..25 {
            for j in 0..25 {
                if wi.weights()[(i, j)] != 0.0 {
                    assert_eq!(labels[i], labels[j]);
                    assert!(wi.weights()[(i, j)] > 0.0 && wi.weights()[(i, j)] <= 1.0);
                }
                if wb.weights()[(i, j)] != 0.0 {
                    assert_ne!(labels[i], labels[j]);
                }
            }
        }
    }

    #[test]
    fn k_larger_than_class_is_clamped() {
        let x = FeatureMatrix::from_samples(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let g = build_intrinsic_graph(&x, &[0, 0, 1], 10).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn laplacian_examples() {
        let g = WeightedGraph::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let l = laplacian(&g);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random(&mut rng, 3, 8);
        let g = knn_graph(x.as_matrix(), Some(3));
        let l = laplacian(&g);
        let ones = DVector::from_element(8, 1.0);
        assert!((&l * ones).amax() <= 1e-12);
        assert!(min_eig(&l) >= -1e-10);
    }

    #[test]
    fn rejects_invalid_weight_matrices() {
        assert!(WeightedGraph::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.4, 0.0])).is_err());
        assert!(WeightedGraph::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).is_err());
        assert!(WeightedGraph::new(DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0])).is_err());
    }

    #[test]
    fn target_scatter_examples() {
        // zero-mean columns: centering acts as identity
        let xu = DMatrix::from_row_slice(2, 4, &[1.0, -1.0, 2.0, -2.0, 0.5, 0.5, -1.0, 0.0]);
        let sh = centered_scatter(&xu);
        let direct = &xu * xu.transpose();
        assert!((sh - direct).amax() < 1e-14);

        let single = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!(centered_scatter(&single).amax() == 0.0);
    }

    #[test]
    fn target_scatter_matches_two_pass_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = random(&mut rng, 4, 12);
        let sh = centered_scatter(x.as_matrix());
        let m = x.as_matrix();
        for a in 0..4 {
            for b in 0..4 {
                let ma: f64 = (0..12).map(|j| m[(a, j)]).sum::<f64>() / 12.0;
                let mb: f64 = (0..12).map(|j| m[(b, j)]).sum::<f64>() / 12.0;
                let cov: f64 = (0..12).map(|j| (m[(a, j)] - ma) * (m[(b, j)] - mb)).sum::<f64>() / 12.0;
                assert!((sh[(a, b)] - 12.0 * cov).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn scatter_set_symmetric_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let xs = random(&mut rng, 5, 20);
        let xu = random(&mut rng, 4, 18);
        let ls: Vec<usize> = (0..20).map(|i| i % 3).collect();
        let lu: Vec<usize> = (0..18).map(|i| (i / 2) % 3).collect();
        let s = scatter_matrices(&xs, &ls, &xu, &lu, &Hyperparams::default()).unwrap();
        for m in [&s.sw_s, &s.sb_s, &s.sw_u, &s.sb_u, &s.sh_u] {
            assert!((m - m.transpose()).amax() <= 1e-10);
            assert!(min_eig(m) >= -1e-8);
        }
    }
}
