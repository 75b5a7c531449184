//! Landmark reweighting: a box- and class-mean-constrained QP over the
//! sample weights `α` (source) and `β` (target) with the projections fixed.
//!
//! The problem is `min ½ zᵀ Q z` over `z = [α; β]` with
//! `Q = [[K_ss, −K_su], [−K_suᵀ, 0]]`, `z ∈ [0,1]` and per-class weight means
//! equal to `δ` in both domains. `K_ss` and `K_su` are twice the coefficients
//! of `α_i α_j` and `α_i β_j` in the weighted discrepancy, so the `α`-gradient
//! of the QP objective equals the `α`-gradient of `E_MG + E_CD`. Terms that
//! are quadratic in `β` alone are not part of `Q`, which makes it indefinite;
//! the solver therefore only guarantees a feasible descent point.

use nalgebra::{DMatrix, DVector};

use crate::error::{LpjtError, Result};
use crate::mmd::class_members;

/// Per-sample weights with per-class means equal to `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkWeights {
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub delta: f64,
}

impl LandmarkWeights {
    /// The uniform feasible point `α = β = δ·1`.
    pub fn uniform(n_s: usize, n_u: usize, delta: f64) -> Self {
        LandmarkWeights {
            alpha: DVector::from_element(n_s, delta),
            beta: DVector::from_element(n_u, delta),
            delta,
        }
    }

    /// Largest violation of the box and class-mean constraints.
    pub fn max_violation(&self, labels_s: &[usize], labels_u: &[usize], num_classes: usize) -> f64 {
        let mut worst = 0.0f64;
        for w in self.alpha.iter().chain(self.beta.iter()) {
            worst = worst.max(-w).max(w - 1.0);
        }
        for (weights, labels) in [(&self.alpha, labels_s), (&self.beta, labels_u)] {
            for members in class_members(labels, num_classes) {
                if members.is_empty() {
                    continue;
                }
                let mean = members.iter().map(|&i| weights[i]).sum::<f64>() / members.len() as f64;
                worst = worst.max((mean - self.delta).abs());
            }
        }
        worst
    }

    pub fn stacked(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.alpha.len() + self.beta.len());
        z.rows_mut(0, self.alpha.len()).copy_from(&self.alpha);
        z.rows_mut(self.alpha.len(), self.beta.len()).copy_from(&self.beta);
        z
    }
}

/// One equality constraint: the weights at `indices` must sum to `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintGroup {
    /// Positions in the stacked vector `[α; β]`.
    pub indices: Vec<usize>,
    pub target: f64,
    /// Class present in only one domain: weights pinned at `δ`.
    pub frozen: bool,
}

#[derive(Debug, Clone)]
pub struct QpInstance {
    /// `[[K_ss, −K_su], [−K_suᵀ, 0]]`
    pub q: DMatrix<f64>,
    /// `(n_s + n_u) × 2C` class indicator matrix.
    pub v: DMatrix<f64>,
    /// `δ·n_s^c` for the first `C` entries, `δ·n_u^c` after.
    pub g: DVector<f64>,
    pub groups: Vec<ConstraintGroup>,
    pub n_s: usize,
    pub n_u: usize,
    pub delta: f64,
    /// Fast path for instances built from embeddings; `None` multiplies by `q`.
    op: Option<FactoredQ>,
}

/// `Q z` evaluated from per-class sums of the projected samples in
/// `O((n_s + n_u) d)` instead of a dense product.
#[derive(Debug, Clone)]
struct FactoredQ {
    z_s: DMatrix<f64>,
    z_u: DMatrix<f64>,
    sq_norms_s: Vec<f64>,
    labels_s: Vec<usize>,
    labels_u: Vec<usize>,
    shared: Vec<bool>,
    nsc: Vec<f64>,
    nuc: Vec<f64>,
    d2: f64,
}

impl FactoredQ {
    fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        let (ns, nu) = (self.z_s.ncols(), self.z_u.ncols());
        let (nsf, nuf, d2) = (ns as f64, nu as f64, self.d2);
        let alpha = z.rows(0, ns);
        let beta = z.rows(ns, nu);
        let sum_a = &self.z_s * alpha;
        let sum_b = &self.z_u * beta;
        let dim = self.z_s.nrows();
        let c = self.shared.len();
        let mut class_a = DMatrix::zeros(dim, c);
        let mut class_b = DMatrix::zeros(dim, c);
        for i in 0..ns {
            class_a
                .column_mut(self.labels_s[i])
                .axpy(alpha[i], &self.z_s.column(i), 1.0);
        }
        for j in 0..nu {
            class_b
                .column_mut(self.labels_u[j])
                .axpy(beta[j], &self.z_u.column(j), 1.0);
        }
        let mut out = DVector::zeros(ns + nu);
        for i in 0..ns {
            let l = self.labels_s[i];
            let zi = self.z_s.column(i);
            let mut v = zi.dot(&sum_a) / (d2 * nsf * nsf) - zi.dot(&sum_b) / (d2 * nsf * nuf);
            if self.shared[l] {
                v += zi.dot(&class_a.column(l)) / (d2 * self.nsc[l] * self.nsc[l])
                    + alpha[i] * self.sq_norms_s[i] / (d2 * self.nsc[l])
                    - 2.0 * zi.dot(&class_b.column(l)) / (d2 * self.nsc[l] * self.nuc[l]);
            }
            out[i] = 2.0 * v;
        }
        for j in 0..nu {
            let l = self.labels_u[j];
            let zj = self.z_u.column(j);
            let mut v = zj.dot(&sum_a) / (d2 * nsf * nuf);
            if self.shared[l] {
                v += 2.0 * zj.dot(&class_a.column(l)) / (d2 * self.nsc[l] * self.nuc[l]);
            }
            out[ns + j] = -2.0 * v;
        }
        out
    }
}

impl QpInstance {
    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&self.apply(z))
    }

    /// `Q z` without forming the dense product.
    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        match &self.op {
            Some(op) => op.apply(z),
            None => &self.q * z,
        }
    }

    pub fn k_ss(&self) -> DMatrix<f64> {
        self.q.view((0, 0), (self.n_s, self.n_s)).into_owned()
    }

    pub fn k_su(&self) -> DMatrix<f64> {
        -self.q.view((0, self.n_s), (self.n_s, self.n_u)).into_owned()
    }
}

/// Builds the weight QP from projected samples (`d × n` each).
pub fn build_qp(
    z_s: &DMatrix<f64>,
    z_u: &DMatrix<f64>,
    labels_s: &[usize],
    pseudo_labels_u: &[usize],
    delta: f64,
    num_classes: usize,
) -> Result<QpInstance> {
    let (ns, nu) = (z_s.ncols(), z_u.ncols());
    if z_s.nrows() != z_u.nrows() {
        return Err(LpjtError::dims(format!(
            "projected domains have {} and {} rows",
            z_s.nrows(),
            z_u.nrows()
        )));
    }
    if labels_s.len() != ns || pseudo_labels_u.len() != nu {
        return Err(LpjtError::dims("labels do not match sample counts".to_string()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LpjtError::invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    let src = class_members(labels_s, num_classes);
    let tgt = class_members(pseudo_labels_u, num_classes);
    if let Some(c) = (0..num_classes).find(|&c| src[c].is_empty() && tgt[c].is_empty()) {
        return Err(LpjtError::invalid(format!("class {c} is absent from both domains")));
    }

    let d2 = delta * delta;
    let gram_ss = z_s.transpose() * z_s;
    let gram_su = z_s.transpose() * z_u;
    // Conditional coefficients only for classes present in both domains.
    let shared = |c: usize| !src[c].is_empty() && !tgt[c].is_empty();
    let nsc: Vec<f64> = src.iter().map(|m| m.len() as f64).collect();
    let nuc: Vec<f64> = tgt.iter().map(|m| m.len() as f64).collect();

    let mut q = DMatrix::zeros(ns + nu, ns + nu);
    let (nsf, nuf) = (ns as f64, nu as f64);
    for i in 0..ns {
        let ci = labels_s[i];
        for j in 0..ns {
            let mut coeff = 1.0 / (d2 * nsf * nsf);
            if labels_s[j] == ci && shared(ci) {
                coeff += 1.0 / (d2 * nsc[ci] * nsc[ci]);
            }
            q[(i, j)] = 2.0 * coeff * gram_ss[(i, j)];
        }
        if shared(ci) {
            q[(i, i)] += 2.0 * gram_ss[(i, i)] / (d2 * nsc[ci]);
        }
        for j in 0..nu {
            let mut coeff = 1.0 / (d2 * nsf * nuf);
            if pseudo_labels_u[j] == ci && shared(ci) {
                coeff += 2.0 / (d2 * nsc[ci] * nuc[ci]);
            }
            let k = 2.0 * coeff * gram_su[(i, j)];
            q[(i, ns + j)] = -k;
            q[(ns + j, i)] = -k;
        }
    }

    let mut v = DMatrix::zeros(ns + nu, 2 * num_classes);
    let mut g = DVector::zeros(2 * num_classes);
    let mut groups = Vec::new();
    for c in 0..num_classes {
        for &i in &src[c] {
            v[(i, c)] = 1.0;
        }
        for &j in &tgt[c] {
            v[(ns + j, num_classes + c)] = 1.0;
        }
        g[c] = delta * nsc[c];
        g[num_classes + c] = delta * nuc[c];
        let frozen = !shared(c);
        if !src[c].is_empty() {
            groups.push(ConstraintGroup {
                indices: src[c].clone(),
                target: g[c],
                frozen,
            });
        }
        if !tgt[c].is_empty() {
            groups.push(ConstraintGroup {
                indices: tgt[c].iter().map(|&j| ns + j).collect(),
                target: g[num_classes + c],
                frozen,
            });
        }
    }
    let op = FactoredQ {
        z_s: z_s.clone(),
        z_u: z_u.clone(),
        sq_norms_s: z_s.column_iter().map(|c| c.norm_squared()).collect(),
        labels_s: labels_s.to_vec(),
        labels_u: pseudo_labels_u.to_vec(),
        shared: (0..num_classes).map(shared).collect(),
        nsc,
        nuc,
        d2,
    };
    Ok(QpInstance {
        q,
        v,
        g,
        groups,
        n_s: ns,
        n_u: nu,
        delta,
        op: Some(op),
    })
}

/// Euclidean projection of `y` onto `{z ∈ [0,1]^m : Σz = target}`.
///
/// The solution is `clip(y − τ, 0, 1)` for the unique shift `τ` found by
/// bisection.
pub fn project_capped_simplex(y: &[f64], target: f64) -> Vec<f64> {
    let m = y.len();
    if m == 0 {
        return Vec::new();
    }
    if target >= m as f64 {
        return vec![1.0; m];
    }
    if target <= 0.0 {
        return vec![0.0; m];
    }
    let sum_at = |tau: f64| y.iter().map(|v| (v - tau).clamp(0.0, 1.0)).sum::<f64>();
    let lo0 = y.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let hi0 = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut z: Vec<f64> = y.iter().map(|v| (v - tau).clamp(0.0, 1.0)).collect();
    // spread the remaining rounding residual over the free coordinates
    for _ in 0..4 {
        let residual = target - z.iter().sum::<f64>();
        if residual.abs() <= 1e-15 * m as f64 {
            break;
        }
        let free: Vec<usize> = (0..m)
            .filter(|&i| if residual > 0.0 { z[i] < 1.0 } else { z[i] > 0.0 })
            .collect();
        if free.is_empty() {
            break;
        }
        let share = residual / free.len() as f64;
        for i in free {
            z[i] = (z[i] + share).clamp(0.0, 1.0);
        }
    }
    z
}

fn project(qp: &QpInstance, z: &DVector<f64>) -> DVector<f64> {
    let mut out = z.clone();
    for group in &qp.groups {
        if group.frozen {
            for &i in &group.indices {
                out[i] = qp.delta;
            }
            continue;
        }
        let y: Vec<f64> = group.indices.iter().map(|&i| z[i]).collect();
        for (&i, v) in group.indices.iter().zip(project_capped_simplex(&y, group.target)) {
            out[i] = v;
        }
    }
    out
}

/// Largest absolute eigenvalue of a symmetric matrix by power iteration.
fn spectral_norm_estimate(qp: &QpInstance) -> f64 {
    let n = qp.n_s + qp.n_u;
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(n, |i, _| 1.0 + (i % 7) as f64 * 0.1);
    x /= x.norm();
    let mut est = 0.0;
    for _ in 0..100 {
        let y = qp.apply(&x);
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        est = norm;
        x = y / norm;
    }
    est
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub weights: LandmarkWeights,
    /// Objective after every accepted iterate, starting with the initial point.
    pub objectives: Vec<f64>,
    pub converged: bool,
}

pub const QP_MAX_ITERATIONS: usize = 500;
pub const QP_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Projected gradient descent with backtracking from `init`.
///
/// `init` must be feasible. The returned point is feasible and never worse
/// than `init`. On hitting the iteration cap the last iterate is returned
/// with `converged = false`.
pub fn solve_qp(qp: &QpInstance, init: &LandmarkWeights) -> Result<QpSolution> {
    if init.alpha.len() != qp.n_s || init.beta.len() != qp.n_u {
        return Err(LpjtError::dims("initial weights do not match the QP".to_string()));
    }
    let mut z = init.stacked();
    for group in &qp.groups {
        let sum: f64 = group.indices.iter().map(|&i| z[i]).sum();
        let pinned = group.frozen && group.indices.iter().any(|&i| z[i] != qp.delta);
        if (sum - group.target).abs() > 1e-8 * group.indices.len() as f64 || pinned {
            return Err(LpjtError::invalid("initial weights are not feasible".to_string()));
        }
    }
    if z.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(LpjtError::invalid("initial weights outside [0, 1]".to_string()));
    }

    let free_mask: Vec<bool> = {
        let mut mask = vec![true; z.len()];
        for group in qp.groups.iter().filter(|g| g.frozen) {
            for &i in &group.indices {
                mask[i] = false;
            }
        }
        mask
    };

    let mut qz = qp.apply(&z);
    let mut f = 0.5 * z.dot(&qz);
    let mut objectives = vec![f];
    let lipschitz = spectral_norm_estimate(qp);
    if lipschitz == 0.0 {
        return Ok(QpSolution {
            weights: init.clone(),
            objectives,
            converged: true,
        });
    }
    let mut step = 1.0 / lipschitz;
    let mut converged = false;
    for _ in 0..QP_MAX_ITERATIONS {
        let mut grad = qz.clone();
        for (g, &free) in grad.iter_mut().zip(&free_mask) {
            if !free {
                *g = 0.0;
            }
        }
        let mut t = step * 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = project(qp, &(&z - &grad * t));
            let diff = &cand - &z;
            let q_cand = qp.apply(&cand);
            let f_cand = 0.5 * cand.dot(&q_cand);
            let model = f + grad.dot(&diff) + diff.norm_squared() / (2.0 * t);
            if f_cand <= model + 1e-15 * f.abs().max(1.0) && f_cand <= f {
                accepted = Some((cand, f_cand, q_cand));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, f_cand, q_cand)) = accepted else {
            converged = true;
            break;
        };
        step = t;
        let change = f - f_cand;
        let moved = (&cand - &z).amax();
        z = cand;
        qz = q_cand;
        f = f_cand;
        objectives.push(f);
        if moved == 0.0 || change <= QP_RELATIVE_TOLERANCE * f.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("landmark QP hit {QP_MAX_ITERATIONS} iterations; returning last iterate");
    }
    Ok(QpSolution {
        weights: LandmarkWeights {
            alpha: z.rows(0, qp.n_s).into_owned(),
            beta: z.rows(qp.n_s, qp.n_u).into_owned(),
            delta: qp.delta,
        },
        objectives,
        converged,
    })
}
