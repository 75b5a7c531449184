//! Landmark-weighted maximum mean discrepancy in trace form.
//!
//! With projected samples `a_i = Aᵀx_s^i`, `b_j = Bᵀx_u^j` the two
//! discrepancies are
//!
//! ```text
//! E_MG = ‖ Σ α_i a_i / (δ n_s) − Σ β_j b_j / (δ n_u) ‖²
//! E_CD = Σ_c ‖ Σ_{i∈c} α_i a_i / (δ n_s^c) − Σ_{j∈c} β_j b_j / (δ n_u^c) ‖²
//!      + Σ_c Σ_{i∈c} Σ_{j∈c} ‖α_i a_i − β_j b_j‖² / (δ² n_s^c n_u^c)
//! ```
//!
//! Expanding the squares gives `E = Tr(AᵀX_s H_s X_sᵀA) + Tr(BᵀX_u H_u X_uᵀB)
//! − 2 Tr(AᵀX_s H_su X_uᵀB)`. The conditional cross coefficient carries a
//! factor 2 because both conditional terms contribute an `α_i β_j a_i·b_j`
//! product; the diagonal `α_i²/(δ² n_s^c)` part comes from the pairwise term.
//! Classes missing from either domain contribute nothing.

use nalgebra::{DMatrix, DVector};

use crate::error::{LpjtError, Result};
use crate::graph::symmetrize;

/// Sample indices of every class, in ascending order.
pub(crate) fn class_members(labels: &[usize], num_classes: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        if l < num_classes {
            members[l].push(i);
        }
    }
    members
}

/// Coefficient matrices of the marginal (`*m`) and conditional (`*c`) terms.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdCoeffs {
    pub h_sm: DMatrix<f64>,
    pub h_um: DMatrix<f64>,
    pub h_sum: DMatrix<f64>,
    pub h_sc: DMatrix<f64>,
    pub h_uc: DMatrix<f64>,
    pub h_suc: DMatrix<f64>,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(LpjtError::invalid(format!("delta must be > 0 for MMD, got {delta}")));
    }
    Ok(())
}

/// `H_sm = ααᵀ/(δ²n_s²)`, `H_um = ββᵀ/(δ²n_u²)`, `H_sum = αβᵀ/(δ²n_s n_u)`.
pub fn marginal_coeffs(
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
    delta: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    check_delta(delta)?;
    let ns = alpha.len() as f64;
    let nu = beta.len() as f64;
    let d2 = delta * delta;
    let h_sm = alpha * alpha.transpose() / (d2 * ns * ns);
    let h_um = beta * beta.transpose() / (d2 * nu * nu);
    let h_sum = alpha * beta.transpose() / (d2 * ns * nu);
    Ok((h_sm, h_um, h_sum))
}

/// Per-class coefficient blocks scattered to global sample positions.
pub fn conditional_coeffs(
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
    labels_s: &[usize],
    pseudo_labels_u: &[usize],
    delta: f64,
    num_classes: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    check_delta(delta)?;
    if labels_s.len() != alpha.len() || pseudo_labels_u.len() != beta.len() {
        return Err(LpjtError::dims("label vectors must match weight vectors".to_string()));
    }
    let (ns, nu) = (alpha.len(), beta.len());
    let d2 = delta * delta;
    let mut h_sc = DMatrix::zeros(ns, ns);
    let mut h_uc = DMatrix::zeros(nu, nu);
    let mut h_suc = DMatrix::zeros(ns, nu);
    let src = class_members(labels_s, num_classes);
    let tgt = class_members(pseudo_labels_u, num_classes);
    for (c, (si, ui)) in src.iter().zip(&tgt).enumerate() {
        if si.is_empty() || ui.is_empty() {
            if !si.is_empty() || !ui.is_empty() {
                log::debug!("class {c} absent from one domain; skipped in conditional MMD");
            }
            continue;
        }
        let nsc = si.len() as f64;
        let nuc = ui.len() as f64;
        for &i in si {
            for &j in si {
                h_sc[(i, j)] = alpha[i] * alpha[j] / (d2 * nsc * nsc);
            }
            h_sc[(i, i)] += alpha[i] * alpha[i] / (d2 * nsc);
        }
        for &i in ui {
            for &j in ui {
                h_uc[(i, j)] = beta[i] * beta[j] / (d2 * nuc * nuc);
            }
            h_uc[(i, i)] += beta[i] * beta[i] / (d2 * nuc);
        }
        for &i in si {
            for &j in ui {
                h_suc[(i, j)] = 2.0 * alpha[i] * beta[j] / (d2 * nsc * nuc);
            }
        }
    }
    Ok((h_sc, h_uc, h_suc))
}

impl MmdCoeffs {
    pub fn new(
        alpha: &DVector<f64>,
        beta: &DVector<f64>,
        labels_s: &[usize],
        pseudo_labels_u: &[usize],
        delta: f64,
        num_classes: usize,
    ) -> Result<Self> {
        let (h_sm, h_um, h_sum) = marginal_coeffs(alpha, beta, delta)?;
        let (h_sc, h_uc, h_suc) = conditional_coeffs(alpha, beta, labels_s, pseudo_labels_u, delta, num_classes)?;
        Ok(MmdCoeffs {
            h_sm,
            h_um,
            h_sum,
            h_sc,
            h_uc,
            h_suc,
        })
    }

    pub fn ns(&self) -> usize {
        self.h_sm.nrows()
    }

    pub fn nu(&self) -> usize {
        self.h_um.nrows()
    }

    pub fn source(&self) -> DMatrix<f64> {
        &self.h_sm + &self.h_sc
    }

    pub fn target(&self) -> DMatrix<f64> {
        &self.h_um + &self.h_uc
    }

    pub fn cross(&self) -> DMatrix<f64> {
        &self.h_sum + &self.h_suc
    }
}

/// `M_ss = X_s H_s X_sᵀ`, `M_uu = X_u H_u X_uᵀ`, `M_su = X_s H_su X_uᵀ`.
///
/// The discrepancy is `Tr(AᵀM_ss A) + Tr(BᵀM_uu B) − 2 Tr(AᵀM_su B)`, i.e. the
/// quadratic form of `[[M_ss, −M_su], [−M_us, M_uu]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdBlocks {
    pub m_ss: DMatrix<f64>,
    pub m_uu: DMatrix<f64>,
    pub m_su: DMatrix<f64>,
}

impl MmdBlocks {
    pub fn m_us(&self) -> DMatrix<f64> {
        self.m_su.transpose()
    }

    /// `[[M_ss, −M_su], [−M_us, M_uu]]`
    pub fn block_matrix(&self) -> DMatrix<f64> {
        let (ds, dt) = (self.m_ss.nrows(), self.m_uu.nrows());
        let mut out = DMatrix::zeros(ds + dt, ds + dt);
        out.view_mut((0, 0), (ds, ds)).copy_from(&self.m_ss);
        out.view_mut((ds, ds), (dt, dt)).copy_from(&self.m_uu);
        out.view_mut((0, ds), (ds, dt)).copy_from(&(-&self.m_su));
        out.view_mut((ds, 0), (dt, ds)).copy_from(&(-self.m_us()));
        out
    }

    pub fn quadratic_form(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a.transpose() * &self.m_ss * a).trace() + (b.transpose() * &self.m_uu * b).trace()
            - 2.0 * (a.transpose() * &self.m_su * b).trace()
    }
}

pub fn assemble_m(x_s: &DMatrix<f64>, x_u: &DMatrix<f64>, coeffs: &MmdCoeffs) -> Result<MmdBlocks> {
    if x_s.ncols() != coeffs.ns() || x_u.ncols() != coeffs.nu() {
        return Err(LpjtError::dims(format!(
            "coefficients for {}+{} samples, data has {}+{}",
            coeffs.ns(),
            coeffs.nu(),
            x_s.ncols(),
            x_u.ncols()
        )));
    }
    let m_ss = symmetrize(x_s * coeffs.source() * x_s.transpose());
    let m_uu = symmetrize(x_u * coeffs.target() * x_u.transpose());
    let m_su = x_s * coeffs.cross() * x_u.transpose();
    Ok(MmdBlocks { m_ss, m_uu, m_su })
}

/// Marginal and conditional discrepancy computed from the literal sums over
/// projected samples. Independent of the coefficient matrices above.
#[allow(clippy::too_many_arguments)]
pub fn mmd_value(
    x_s: &DMatrix<f64>,
    x_u: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
    labels_s: &[usize],
    pseudo_labels_u: &[usize],
    delta: f64,
) -> Result<(f64, f64)> {
    if a.nrows() != x_s.nrows() || b.nrows() != x_u.nrows() || a.ncols() != b.ncols() {
        return Err(LpjtError::dims("projection shapes do not match data".to_string()));
    }
    let zs = a.transpose() * x_s;
    let zu = b.transpose() * x_u;
    mmd_value_projected(&zs, &zu, alpha, beta, labels_s, pseudo_labels_u, delta)
}

/// [`mmd_value`] on already-projected samples.
pub fn mmd_value_projected(
    zs: &DMatrix<f64>,
    zu: &DMatrix<f64>,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
    labels_s: &[usize],
    pseudo_labels_u: &[usize],
    delta: f64,
) -> Result<(f64, f64)> {
    check_delta(delta)?;
    let (ns, nu) = (zs.ncols(), zu.ncols());
    if alpha.len() != ns || beta.len() != nu || labels_s.len() != ns || pseudo_labels_u.len() != nu {
        return Err(LpjtError::dims("weights/labels do not match sample counts".to_string()));
    }
    let dim = zs.nrows();
    let weighted_mean = |z: &DMatrix<f64>, w: &DVector<f64>, idx: &[usize], count: f64| {
        let mut m = DVector::zeros(dim);
        for &i in idx {
            m.axpy(w[i] / (delta * count), &z.column(i), 1.0);
        }
        m
    };
    let all_s: Vec<usize> = (0..ns).collect();
    let all_u: Vec<usize> = (0..nu).collect();
    let e_mg =
        (weighted_mean(zs, alpha, &all_s, ns as f64) - weighted_mean(zu, beta, &all_u, nu as f64)).norm_squared();

    let num_classes = labels_s.iter().chain(pseudo_labels_u).max().map_or(0, |m| m + 1);
    let src = class_members(labels_s, num_classes);
    let tgt = class_members(pseudo_labels_u, num_classes);
    let mut e_cd = 0.0;
    for (si, ui) in src.iter().zip(&tgt) {
        if si.is_empty() || ui.is_empty() {
            continue;
        }
        let (nsc, nuc) = (si.len() as f64, ui.len() as f64);
        e_cd += (weighted_mean(zs, alpha, si, nsc) - weighted_mean(zu, beta, ui, nuc)).norm_squared();
        let mut pairwise = 0.0;
        for &i in si {
            for &j in ui {
                pairwise += (zs.column(i) * alpha[i] - zu.column(j) * beta[j]).norm_squared();
            }
        }
        e_cd += pairwise / (delta * delta * nsc * nuc);
    }
    Ok((e_mg, e_cd))
}

/// Unweighted distribution gap: squared distance of the domain means plus the
/// squared distances of class means over classes present in both domains.
/// Zero when both domains coincide sample for sample.
pub fn distribution_gap(
    zs: &DMatrix<f64>,
    zu: &DMatrix<f64>,
    labels_s: &[usize],
    labels_u: &[usize],
    num_classes: usize,
) -> Result<f64> {
    if zs.nrows() != zu.nrows() || labels_s.len() != zs.ncols() || labels_u.len() != zu.ncols() {
        return Err(LpjtError::dims("embeddings and labels do not agree".to_string()));
    }
    let mean = |z: &DMatrix<f64>, idx: &[usize]| {
        let mut m = DVector::zeros(z.nrows());
        for &i in idx {
            m += z.column(i);
        }
        m / idx.len() as f64
    };
    let all_s: Vec<usize> = (0..zs.ncols()).collect();
    let all_u: Vec<usize> = (0..zu.ncols()).collect();
    let mut gap = (mean(zs, &all_s) - mean(zu, &all_u)).norm_squared();
    let src = class_members(labels_s, num_classes);
    let tgt = class_members(labels_u, num_classes);
    for (si, ui) in src.iter().zip(&tgt) {
        if !si.is_empty() && !ui.is_empty() {
            gap += (mean(zs, si) - mean(zu, ui)).norm_squared();
        }
    }
    Ok(gap)
}

/// MMD matrix for two source domains sharing one target domain.
///
/// Samples are indexed as `[X_s1, X_s2, X_u, X_u]`; the first copy of the
/// target is matched against source 1 and the second against source 2, so
/// `M = e₁e₁ᵀ + e₂e₂ᵀ` with `e_k` the signed mean-difference indicator of pair k.
pub fn multisource_mmd(n_s1: usize, n_s2: usize, n_u: usize) -> Result<DMatrix<f64>> {
    if n_s1 == 0 || n_s2 == 0 || n_u == 0 {
        return Err(LpjtError::invalid("all domain sizes must be >= 1"));
    }
    let total = n_s1 + n_s2 + 2 * n_u;
    let mut e1 = DVector::zeros(total);
    let mut e2 = DVector::zeros(total);
    e1.rows_mut(0, n_s1).fill(1.0 / n_s1 as f64);
    e1.rows_mut(n_s1 + n_s2, n_u).fill(-1.0 / n_u as f64);
    e2.rows_mut(n_s1, n_s2).fill(1.0 / n_s2 as f64);
    e2.rows_mut(n_s1 + n_s2 + n_u, n_u).fill(-1.0 / n_u as f64);
    Ok(&e1 * e1.transpose() + &e2 * e2.transpose())
}
