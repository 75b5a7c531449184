//! The projection step: a symmetric-definite generalized eigenproblem
//! `LHS · p = λ · RHS · p` over the stacked projection `P = [A; B]`.
//!
//! The ratio objective minimizes `Tr(PᵀRHS P) / Tr(PᵀLHS P)`; we solve the
//! equivalent maximization of `Tr(PᵀLHS P)` under `PᵀRHS P = I`, whose
//! solution is the top-`d` generalized eigenvectors.
//!
//! ```text
//! RHS = [[M_ss + γS_w^s,  −M_su          ],
//!        [−M_us,           M_uu + γS_w^u + μI]] + ridge·I
//! LHS = [[γS_b^s, 0               ],
//!        [0,      γS_b^u + μS_h^u ]]
//! ```

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{LpjtError, Result};
use crate::graph::{centered_scatter, scatter, symmetrize, DomainGraphs, ScatterSet};
use crate::hyper::{Coupling, Hyperparams};
use crate::kernel::Kernel;
use crate::mmd::{assemble_m, MmdBlocks, MmdCoeffs};

/// Symmetric pencil with a positive-definite right-hand side.
#[derive(Debug, Clone)]
pub struct EigProblem {
    pub lhs: DMatrix<f64>,
    pub rhs: DMatrix<f64>,
    /// Ridge that was added to the diagonal of `rhs`.
    pub ridge: f64,
    /// Coupling weight that was applied, zero when off.
    pub coupling: f64,
}

impl EigProblem {
    pub fn dim(&self) -> usize {
        self.lhs.nrows()
    }

    /// `Tr(PᵀRHS P) / Tr(PᵀLHS P)`, the ratio being minimized.
    pub fn ratio(&self, p: &DMatrix<f64>) -> f64 {
        let num = (p.transpose() * &self.rhs * p).trace();
        let den = (p.transpose() * &self.lhs * p).trace();
        num / den
    }
}

#[derive(Debug, Clone)]
pub struct EigSolution {
    /// `(d_s + d_t) × d`, columns RHS-orthonormal.
    pub p: DMatrix<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
}

fn ensure_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LpjtError::NonFinite(what))
    }
}

/// Shared assembly for linear and kernelized problems. `target_identity` is
/// `I` in the linear case and the target Gram matrix when kernelized.
fn assemble_blocks(
    m: &MmdBlocks,
    s: &ScatterSet,
    target_identity: &DMatrix<f64>,
    hyper: &Hyperparams,
    coupling_allowed: bool,
) -> Result<EigProblem> {
    let ds = m.m_ss.nrows();
    let dt = m.m_uu.nrows();
    let shapes_ok = m.m_ss.shape() == (ds, ds)
        && m.m_uu.shape() == (dt, dt)
        && m.m_su.shape() == (ds, dt)
        && s.sw_s.shape() == (ds, ds)
        && s.sb_s.shape() == (ds, ds)
        && s.sw_u.shape() == (dt, dt)
        && s.sb_u.shape() == (dt, dt)
        && s.sh_u.shape() == (dt, dt)
        && target_identity.shape() == (dt, dt);
    if !shapes_ok {
        return Err(LpjtError::dims(format!(
            "inconsistent block shapes for a {ds}+{dt} problem"
        )));
    }
    for (mat, what) in [
        (&m.m_ss, "M_ss"),
        (&m.m_uu, "M_uu"),
        (&m.m_su, "M_su"),
        (&s.sw_s, "S_w^s"),
        (&s.sb_s, "S_b^s"),
        (&s.sw_u, "S_w^u"),
        (&s.sb_u, "S_b^u"),
        (&s.sh_u, "S_h^u"),
    ] {
        ensure_finite(mat, what)?;
    }
    let (gamma, mu) = (hyper.gamma, hyper.mu);
    let n = ds + dt;

    let mut rhs = DMatrix::zeros(n, n);
    rhs.view_mut((0, 0), (ds, ds)).copy_from(&(&m.m_ss + &s.sw_s * gamma));
    rhs.view_mut((ds, ds), (dt, dt))
        .copy_from(&(&m.m_uu + &s.sw_u * gamma + target_identity * mu));
    rhs.view_mut((0, ds), (ds, dt)).copy_from(&(-&m.m_su));
    rhs.view_mut((ds, 0), (dt, ds)).copy_from(&(-m.m_su.transpose()));

    let mut lhs = DMatrix::zeros(n, n);
    lhs.view_mut((0, 0), (ds, ds)).copy_from(&(&s.sb_s * gamma));
    lhs.view_mut((ds, ds), (dt, dt))
        .copy_from(&(&s.sb_u * gamma + &s.sh_u * mu));

    let scale = (rhs.trace() / n as f64).max(0.0);
    let coupling = if coupling_allowed && ds == dt {
        match hyper.lambda_couple {
            Coupling::Off => 0.0,
            Coupling::Auto => 0.1 * scale,
            Coupling::Weight(w) => w,
        }
    } else {
        0.0
    };
    if coupling > 0.0 {
        for i in 0..ds {
            rhs[(i, i)] += coupling;
            rhs[(ds + i, ds + i)] += coupling;
            rhs[(i, ds + i)] -= coupling;
            rhs[(ds + i, i)] -= coupling;
        }
    }
    let ridge = hyper.eps_reg * scale.max(1.0);
    for i in 0..n {
        rhs[(i, i)] += ridge;
    }
    Ok(EigProblem {
        lhs: symmetrize(lhs),
        rhs: symmetrize(rhs),
        ridge,
        coupling,
    })
}

/// Builds the linear-projection problem. The `‖A − B‖²` coupling is applied
/// only for homogeneous domains.
pub fn assemble_problem(m: &MmdBlocks, s: &ScatterSet, hyper: &Hyperparams, homogeneous: bool) -> Result<EigProblem> {
    let dt = m.m_uu.nrows();
    assemble_blocks(m, s, &DMatrix::identity(dt, dt), hyper, homogeneous)
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(m.clone())).eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Top-`d` generalized eigenpairs, eigenvalues descending.
///
/// Each eigenvector column is signed so that its largest-magnitude entry is
/// positive.
pub fn solve(problem: &EigProblem, d: usize) -> Result<EigSolution> {
    let n = problem.dim();
    if problem.rhs.shape() != (n, n) || problem.lhs.shape() != (n, n) {
        return Err(LpjtError::dims(
            "LHS and RHS must be square and equal-sized".to_string(),
        ));
    }
    if d == 0 || d > n {
        return Err(LpjtError::invalid(format!(
            "cannot extract {d} eigenvectors from a {n}-dim problem"
        )));
    }
    ensure_finite(&problem.lhs, "LHS")?;
    ensure_finite(&problem.rhs, "RHS")?;
    let chol = Cholesky::new(problem.rhs.clone()).ok_or_else(|| LpjtError::Factorization {
        condition: condition_estimate(&problem.rhs),
    })?;
    let l = chol.l();
    // C = L⁻¹ LHS L⁻ᵀ
    let y = l
        .solve_lower_triangular(&problem.lhs)
        .ok_or_else(|| LpjtError::Numeric("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| LpjtError::Numeric("triangular solve failed".into()))?;
    let eig = SymmetricEigen::new(symmetrize(c));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = &order[..d];
    let v = DMatrix::from_fn(n, d, |r, c| eig.eigenvectors[(r, top[c])]);
    let mut p = l
        .transpose()
        .solve_upper_triangular(&v)
        .ok_or_else(|| LpjtError::Numeric("triangular solve failed".into()))?;
    for mut col in p.column_iter_mut() {
        let (imax, _) = col.iter().enumerate().fold(
            (0, -1.0),
            |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) },
        );
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    ensure_finite(&p, "eigenvectors")?;
    Ok(EigSolution {
        p,
        eigenvalues: top.iter().map(|&i| eig.eigenvalues[i]).collect(),
    })
}

/// Splits `P = [A; B]` into its source and target blocks.
pub fn split_projection(p: &DMatrix<f64>, d_s: usize, d_t: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if p.nrows() != d_s + d_t {
        return Err(LpjtError::dims(format!(
            "projection has {} rows, expected {d_s}+{d_t}",
            p.nrows()
        )));
    }
    Ok((p.rows(0, d_s).into_owned(), p.rows(d_s, d_t).into_owned()))
}

/// Stacks `A` over `B`.
pub fn stack_projection(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(LpjtError::dims("A and B have different column counts".to_string()));
    }
    let mut p = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    p.rows_mut(0, a.nrows()).copy_from(a);
    p.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    Ok(p)
}

/// Gram matrices of both training domains under a kernel.
#[derive(Debug, Clone)]
pub struct Grams {
    pub k_s: DMatrix<f64>,
    pub k_u: DMatrix<f64>,
}

impl Grams {
    pub fn new(kernel: Kernel, x_s: &DMatrix<f64>, x_u: &DMatrix<f64>) -> Result<Self> {
        Ok(Grams {
            k_s: kernel.gram(x_s, x_s)?,
            k_u: kernel.gram(x_u, x_u)?,
        })
    }
}

/// Kernelized problem over sample coefficients (`n_s + n_u` unknowns per
/// column). Every `X (·) Xᵀ` product becomes `K (·) K`, the target identity
/// term becomes `K_u`, and the covariance term uses the column-centered Gram
/// `K̄_u = K_u (I − 11ᵀ/n_u)` so that `S_h^u = K̄_u K̄_uᵀ`.
pub fn kernelize(
    x_s: &DMatrix<f64>,
    x_u: &DMatrix<f64>,
    kernel: Kernel,
    coeffs: &MmdCoeffs,
    source_graphs: &DomainGraphs,
    target_graphs: &DomainGraphs,
    hyper: &Hyperparams,
) -> Result<EigProblem> {
    if kernel.is_none() {
        return Err(LpjtError::invalid("kernelize requires a kernel"));
    }
    let grams = Grams::new(kernel, x_s, x_u)?;
    kernelize_with_grams(&grams, coeffs, source_graphs, target_graphs, hyper)
}

pub fn kernelize_with_grams(
    grams: &Grams,
    coeffs: &MmdCoeffs,
    source_graphs: &DomainGraphs,
    target_graphs: &DomainGraphs,
    hyper: &Hyperparams,
) -> Result<EigProblem> {
    let (k_s, k_u) = (&grams.k_s, &grams.k_u);
    let m = assemble_m(k_s, k_u, coeffs)?;
    // K_u H K_u = (K_u H)(K_u H)ᵀ since H is symmetric idempotent
    let s = ScatterSet {
        sw_s: scatter(k_s, &source_graphs.intrinsic),
        sb_s: scatter(k_s, &source_graphs.penalty),
        sw_u: scatter(k_u, &target_graphs.intrinsic),
        sb_u: scatter(k_u, &target_graphs.penalty),
        sh_u: centered_scatter(k_u),
    };
    assemble_blocks(&m, &s, k_u, hyper, false)
}
