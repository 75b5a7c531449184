//! Hyperparameters shared by every stage of training.

use crate::error::{LpjtError, Result};
use crate::kernel::Kernel;

/// Weight of the `‖A − B‖²` coupling term used in homogeneous adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Coupling {
    #[default]
    Off,
    /// `0.1 · trace(RHS) / (d_s + d_t)` of the uncoupled problem.
    Auto,
    Weight(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Average landmark weight per class and domain.
    pub delta: f64,
    /// Locality-preservation trade-off.
    pub gamma: f64,
    /// Target-variance trade-off.
    pub mu: f64,
    /// Subspace dimensionality.
    pub d: usize,
    /// Outer alternating iterations.
    pub iterations: usize,
    /// Same-label neighbors in the intrinsic graph.
    pub k_w: usize,
    /// Different-label neighbors in the penalty graph.
    pub k_b: usize,
    /// Neighbors in the label-propagation graph.
    pub k_lp: usize,
    /// Use a fully connected label-propagation graph instead of k-NN.
    pub lp_fully_connected: bool,
    /// Label-propagation mixing weight, in (0, 1).
    pub sigma_lp: f64,
    pub lambda_couple: Coupling,
    /// Relative ridge added to the eigenproblem denominator.
    pub eps_reg: f64,
    pub kernel: Kernel,
    /// Unit-normalize embeddings before label propagation.
    pub normalize_embedding: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            delta: 0.5,
            gamma: 0.01,
            mu: 0.1,
            d: 20,
            iterations: 5,
            k_w: 5,
            k_b: 5,
            k_lp: 5,
            lp_fully_connected: false,
            sigma_lp: 0.9,
            lambda_couple: Coupling::Off,
            eps_reg: 1e-6,
            kernel: Kernel::None,
            normalize_embedding: true,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LpjtError::invalid(msg));
        if !(0.0..=1.0).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 1], got {}", self.delta));
        }
        if !(self.sigma_lp > 0.0 && self.sigma_lp < 1.0) {
            return bad(format!("sigma_lp must lie in (0, 1), got {}", self.sigma_lp));
        }
        if !(self.gamma >= 0.0 && self.mu >= 0.0) {
            return bad(format!("gamma and mu must be >= 0, got {} and {}", self.gamma, self.mu));
        }
        if let Coupling::Weight(w) = self.lambda_couple {
            if !(w >= 0.0) {
                return bad(format!("lambda_couple must be >= 0, got {w}"));
            }
        }
        if !(self.eps_reg > 0.0) {
            return bad(format!("eps_reg must be > 0, got {}", self.eps_reg));
        }
        if self.d == 0 || self.iterations == 0 || self.k_w == 0 || self.k_b == 0 || self.k_lp == 0 {
            return bad("d, T, k_w, k_b and k_lp must be positive".into());
        }
        self.kernel.validate()
    }
}
