use nalgebra::DMatrix;

use crate::error::{LpjtError, Result};

/// Kernel used to lift features into a reproducing kernel Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Kernel {
    /// Plain linear projections, no Gram matrices.
    #[default]
    None,
    /// `k(x, y) = xᵀy`
    Linear,
    /// `k(x, y) = exp(-‖x − y‖² / (2 b²))`
    Rbf { bandwidth: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { bandwidth } if !(bandwidth > 0.0) => Err(LpjtError::invalid(format!(
                "rbf bandwidth must be > 0, got {bandwidth}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Kernel::None)
    }

    /// Gram matrix `K_ij = k(x_i, y_j)` between the columns of `x` and `y`.
    pub fn gram(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != y.nrows() {
            return Err(LpjtError::dims(format!(
                "kernel inputs have {} and {} features",
                x.nrows(),
                y.nrows()
            )));
        }
        match *self {
            Kernel::None => Err(LpjtError::invalid("no kernel configured")),
            Kernel::Linear => Ok(x.transpose() * y),
            Kernel::Rbf { bandwidth } => {
                let denom = 2.0 * bandwidth * bandwidth;
                let xn: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
                let yn: Vec<f64> = y.column_iter().map(|c| c.norm_squared()).collect();
                let cross = x.transpose() * y;
                Ok(DMatrix::from_fn(x.ncols(), y.ncols(), |i, j| {
                    let sq = (xn[i] + yn[j] - 2.0 * cross[(i, j)]).max(0.0);
                    (-sq / denom).exp()
                }))
            }
        }
    }
}
