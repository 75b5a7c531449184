//! Top eigenpairs of a symmetric-definite pencil `LHS p = λ RHS p`.

use lpjt::eigsolve::{solve, EigProblem};
use nalgebra::DMatrix;

fn main() -> lpjt::Result<()> {
    let lhs = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
    let rhs = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.0, 0.0, 0.0, 1.5]);
    let problem = EigProblem {
        lhs: lhs.clone(),
        rhs: rhs.clone(),
        ridge: 0.0,
        coupling: 0.0,
    };
    let sol = solve(&problem, 2)?;
    for (k, lambda) in sol.eigenvalues.iter().enumerate() {
        let p = sol.p.column(k);
        let residual = (&lhs * p - &rhs * p * *lambda).norm();
        println!("lambda_{k} = {lambda:.6}, residual {residual:.1e}");
    }
    println!("P' RHS P =\n{:.6}", sol.p.transpose() * &rhs * &sol.p);
    Ok(())
}
