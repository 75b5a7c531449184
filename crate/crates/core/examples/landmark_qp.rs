//! Landmark weights: a source outlier far from the target gets down-weighted.

use lpjt::landmark::{build_qp, solve_qp, LandmarkWeights};
use nalgebra::DMatrix;

fn main() -> lpjt::Result<()> {
    // one class, 1-D embedding; the last source sample is an outlier
    let zs = DMatrix::from_row_slice(1, 5, &[0.0, 0.1, -0.1, 0.05, 3.0]);
    let zu = DMatrix::from_row_slice(1, 4, &[0.0, 0.08, -0.05, 0.02]);
    let (ys, yu) = (vec![0; 5], vec![0; 4]);
    let delta = 0.6;

    let qp = build_qp(&zs, &zu, &ys, &yu, delta, 1)?;
    let start = LandmarkWeights::uniform(5, 4, delta);
    let sol = solve_qp(&qp, &start)?;
    println!(
        "objective {:.4} -> {:.4}",
        qp.objective(&start.stacked()),
        qp.objective(&sol.weights.stacked())
    );
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    println!("alpha {}", fmt(sol.weights.alpha.as_slice()));
    println!("beta  {}", fmt(sol.weights.beta.as_slice()));
    println!("constraint violation {:.1e}", sol.weights.max_violation(&ys, &yu, 1));
    Ok(())
}
