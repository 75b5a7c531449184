//! Compares the trace form of the weighted MMD with its literal sums.

use lpjt::mmd::{assemble_m, mmd_value, MmdCoeffs};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lpjt::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (ns, nu, d_s, d_t, d, c) = (12, 9, 5, 4, 2, 3);
    let xs = DMatrix::from_fn(d_s, ns, |_, _| rng.random_range(-1.0..1.0));
    let xu = DMatrix::from_fn(d_t, nu, |_, _| rng.random_range(-1.0..1.0));
    let a = DMatrix::from_fn(d_s, d, |_, _| rng.random_range(-1.0..1.0));
    let b = DMatrix::from_fn(d_t, d, |_, _| rng.random_range(-1.0..1.0));
    let ys: Vec<usize> = (0..ns).map(|i| i % c).collect();
    let yu: Vec<usize> = (0..nu).map(|i| i % c).collect();
    let alpha = DVector::from_fn(ns, |_, _| rng.random_range(0.0..1.0));
    let beta = DVector::from_fn(nu, |_, _| rng.random_range(0.0..1.0));
    let delta = 0.5;

    let coeffs = MmdCoeffs::new(&alpha, &beta, &ys, &yu, delta, c)?;
    let trace = assemble_m(&xs, &xu, &coeffs)?.quadratic_form(&a, &b);
    let (e_mg, e_cd) = mmd_value(&xs, &xu, &a, &b, &alpha, &beta, &ys, &yu, delta)?;
    println!("trace form      {trace:.12}");
    println!("E_MG + E_CD     {:.12}  ({e_mg:.6} + {e_cd:.6})", e_mg + e_cd);
    println!("abs difference  {:.2e}", (trace - e_mg - e_cd).abs());
    Ok(())
}
