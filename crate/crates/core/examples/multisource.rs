//! MMD matrix for two sources sharing one target.

use lpjt::mmd::multisource_mmd;
use nalgebra::{DVector, SymmetricEigen};

fn main() -> lpjt::Result<()> {
    let m = multisource_mmd(4, 6, 5)?;
    let row_sums = &m * DVector::from_element(m.nrows(), 1.0);
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    println!("size {}x{}", m.nrows(), m.ncols());
    println!("max |M 1|       {:.1e}", row_sums.amax());
    println!("min eigenvalue  {:.1e}", eig.min());
    println!("rank            {}", eig.iter().filter(|v| v.abs() > 1e-12).count());
    Ok(())
}
