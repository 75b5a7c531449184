//! Label propagation against the nearest-neighbor rule on two parallel lines,
//! each labeled only at one end.

use lpjt::labelprop::{classify, nearest_neighbor};
use lpjt::pipeline::evaluate;
use lpjt::Hyperparams;
use nalgebra::DMatrix;

fn main() -> lpjt::Result<()> {
    // class 0 is labeled at the left end, class 1 at the right end
    let n = 40;
    let test = DMatrix::from_fn(2, 2 * n, |r, c| match r {
        0 => (c % n) as f64 * 0.25,
        _ => {
            if c < n {
                0.0
            } else {
                1.5
            }
        }
    });
    let truth: Vec<usize> = (0..2 * n).map(|c| usize::from(c >= n)).collect();
    let right = n as f64 * 0.25;
    let train = DMatrix::from_row_slice(2, 2, &[-0.25, right, 0.0, 1.5]);
    let labels = [0, 1];

    let hyper = Hyperparams {
        k_lp: 3,
        normalize_embedding: false,
        ..Default::default()
    };
    let lp = classify(&train, &labels, 2, &test, &hyper)?;
    let nn = nearest_neighbor(&train, &labels, &test)?;
    println!("label propagation accuracy {:.3}", evaluate(&lp, &truth)?);
    println!("1-NN accuracy              {:.3}", evaluate(&nn, &truth)?);
    Ok(())
}
