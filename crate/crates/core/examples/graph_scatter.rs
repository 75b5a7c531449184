//! Intrinsic and penalty graphs on labeled blobs, and their scatter matrices.

use lpjt::graph::{build_intrinsic_graph, build_penalty_graph, laplacian, scatter};
use lpjt::synth::{gauss_shift, GaussShift};

fn main() -> lpjt::Result<()> {
    let pair = gauss_shift(
        &GaussShift {
            n_per_class: 10,
            ..Default::default()
        },
        3,
    )?;
    let x = &pair.source.features;
    let labels = pair.source.labels();

    let intrinsic = build_intrinsic_graph(x, labels, 5)?;
    let penalty = build_penalty_graph(x, labels, 5)?;
    println!(
        "intrinsic edges {}, penalty edges {}",
        intrinsic.edge_count(),
        penalty.edge_count()
    );

    let s_w = scatter(x.as_matrix(), &laplacian(&intrinsic));
    let s_b = scatter(x.as_matrix(), &laplacian(&penalty));
    println!("tr(S_w) = {:.3}, tr(S_b) = {:.3}", s_w.trace(), s_b.trace());
    Ok(())
}
