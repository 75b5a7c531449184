//! Locality preserving joint transfer for domain adaptation.
//!
//! Learns one projection per domain so that, in a shared subspace, source and
//! target distributions match under a weighted maximum mean discrepancy while
//! local discriminative structure is preserved. Target labels are inferred by
//! graph label propagation and refined over a few alternating iterations.
//!
//! Samples are stored as columns throughout.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod eigsolve;
pub mod error;
pub mod graph;
pub mod hyper;
pub mod io;
pub mod kernel;
pub mod labelprop;
pub mod landmark;
pub mod mmd;
pub mod pipeline;
pub mod synth;

pub use data::{FeatureMatrix, LabeledDataset, Normalization, Normalizer};
pub use error::{LpjtError, Result};
pub use hyper::{Coupling, Hyperparams};
pub use kernel::Kernel;
