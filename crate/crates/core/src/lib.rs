//! Communication-constrained mean estimation for sparse Bernoulli data and
//! rTop-k gradient sparsification.
//!
//! The crate has two halves that share RNG and statistics plumbing:
//!
//! - [`model`], [`codec`] and [`estimator`] implement a k-bit per-node
//!   encoder for sparse binary observations (count header plus an
//!   enumerative codebook over subsampled supports), the matching unbiased
//!   estimator, and a Monte Carlo risk harness with reference bound curves.
//! - [`sparsify`] and [`sgdsim`] implement the top-r, random-k and rTop-k
//!   operators and a synchronous distributed SGD simulator with error
//!   compensation.
//!
//! [`harness`] wires everything to config files and CSV output; the `rtopk`
//! binary is a thin front-end over [`harness::run`]. Runnable examples for
//! each capability live under `examples/`.

pub mod codec;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod model;
pub mod rng;
pub mod sgdsim;
pub mod sparsify;
pub mod stats;

pub use error::{Error, Result};
