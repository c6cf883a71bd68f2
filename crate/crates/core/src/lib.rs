//! # sqsgd
//!
//! Locally private, communication-efficient federated SGD.
//!
//! Each client clips its stochastic gradient, keeps a random subset of the
//! coordinates (carrying the rest forward in a residual), rotates the kept
//! block with a randomized Hadamard transform, quantizes it onto a `K`-level
//! grid and privatizes the grid vector with the PrivQuant mechanism. The
//! server undoes the normalization and the rotation, averages the clients and
//! takes an SGD step. A privatized norm estimate lets the server shrink the
//! clipping bound over time.
//!
//! The building blocks live in their own modules and are usable on their own:
//!
//! - [`combinatorics`]: log-space binomial sums and the match-count sampler.
//! - [`quantizer`]: the `K`-level grid, unbiased stochastic rounding, bit packing.
//! - [`privquant`]: the privatization mechanism, its budget solver and the
//!   exact enumeration oracle.
//! - [`rotation`]: the randomized Walsh-Hadamard rotation and l2 clipping.
//! - [`sparsifier`]: coordinate subsampling with residual accumulation.
//! - [`scalardp`]: private scalar estimation and the shrinking norm bound.
//! - [`flsim`]: datasets, models and the client/server round loop.
//! - [`config`] and [`runner`]: run configuration, artifacts and sweeps.
//!
//! Runnable walkthroughs of each capability live in `examples/`:
//!
//! ```bash
//! cargo run --release --example privquant_mechanism
//! cargo run --release --example federated_training
//! ```

// `!(x > 0.0)` is how parameter checks reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinatorics;
pub mod config;
pub mod error;
pub mod flsim;
pub mod privquant;
pub mod quantizer;
pub mod rng;
pub mod rotation;
pub mod runner;
pub mod scalardp;
pub mod sparsifier;

pub use error::{Error, Result};
