//! Gaussian free field with a disordered square-well pinning potential.
//!
//! The crate is organised as a small numerical laboratory:
//!
//! - [`lattice`]: boxes `{0,…,n−1}^d`, edges, inner boundary and reproducible
//!   ±1 environments.
//! - [`gaussfield`]: exact Gaussian machinery for the massless and massive
//!   field (banded Cholesky, selected inversion, sampling, log-partition).
//! - [`walk`]: simple random walk return probabilities, killed/restricted
//!   Green functions and the massive partition-ratio series.
//! - [`pinning`]: the disordered pinning model and its free-energy
//!   estimators (importance sampling, thermodynamic integration, exact
//!   inclusion–exclusion oracle).
//! - [`bounds`]: annealed critical line and the quenched lower bounds in the
//!   `(b, h)` plane.
//! - [`cli`]: scan/verify/bounds/sample/env commands used by the `gffpin`
//!   binary.
//!
//! Runnable walkthroughs for each part live in `examples/`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod formats;
pub mod gaussfield;
pub mod lattice;
pub mod normal;
pub mod pinning;
pub mod quad;
pub mod rng;
pub mod walk;

pub use error::{Error, Result};

/// Version tag written into every serialized artifact.
pub const FORMAT_VERSION: &str = "1.0";
