//! Grant-free multi-user photon-counting optical link simulator.
//!
//! The crate models asynchronous on-off-keyed users sharing one photon
//! counter under Poisson shot noise, and implements the receiver chain that
//! recovers them: pilot-correlation delay search with verification, Gaussian
//! delay tracking across frames, interleave-division iterative multi-user
//! detection, benchmark detectors, CRLB and EXIT analysis, and a seeded
//! Monte-Carlo harness that writes CSV results.

pub mod analysis;
pub mod baselines;
pub mod bayes;
pub mod channel;
pub mod error;
pub mod frame;
pub mod harness;
pub mod model;
pub mod mud;
pub mod rng;
pub mod sync;

pub use error::{Error, Result};
