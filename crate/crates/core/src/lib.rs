//! Reversible jump Metropolis light transport.
//!
//! Primary-sample-space Markov chains whose states carry an explicit
//! sampling technique, with strategy jumps that re-express the current path
//! in another technique's random numbers through exact inverse sampling.

pub mod cli;
pub mod error;
pub mod invmap;
pub mod lt;
pub mod oned;
pub mod pss;
pub mod rjump;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
