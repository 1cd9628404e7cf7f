//! Exact computation and simulation for long-range-dependent Markov chains.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist`]: return-time laws (power law, geometric, finite support).
//! * [`chain`]: the age chain built from a return-time law and explicit
//!   finite chains, with exact `n`-step laws.
//! * [`entropy`]: per-state entropies, entropy rate, conditional entropies
//!   and excess-entropy partial sums.
//! * [`convergence`]: total variation and f-norm distances, rate fits.
//! * [`counting`]: visit-count variance (exact and Monte Carlo), trajectory
//!   simulation and Hurst estimation.

pub mod chain;
pub mod convergence;
pub mod counting;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod numeric;
pub mod prob;

pub use chain::{renewal_sequence, AgeChain, Chain, FiniteChain, Truncation};
pub use dist::{hurst_from_moment_index, ErgodicityClass, ReturnTimeDistribution, SeriesVerdict};
pub use error::{Error, Result};
pub use prob::ProbVector;
