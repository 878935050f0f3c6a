//! Classical and quantum generators of stochastic processes.
//!
//! The crate covers hidden Markov generators and their exact word
//! statistics, predictive and retrodictive state merging, epsilon-machines,
//! the locality-dissipation functional, a dense quantum-channel toolbox,
//! forward and reverse q-machines, and checkers for when a generator
//! implementation dissipates no locality heat.

pub mod corpus;
pub mod equivalence;
pub mod error;
pub mod info;
pub mod machine;
pub mod qmachine;
pub mod quantum;
pub mod report;
pub mod serial;
pub mod tolerance;

pub use error::{Error, ErrorCategory, Result};
pub use tolerance::Limits;
