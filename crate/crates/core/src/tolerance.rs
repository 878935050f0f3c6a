//! Numerical tolerances shared by every module.
//!
//! One table governs the whole crate so reports can quote the values they
//! were computed under.

use serde::{Deserialize, Serialize};

/// Column sums of a generator must be within this of one.
pub const STOCHASTIC: f64 = 1e-12;
/// Entries at or below this are treated as zero transition probability.
pub const PROB_ZERO: f64 = 1e-12;
/// Support threshold for the "positive only when" conditions.
pub const SUPPORT: f64 = 1e-9;
/// Stationary distribution: iteration target and acceptance residuals.
pub const STATIONARY_TARGET: f64 = 1e-12;
pub const STATIONARY_ACCEPT: f64 = 1e-10;
pub const STATIONARY_MAX_ITER: usize = 1_000_000;
/// Belief-state coincidence in the mixed-state construction (L-infinity).
pub const BELIEF: f64 = 1e-9;
/// Linear independence threshold for span computations (relative).
pub const SPAN: f64 = 1e-10;
/// Signature comparison for state equivalence.
pub const EQUIVALENCE: f64 = 1e-9;
/// Word-distribution agreement for mergeability and process checks.
pub const PROCESS: f64 = 1e-9;
/// A forward-machine belief is synchronized above `1 - SYNC`.
pub const SYNC: f64 = 1e-6;
/// Eigenvalues below this are clamped to zero in matrix functions.
pub const EIGEN_CLAMP: f64 = 1e-12;
/// Density operator / channel validation.
pub const OPERATOR: f64 = 1e-10;
/// Singular values of the weighted Gram matrix kept in a q-machine.
pub const SINGULAR_CUTOFF: f64 = 1e-10;
/// Overlap fixed point: step size and residual.
pub const OVERLAP_STEP: f64 = 1e-14;
pub const OVERLAP_RESIDUAL: f64 = 1e-12;
pub const OVERLAP_MAX_ITER: usize = 100_000;
/// Overlap / stationary-state entries above this couple two states.
pub const COUPLING: f64 = 1e-9;
/// Dissipation at or below this counts as zero.
pub const DISSIPATION: f64 = 1e-9;
/// Mutual-information equality in the local reversibility check.
pub const INFO_EQUALITY: f64 = 1e-10;
/// Relative-entropy gap and recovery error in the saturation check.
pub const DPI: f64 = 1e-8;

/// Default cap on enumerated table entries.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;
/// Default cap on reachable beliefs in the mixed-state construction.
pub const DEFAULT_BELIEF_CAP: usize = 256;

/// Resource caps for enumerating words and beliefs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub enumeration_cap: usize,
    pub belief_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            belief_cap: DEFAULT_BELIEF_CAP,
        }
    }
}

impl Limits {
    /// Reads `RATCHETLAB_CAP` to override the enumeration cap.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(cap) = std::env::var("RATCHETLAB_CAP")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            limits.enumeration_cap = cap;
        }
        limits
    }

    /// Fails unless `count` entries fit under the enumeration cap.
    pub fn check(&self, count: u128) -> crate::Result<()> {
        if count > self.enumeration_cap as u128 {
            Err(crate::Error::EnumerationCapExceeded {
                required: count,
                cap: self.enumeration_cap,
            })
        } else {
            Ok(())
        }
    }
}

/// Number of entries in a table over words of length `t` times `width`.
pub fn table_size(symbols: usize, t: usize, width: usize) -> u128 {
    let mut n: u128 = width as u128;
    for _ in 0..t {
        n = n.saturating_mul(symbols as u128);
    }
    n
}

/// Snapshot of the tolerance table, embedded in reports.
pub fn table() -> Vec<(&'static str, f64)> {
    vec![
        ("stochastic", STOCHASTIC),
        ("prob_zero", PROB_ZERO),
        ("support", SUPPORT),
        ("stationary_accept", STATIONARY_ACCEPT),
        ("belief", BELIEF),
        ("equivalence", EQUIVALENCE),
        ("process", PROCESS),
        ("sync", SYNC),
        ("eigen_clamp", EIGEN_CLAMP),
        ("operator", OPERATOR),
        ("singular_cutoff", SINGULAR_CUTOFF),
        ("overlap_residual", OVERLAP_RESIDUAL),
        ("coupling", COUPLING),
        ("dissipation", DISSIPATION),
        ("info_equality", INFO_EQUALITY),
        ("dpi", DPI),
    ]
}
