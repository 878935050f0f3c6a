//! Dissipation, partitions, theorem checkers, memory and synchronization.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Kind, QMachine};
use crate::equivalence::{merge, predictive_partition, retrodictive_partition, Partition, PartitionFile};
use crate::info::{DissipationRecord, DissipationTrace};
use crate::machine::{is_counifilar, is_unifilar, stationary_distribution, Machine};
use crate::quantum::linalg::{c, entropy_of_psd, trace, CMatrix};
use crate::quantum::state::renyi_entropy_of_spectrum;
use crate::quantum::von_neumann_entropy;
use crate::serial::ext_f64;
use crate::tolerance::{self, Limits};
use crate::{Error, Result};

/// Words whose probability falls below this are dropped from enumeration.
const WORD_FLOOR: f64 = 1e-14;

/// `p H(rho / p) - p log2 p` for an unnormalized word state of mass `p`.
fn word_entropy(unnormalized: &CMatrix, p: f64) -> f64 {
    p * entropy_of_psd(&(unnormalized / c(p, 0.0))) - p * p.log2()
}

fn children(qm: &QMachine, rho: &CMatrix) -> Vec<(CMatrix, f64)> {
    qm.kraus
        .ops()
        .iter()
        .map(|k| {
            let next = k * rho * k.adjoint();
            let p = trace(&next).re;
            (next, p)
        })
        .filter(|(_, p)| *p > WORD_FLOOR)
        .collect()
}

/// Quantum locality dissipation for `t = 1..=t_max` in Holevo form. With
/// `G_t = sum_{|w|=t} S(rho~_w)` over unnormalized word states,
/// `I(S_t : A_1..t) = S(rho_pi) - G_t + H(W_t)` and
/// `I(S_t+1 A_t+1 : A_1..t) = G_1 - G_t+1 + H(W_t)`.
pub fn quantum_dissipation(qm: &QMachine, t_max: usize, limits: &Limits) -> Result<DissipationTrace> {
    let (k, d) = (qm.source.num_symbols(), qm.dim());
    limits.check(tolerance::table_size(k, t_max + 1, d))?;
    let rho = qm.rho.matrix().clone();
    let h_rho = von_neumann_entropy(&qm.rho);
    let mut g = vec![h_rho];
    let mut word_h = vec![0.0];
    let mut level = vec![(rho, 1.0)];
    for _ in 0..=t_max {
        level = level
            .par_iter()
            .flat_map_iter(|(r, _)| children(qm, r))
            .collect();
        let (gt, ht) = level
            .par_iter()
            .map(|(r, p)| (word_entropy(r, *p), -p * p.log2()))
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        g.push(gt);
        word_h.push(ht);
    }
    let records = (1..=t_max)
        .map(|t| {
            let info_before = h_rho - g[t] + word_h[t];
            let info_after = g[1] - g[t + 1] + word_h[t];
            DissipationRecord { t, info_before, info_after, dissipation: info_before - info_after }
        })
        .collect();
    Ok(DissipationTrace { records })
}

/// Most refined partition coupling states with nonzero encoding overlap
/// (forward) or nonzero stationary coherence (reverse).
pub fn mcp(qm: &QMachine) -> Partition {
    let n = qm.source.num_states();
    let m = match qm.kind {
        Kind::Forward => qm.overlap_matrix(),
        Kind::Reverse => {
            let e = &qm.encodings;
            e.adjoint() * qm.rho.matrix() * e
        }
    };
    let edges = (0..n)
        .flat_map(|r| (0..n).map(move |s| (r, s)))
        .filter(|&(r, s)| r != s && m[(r, s)].norm() > tolerance::COUPLING);
    Partition::from_edges(n, edges.collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergedProperty {
    CoUnifilar,
    Unifilar,
}

/// Numerical corroboration of a structural verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub t_max: usize,
    pub max_dissipation: f64,
    /// Whether `max_dissipation <= 1e-9` matches the structural verdict.
    pub agrees: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub kind: Kind,
    pub efficient: bool,
    pub mcp_trivially_maximal: bool,
    pub merged_property: MergedProperty,
    /// Whether the merged machine has `merged_property`.
    pub merged_property_holds: bool,
    pub mcp: PartitionFile,
    pub merged_machine: Machine,
    pub cross_check: Option<CrossCheck>,
}

fn cross_check(qm: &QMachine, efficient: bool, t_check: usize, limits: &Limits) -> Result<Option<CrossCheck>> {
    if t_check == 0 {
        return Ok(None);
    }
    match quantum_dissipation(qm, t_check, limits) {
        Ok(trace) => {
            let max_dissipation = trace.max_dissipation();
            Ok(Some(CrossCheck {
                t_max: t_check,
                max_dissipation,
                agrees: (max_dissipation <= tolerance::DISSIPATION) == efficient,
            }))
        }
        Err(Error::EnumerationCapExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Forward efficiency: the MCP is all singletons and the machine merged by
/// the MCP and then retrodictively is co-unifilar.
pub fn check_forward_efficiency(qm: &QMachine, t_check: usize, limits: &Limits) -> Result<TheoremVerdict> {
    if qm.kind != Kind::Forward {
        return Err(Error::WrongKind { expected: "forward" });
    }
    let partition = mcp(qm);
    let by_mcp = merge(&qm.source, &partition)?;
    let merged = merge(&by_mcp, &retrodictive_partition(&by_mcp)?)?;
    let trivial = partition.is_trivial();
    let holds = is_counifilar(&merged);
    let efficient = trivial && holds;
    Ok(TheoremVerdict {
        kind: Kind::Forward,
        efficient,
        mcp_trivially_maximal: trivial,
        merged_property: MergedProperty::CoUnifilar,
        merged_property_holds: holds,
        mcp: partition.to_labeled(qm.source.states()),
        merged_machine: merged,
        cross_check: cross_check(qm, efficient, t_check, limits)?,
    })
}

/// Reverse efficiency: the stationary-state block partition is all
/// singletons and the machine merged by it and then predictively is unifilar.
pub fn check_reverse_efficiency(qm: &QMachine, t_check: usize, limits: &Limits) -> Result<TheoremVerdict> {
    if qm.kind != Kind::Reverse {
        return Err(Error::WrongKind { expected: "reverse" });
    }
    let partition = mcp(qm);
    let by_mcp = merge(&qm.source, &partition)?;
    let merged = merge(&by_mcp, &predictive_partition(&by_mcp)?)?;
    let trivial = partition.is_trivial();
    let holds = is_unifilar(&merged);
    let efficient = trivial && holds;
    Ok(TheoremVerdict {
        kind: Kind::Reverse,
        efficient,
        mcp_trivially_maximal: trivial,
        merged_property: MergedProperty::Unifilar,
        merged_property_holds: holds,
        mcp: partition.to_labeled(qm.source.states()),
        merged_machine: merged,
        cross_check: cross_check(qm, efficient, t_check, limits)?,
    })
}

/// Renyi orders reported by default: 0, 1, 2 and infinity.
pub const DEFAULT_ALPHAS: [f64; 4] = [0.0, 1.0, 2.0, f64::INFINITY];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenyiValue {
    #[serde(with = "ext_f64")]
    pub alpha: f64,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryMetrics {
    /// Number of states, or Hilbert-space dimension.
    pub cardinality: usize,
    pub log_cardinality: f64,
    /// Shannon or von Neumann entropy.
    pub entropy: f64,
    pub renyi: Vec<RenyiValue>,
}

fn metrics(cardinality: usize, spectrum: &[f64], alphas: &[f64]) -> Result<MemoryMetrics> {
    Ok(MemoryMetrics {
        cardinality,
        log_cardinality: (cardinality as f64).log2(),
        entropy: renyi_entropy_of_spectrum(spectrum, 1.0)?,
        renyi: alphas
            .iter()
            .map(|&alpha| Ok(RenyiValue { alpha, bits: renyi_entropy_of_spectrum(spectrum, alpha)? }))
            .collect::<Result<_>>()?,
    })
}

/// `|S|` and Renyi entropies of the stationary distribution.
pub fn machine_memory(machine: &Machine, alphas: &[f64]) -> Result<MemoryMetrics> {
    let pi = stationary_distribution(machine)?;
    metrics(machine.num_states(), pi.as_slice(), alphas)
}

/// `d` and Renyi entropies of the stationary state.
pub fn qmachine_memory(qm: &QMachine, alphas: &[f64]) -> Result<MemoryMetrics> {
    metrics(qm.dim(), &qm.rho.eigenvalues(), alphas)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncOptions {
    /// Threshold base: a word is low-fidelity when `F < 1 - alpha^t`.
    pub alpha: f64,
    /// Monte Carlo samples used when exact enumeration exceeds the cap;
    /// zero disables sampling.
    pub samples: usize,
    pub seed: u64,
}

impl Default for SyncOptions {
    fn default() -> Self {
        SyncOptions { alpha: 0.9, samples: 0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SyncMethod {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncPoint {
    pub t: usize,
    pub threshold: f64,
    pub low_fidelity_mass: f64,
}

/// Least-squares fit `mass ~ k alpha^t` over points with positive mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncFit {
    pub alpha: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncStats {
    #[serde(flatten)]
    pub method: SyncMethod,
    pub curve: Vec<SyncPoint>,
    pub fit: Option<SyncFit>,
}

/// Fidelity of a normalized word state with the encoding of the most likely
/// classical state.
fn word_fidelity(qm: &QMachine, rho: &CMatrix, p: f64, belief: &DVector<f64>) -> f64 {
    let best = belief.iamax();
    let psi = qm.encodings.column(best);
    (psi.adjoint() * rho * psi)[(0, 0)].re / p
}

/// Low-fidelity word mass for `t = 1..=t_max`, by exact enumeration or, if
/// that exceeds the cap and `samples > 0`, by sampling the source machine.
pub fn synchronization_stats(qm: &QMachine, t_max: usize, options: &SyncOptions, limits: &Limits) -> Result<SyncStats> {
    if qm.kind != Kind::Forward {
        return Err(Error::WrongKind { expected: "forward" });
    }
    let src = &qm.source;
    let pi = stationary_distribution(src)?.to_vector();
    let thresholds: Vec<f64> = (1..=t_max).map(|t| 1.0 - options.alpha.powi(t as i32)).collect();
    let required = tolerance::table_size(src.num_symbols(), t_max, qm.dim() * qm.dim() + src.num_states());
    let (method, masses) = match limits.check(required) {
        Ok(()) => (SyncMethod::Exact, exact_sync(qm, &pi, &thresholds)),
        Err(e) if options.samples == 0 => return Err(e),
        Err(_) => (
            SyncMethod::Sampled { samples: options.samples, seed: options.seed },
            sampled_sync(qm, &pi, &thresholds, options),
        ),
    };
    let curve: Vec<SyncPoint> = masses
        .into_iter()
        .zip(&thresholds)
        .enumerate()
        .map(|(i, (low_fidelity_mass, &threshold))| SyncPoint { t: i + 1, threshold, low_fidelity_mass })
        .collect();
    Ok(SyncStats { method, fit: fit_envelope(&curve), curve })
}

fn exact_sync(qm: &QMachine, pi: &DVector<f64>, thresholds: &[f64]) -> Vec<f64> {
    let src = &qm.source;
    let mut level: Vec<(CMatrix, DVector<f64>)> = vec![(qm.rho.matrix().clone(), pi.clone())];
    let mut out = Vec::with_capacity(thresholds.len());
    for threshold in thresholds {
        level = level
            .par_iter()
            .flat_map_iter(|(r, v)| {
                qm.kraus.ops().iter().zip(src.transitions()).filter_map(move |(k, t)| {
                    let next = k * r * k.adjoint();
                    (trace(&next).re > WORD_FLOOR).then(|| (next, t * v))
                })
            })
            .collect();
        let mass = level
            .par_iter()
            .map(|(r, v)| {
                let p = trace(r).re;
                if word_fidelity(qm, r, p, v) < *threshold { p } else { 0.0 }
            })
            .sum();
        out.push(mass);
    }
    out
}

fn sampled_sync(qm: &QMachine, pi: &DVector<f64>, thresholds: &[f64], options: &SyncOptions) -> Vec<f64> {
    let src = &qm.source;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut low = vec![0usize; thresholds.len()];
    let n = src.num_states();
    for _ in 0..options.samples {
        let mut state = sample_index(&mut rng, pi.iter().copied());
        let mut rho = qm.rho.matrix().clone();
        let mut belief = pi.clone();
        for (t, threshold) in thresholds.iter().enumerate() {
            let moves = (0..src.num_symbols()).flat_map(|x| (0..n).map(move |to| (x, to)));
            let weights: Vec<f64> = moves.clone().map(|(x, to)| src.transition(x)[(to, state)]).collect();
            let (x, to) = moves.clone().nth(sample_index(&mut rng, weights.into_iter())).expect("move");
            state = to;
            let k = qm.kraus_op(x);
            rho = k * &rho * k.adjoint();
            let p = trace(&rho).re;
            rho /= c(p, 0.0);
            belief = src.transition(x) * belief;
            belief /= belief.sum();
            if word_fidelity(qm, &rho, 1.0, &belief) < *threshold {
                low[t] += 1;
            }
        }
    }
    low.into_iter().map(|l| l as f64 / options.samples as f64).collect()
}

fn sample_index(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>) -> usize {
    let w: Vec<f64> = weights.collect();
    let total: f64 = w.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, &x) in w.iter().enumerate() {
        if u < x {
            return i;
        }
        u -= x;
    }
    w.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

fn fit_envelope(curve: &[SyncPoint]) -> Option<SyncFit> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|p| p.low_fidelity_mass > 0.0)
        .map(|p| (p.t as f64, p.low_fidelity_mass.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(SyncFit { alpha: slope.exp(), k: (my - slope * mx).exp() })
}
