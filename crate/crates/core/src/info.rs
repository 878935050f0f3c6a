//! Classical information measures, entropy rates, locality dissipation and
//! the classical efficiency classifier.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::equivalence::{merge, retrodictive_partition, PartitionFile};
use crate::machine::{
    counifilar_map, counifilar_violation, forward_table, stationary_distribution, unifilar_map,
    Machine,
};
use crate::tolerance::{self, Limits};
use crate::{Error, Result};

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// `-sum p log2 p` over positive entries, no validation.
pub(crate) fn entropy_bits<'a>(probs: impl IntoIterator<Item = &'a f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        + 0.0
}

fn check_distribution(probs: &[f64]) -> Result<()> {
    if let Some(&p) = probs.iter().find(|&&p| p < -tolerance::PROB_ZERO || p.is_nan()) {
        return Err(Error::NegativeProbability(p));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tolerance::PROCESS {
        return Err(Error::InvalidDistribution(format!("total mass {total}")));
    }
    Ok(())
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> Result<f64> {
    check_distribution(probs)?;
    Ok(entropy_bits(probs))
}

fn check_joint(joint: &DMatrix<f64>) -> Result<()> {
    check_distribution(joint.as_slice())
}

fn row_marginal(joint: &DMatrix<f64>) -> Vec<f64> {
    joint.row_iter().map(|r| r.sum()).collect()
}

fn col_marginal(joint: &DMatrix<f64>) -> Vec<f64> {
    joint.column_iter().map(|c| c.sum()).collect()
}

/// `H(X, Y)` for a joint table with rows `X` and columns `Y`.
pub fn joint_entropy(joint: &DMatrix<f64>) -> Result<f64> {
    check_joint(joint)?;
    Ok(entropy_bits(joint.as_slice()))
}

/// `H(X | Y)` for a joint table with rows `X` and columns `Y`.
pub fn conditional_entropy(joint: &DMatrix<f64>) -> Result<f64> {
    check_joint(joint)?;
    Ok(entropy_bits(joint.as_slice()) - entropy_bits(&col_marginal(joint)))
}

/// `I(X : Y)` for a joint table with rows `X` and columns `Y`.
pub fn mutual_information(joint: &DMatrix<f64>) -> Result<f64> {
    check_joint(joint)?;
    Ok(mutual_information_unchecked(joint))
}

fn mutual_information_unchecked(joint: &DMatrix<f64>) -> f64 {
    entropy_bits(&row_marginal(joint)) + entropy_bits(&col_marginal(joint))
        - entropy_bits(joint.as_slice())
}

/// `I(A : B | C)` for a table indexed `[(a * nb + b) * nc + c]`.
pub fn conditional_mutual_information(probs: &[f64], dims: (usize, usize, usize)) -> Result<f64> {
    let (na, nb, nc) = dims;
    if probs.len() != na * nb * nc {
        return Err(Error::DimensionMismatch { expected: na * nb * nc, found: probs.len() });
    }
    check_distribution(probs)?;
    let mut ac = vec![0.0; na * nc];
    let mut bc = vec![0.0; nb * nc];
    let mut c_m = vec![0.0; nc];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let p = probs[(a * nb + b) * nc + c];
                ac[a * nc + c] += p;
                bc[b * nc + c] += p;
                c_m[c] += p;
            }
        }
    }
    Ok(entropy_bits(&ac) + entropy_bits(&bc) - entropy_bits(probs) - entropy_bits(&c_m))
}

/// Block entropy `H(X_1 .. X_t)` of the stationary process.
pub fn block_entropy(machine: &Machine, t: usize, limits: &Limits) -> Result<f64> {
    Ok(entropy_bits(&crate::machine::word_distribution(machine, t, limits)?))
}

/// How an entropy rate was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EntropyRateMethod {
    ClosedForm,
    BlockDifference { t: usize, h_t: f64, h_t_minus_1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRate {
    pub bits_per_symbol: f64,
    #[serde(flatten)]
    pub method: EntropyRateMethod,
}

/// `sum_s pi(s) H[Pr(x | s)]`, exact for unifilar machines.
pub fn unifilar_entropy_rate(machine: &Machine) -> Result<f64> {
    if unifilar_map(machine).is_none() {
        return Err(Error::NotUnifilar);
    }
    let pi = stationary_distribution(machine)?;
    Ok((0..machine.num_states())
        .map(|s| {
            let emit: Vec<f64> = machine
                .transitions()
                .iter()
                .map(|t| t.column(s).sum())
                .collect();
            pi[s] * entropy_bits(&emit)
        })
        .sum())
}

/// `H(t) - H(t-1)`.
pub fn block_entropy_difference(machine: &Machine, t: usize, limits: &Limits) -> Result<EntropyRate> {
    let t = t.max(1);
    let h_t = block_entropy(machine, t, limits)?;
    let h_t_minus_1 = block_entropy(machine, t - 1, limits)?;
    Ok(EntropyRate {
        bits_per_symbol: h_t - h_t_minus_1,
        method: EntropyRateMethod::BlockDifference { t, h_t, h_t_minus_1 },
    })
}

/// Entropy rate: closed form for unifilar machines, otherwise the block
/// entropy difference at the largest length the cap allows (at most 24).
pub fn entropy_rate(machine: &Machine, limits: &Limits) -> Result<EntropyRate> {
    if unifilar_map(machine).is_some() {
        return Ok(EntropyRate {
            bits_per_symbol: unifilar_entropy_rate(machine)?,
            method: EntropyRateMethod::ClosedForm,
        });
    }
    let (k, n) = (machine.num_symbols(), machine.num_states());
    let t = (1..=24)
        .rev()
        .find(|&t| limits.check(tolerance::table_size(k, t, n)).is_ok())
        .ok_or(Error::EnumerationCapExceeded {
            required: tolerance::table_size(k, 1, n),
            cap: limits.enumeration_cap,
        })?;
    block_entropy_difference(machine, t, limits)
}

/// One entry of a locality-dissipation trace; informations in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationRecord {
    pub t: usize,
    /// `I(S_t : X_1..X_t)`.
    pub info_before: f64,
    /// `I(S_{t+1} X_{t+1} : X_1..X_t)`.
    pub info_after: f64,
    /// Difference of the two, in units of `k_B T ln 2`.
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationTrace {
    pub records: Vec<DissipationRecord>,
}

impl DissipationTrace {
    pub fn max_dissipation(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.dissipation)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_dissipation(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.dissipation)
            .fold(f64::INFINITY, f64::min)
    }

    /// Dissipation values in joules at the given temperature (kelvin).
    pub fn in_joules(&self, temperature: f64) -> Vec<f64> {
        let scale = BOLTZMANN * temperature * std::f64::consts::LN_2;
        self.records.iter().map(|r| r.dissipation * scale).collect()
    }

    /// CSV with header `t,info_before,info_after,dissipation`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

/// Exact classical locality dissipation for `t = 1..=t_max`:
/// `H(pi) - H(W_1,S_1) - H(W_t,S_t) + H(W_{t+1},S_{t+1})` bits.
pub fn classical_dissipation(machine: &Machine, t_max: usize, limits: &Limits) -> Result<DissipationTrace> {
    let (k, n) = (machine.num_symbols(), machine.num_states());
    limits.check(tolerance::table_size(k, t_max + 1, n))?;
    let pi = stationary_distribution(machine)?;
    // Joint entropy H(W_t, S_t) and word entropy H(W_t) per level.
    let mut joint_h = vec![entropy_bits(pi.as_slice())];
    let mut word_h = vec![0.0];
    let mut level = vec![pi.to_vector()];
    for _ in 0..=t_max {
        let mut next = Vec::with_capacity(level.len() * k);
        for v in &level {
            for tx in machine.transitions() {
                let nv = tx * v;
                if nv.sum() > 0.0 {
                    next.push(nv);
                }
            }
        }
        joint_h.push(next.iter().map(|v| entropy_bits(v.iter())).sum());
        word_h.push(next.iter().map(|v| v.sum()).map(|p| -p * p.log2()).sum());
        level = next;
    }
    let h_pi = joint_h[0];
    let records = (1..=t_max)
        .map(|t| {
            let info_before = h_pi + word_h[t] - joint_h[t];
            let info_after = joint_h[1] + word_h[t] - joint_h[t + 1];
            DissipationRecord {
                t,
                info_before,
                info_after,
                dissipation: info_before - info_after,
            }
        })
        .collect();
    Ok(DissipationTrace { records })
}

/// Evidence for or against efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `(state, symbol) -> predecessor` for every used pair of the merged machine.
    PredecessorFunction { entries: Vec<(String, String, String)> },
    /// A merged state reached on `symbol` from two or more states.
    Violation { state: String, symbol: String, predecessors: Vec<String> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EfficiencyVerdict {
    pub efficient: bool,
    pub partition: PartitionFile,
    pub merged_machine: Machine,
    pub witness: Witness,
}

/// Merges retrodictively and tests the merged machine for co-unifilarity.
pub fn classify_efficiency(machine: &Machine) -> Result<EfficiencyVerdict> {
    let partition = retrodictive_partition(machine)?;
    let merged = merge(machine, &partition)?;
    let name = |s: usize| merged.states()[s].clone();
    let sym = |x: usize| merged.alphabet()[x].clone();
    let witness = match counifilar_violation(&merged) {
        Some((to, x, preds)) => Witness::Violation {
            state: name(to),
            symbol: sym(x),
            predecessors: preds.into_iter().map(name).collect(),
        },
        None => {
            let g = counifilar_map(&merged).expect("co-unifilar");
            let mut entries = Vec::new();
            for (to, row) in g.iter().enumerate() {
                for (x, from) in row.iter().enumerate() {
                    if let Some(from) = from {
                        entries.push((name(to), sym(x), name(*from)));
                    }
                }
            }
            Witness::PredecessorFunction { entries }
        }
    };
    Ok(EfficiencyVerdict {
        efficient: matches!(witness, Witness::PredecessorFunction { .. }),
        partition: partition.to_labeled(machine.states()),
        merged_machine: merged,
        witness,
    })
}

/// Sufficiency diagnostics for one past/future split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResidual {
    pub past: usize,
    pub future: usize,
    /// `I(past : future | S_t)`; zero for every hidden Markov generator.
    pub markov: f64,
    /// `I(past : S_t | future)`.
    pub sufficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrodictorCheck {
    pub retrodictor: bool,
    pub structural: bool,
    pub markov_residual: f64,
    pub splits: Vec<SplitResidual>,
}

/// Finite-horizon retrodictor test: the structural verdict of
/// [`classify_efficiency`] combined with the Markov test
/// `I(X_1..t : X_t+1..t+h | S_t) = 0` for every split with `t + h = horizon`.
/// The conditional information `I(past : S_t | future)` is reported per split
/// as a diagnostic.
pub fn is_retrodictor(machine: &Machine, horizon: usize, limits: &Limits) -> Result<RetrodictorCheck> {
    let (k, n) = (machine.num_symbols(), machine.num_states());
    limits.check(tolerance::table_size(k, horizon, n))?;
    let structural = classify_efficiency(machine)?.efficient;
    let pi = stationary_distribution(machine)?;
    let mut splits = Vec::new();
    for t in 1..horizon {
        let h = horizon - t;
        let past = forward_table(machine, &pi.to_vector(), t);
        // beta[f][s] = Pr(future word f | S = s).
        let transposed: Vec<DMatrix<f64>> = machine.transitions().iter().map(|m| m.transpose()).collect();
        let mut beta = vec![DVector::from_element(n, 1.0)];
        for _ in 0..h {
            let mut next = Vec::with_capacity(beta.len() * k);
            for b in &beta {
                // Prepend each symbol: 1^T A_w T^x = (T^x)^T (A_w^T 1).
                for tx in &transposed {
                    next.push(tx * b);
                }
            }
            beta = next;
        }
        // `beta` is indexed with the first future symbol least significant;
        // the index order is irrelevant for the informations below.
        let (np, nf) = (past.len(), beta.len());
        let mut table = vec![0.0; np * nf * n];
        for (p, a) in past.iter().enumerate() {
            for (f, b) in beta.iter().enumerate() {
                for s in 0..n {
                    table[(p * nf + f) * n + s] = a[s] * b[s];
                }
            }
        }
        let markov = conditional_mutual_information(&table, (np, nf, n))?;
        let mut reordered = vec![0.0; table.len()];
        for p in 0..np {
            for f in 0..nf {
                for s in 0..n {
                    reordered[(p * n + s) * nf + f] = table[(p * nf + f) * n + s];
                }
            }
        }
        let sufficiency = conditional_mutual_information(&reordered, (np, n, nf))?;
        splits.push(SplitResidual { past: t, future: h, markov, sufficiency });
    }
    let markov_residual = splits.iter().map(|s| s.markov).fold(0.0, f64::max);
    Ok(RetrodictorCheck {
        retrodictor: structural && markov_residual <= tolerance::PROCESS,
        structural,
        markov_residual,
        splits,
    })
}

/// Both verdicts of the local reversibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReversibility {
    pub info_before: f64,
    pub info_after: f64,
    pub numeric: bool,
    pub structural: bool,
}

/// Computes both verdicts without asserting agreement.
///
/// `joint` has rows `X` and columns `Y`; `channel` has entry `(z, x)`.
pub fn local_reversibility(joint: &DMatrix<f64>, channel: &DMatrix<f64>) -> Result<LocalReversibility> {
    check_joint(joint)?;
    let (nx, ny) = joint.shape();
    if channel.ncols() != nx {
        return Err(Error::DimensionMismatch { expected: nx, found: channel.ncols() });
    }
    if let Some(&p) = channel.iter().find(|&&p| p < -tolerance::PROB_ZERO) {
        return Err(Error::NegativeProbability(p));
    }
    for c in channel.column_iter() {
        if (c.sum() - 1.0).abs() > tolerance::PROCESS {
            return Err(Error::InvalidDistribution(format!("channel column sums to {}", c.sum())));
        }
    }
    let zy = channel * joint;
    let info_before = mutual_information_unchecked(joint);
    let info_after = mutual_information_unchecked(&zy);
    let numeric = (info_before - info_after).abs() <= tolerance::INFO_EQUALITY;

    let px = row_marginal(joint);
    let pz = row_marginal(&zy);
    let mut structural = true;
    for x in 0..nx {
        if px[x] <= tolerance::PROB_ZERO {
            continue;
        }
        for z in 0..channel.nrows() {
            if channel[(z, x)] <= tolerance::SUPPORT {
                continue;
            }
            for y in 0..ny {
                let given_x = joint[(x, y)] / px[x];
                let given_z = zy[(z, y)] / pz[z];
                if (given_x - given_z).abs() > tolerance::SUPPORT {
                    structural = false;
                }
            }
        }
    }
    Ok(LocalReversibility { info_before, info_after, numeric, structural })
}

/// Whether the local channel on `X` preserves all information about `Y`.
/// The information-equality and conditional-distribution criteria must agree.
pub fn classical_local_reversibility_check(joint: &DMatrix<f64>, channel: &DMatrix<f64>) -> Result<bool> {
    let r = local_reversibility(joint, channel)?;
    if r.numeric != r.structural {
        return Err(Error::VerdictMismatch(format!(
            "I(X:Y) = {}, I(Z:Y) = {}, structural = {}",
            r.info_before, r.info_after, r.structural
        )));
    }
    Ok(r.numeric)
}
