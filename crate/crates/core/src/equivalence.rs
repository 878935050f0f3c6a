//! State equivalence, merging, epsilon-machines and the forward-to-reverse
//! state channel.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::machine::{
    is_unifilar, stationary_distribution, strongly_connected_components, time_reverse, Machine,
};
use crate::tolerance::{self, Limits};
use crate::{Error, Result};

/// Disjoint nonempty blocks covering `0..n`, kept in canonical order: each
/// block sorted, blocks ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(mut blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut block_of = vec![usize::MAX; n];
        for b in blocks.iter_mut() {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        for (i, b) in blocks.iter().enumerate() {
            for &s in b {
                if s >= n {
                    return Err(Error::InvalidPartition(format!("state {s} out of range")));
                }
                if block_of[s] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("state {s} in two blocks")));
                }
                block_of[s] = i;
            }
        }
        if let Some(s) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!("state {s} not covered")));
        }
        Ok(Partition { blocks, block_of })
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            blocks: (0..n).map(|s| vec![s]).collect(),
            block_of: (0..n).collect(),
        }
    }

    pub fn whole(n: usize) -> Self {
        Partition {
            blocks: vec![(0..n).collect()],
            block_of: vec![0; n],
        }
    }

    /// Connected components of an undirected graph on `0..n`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for (a, b) in edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for s in 0..n {
            let r = find(&mut parent, s);
            groups.entry(r).or_default().push(s);
        }
        Partition::new(groups.into_values().collect(), n).expect("components partition")
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
    pub fn block_of(&self, state: usize) -> usize {
        self.block_of[state]
    }
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }
    pub fn num_states(&self) -> usize {
        self.block_of.len()
    }
    /// All blocks are singletons.
    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }

    pub fn to_labeled(&self, states: &[String]) -> PartitionFile {
        PartitionFile {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|&s| states[s].clone()).collect())
                .collect(),
        }
    }

    pub fn from_labeled(file: &PartitionFile, states: &[String]) -> Result<Self> {
        let blocks = file
            .blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|name| {
                        states
                            .iter()
                            .position(|s| s == name)
                            .ok_or_else(|| Error::InvalidPartition(format!("unknown state `{name}`")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(blocks, states.len())
    }
}

/// On-disk partition format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub blocks: Vec<Vec<String>>,
}

/// Orthonormal basis of the smallest subspace containing `start` and closed
/// under every matrix in `ops`.
fn invariant_span(start: DVector<f64>, ops: &[DMatrix<f64>]) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut queue = vec![start];
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head].clone();
        head += 1;
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let mut r = v;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&r);
                r -= b * c;
            }
        }
        let rn = r.norm();
        if rn <= tolerance::SPAN * norm.max(1.0) {
            continue;
        }
        let u = r / rn;
        for op in ops {
            queue.push(op * &u);
        }
        basis.push(u);
    }
    basis
}

/// Groups indices whose signature vectors agree within the equivalence
/// tolerance (relative to their magnitude).
fn group_by_signature(signatures: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    'outer: for (s, sig) in signatures.iter().enumerate() {
        for b in blocks.iter_mut() {
            let rep = &signatures[b[0]];
            let close = sig.iter().zip(rep).all(|(a, c)| {
                (a - c).abs() <= tolerance::EQUIVALENCE * 1f64.max(a.abs()).max(c.abs())
            });
            if close {
                b.push(s);
                continue 'outer;
            }
        }
        blocks.push(vec![s]);
    }
    blocks
}

/// States with identical conditional distributions over past words.
///
/// The vectors `A_w pi` span a subspace reachable by closure; states agree
/// on all pasts iff `b_s / pi_s` coincide for every basis vector `b`.
pub fn retrodictive_partition(machine: &Machine) -> Result<Partition> {
    let pi = stationary_distribution(machine)?;
    let basis = invariant_span(pi.to_vector(), machine.transitions());
    let signatures: Vec<Vec<f64>> = (0..machine.num_states())
        .map(|s| basis.iter().map(|b| b[s] / pi[s]).collect())
        .collect();
    Partition::new(group_by_signature(&signatures), machine.num_states())
}

/// States with identical conditional distributions over future words.
///
/// Row vectors `1^T A_w` span the closure of the all-ones vector under the
/// transposed transitions; states agree iff all basis coordinates coincide.
pub fn predictive_partition(machine: &Machine) -> Result<Partition> {
    machine.require_valid()?;
    let n = machine.num_states();
    let transposed: Vec<DMatrix<f64>> = machine.transitions().iter().map(|t| t.transpose()).collect();
    let basis = invariant_span(DVector::from_element(n, 1.0), &transposed);
    let signatures: Vec<Vec<f64>> = (0..n).map(|s| basis.iter().map(|b| b[s]).collect()).collect();
    Partition::new(group_by_signature(&signatures), n)
}

fn block_name(machine: &Machine, block: &[usize]) -> String {
    block
        .iter()
        .map(|&s| machine.states()[s].as_str())
        .collect::<Vec<_>>()
        .join("+")
}

/// Merged generator `T'^x[t'][t] = sum T^x[s'][s] pi(s | t)` over blocks.
pub fn merge(machine: &Machine, partition: &Partition) -> Result<Machine> {
    if partition.num_states() != machine.num_states() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} states, machine has {}",
            partition.num_states(),
            machine.num_states()
        )));
    }
    let pi = stationary_distribution(machine)?;
    let nb = partition.num_blocks();
    let weight: Vec<f64> = partition
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&s| pi[s]).sum())
        .collect();
    let transitions = machine
        .transitions()
        .iter()
        .map(|t| {
            let mut m = DMatrix::zeros(nb, nb);
            for s in 0..machine.num_states() {
                let from = partition.block_of(s);
                let w = pi[s] / weight[from];
                for s2 in 0..machine.num_states() {
                    m[(partition.block_of(s2), from)] += t[(s2, s)] * w;
                }
            }
            m
        })
        .collect();
    let names = partition
        .blocks()
        .iter()
        .map(|b| block_name(machine, b))
        .collect();
    let merged = Machine::new(names, machine.alphabet().to_vec(), transitions)?;
    merged.require_valid()?;
    Ok(merged)
}

/// Largest absolute word-probability difference between two machines over
/// all words of length `1..=max_len`. Alphabets are matched by position.
pub fn max_word_discrepancy(a: &Machine, b: &Machine, max_len: usize, limits: &Limits) -> Result<f64> {
    if a.num_symbols() != b.num_symbols() {
        return Err(Error::InvalidMachine("alphabet sizes differ".into()));
    }
    let k = a.num_symbols();
    limits.check(tolerance::table_size(k, max_len, a.num_states() + b.num_states()))?;
    let va = stationary_distribution(a)?.to_vector();
    let vb = stationary_distribution(b)?.to_vector();
    let mut worst: f64 = 0.0;
    let mut stack = vec![(va, vb, 0usize)];
    while let Some((u, v, depth)) = stack.pop() {
        if depth == max_len {
            continue;
        }
        for x in 0..k {
            let nu = a.transition(x) * &u;
            let nv = b.transition(x) * &v;
            let (pu, pv) = (nu.sum(), nv.sum());
            worst = worst.max((pu - pv).abs());
            if pu > 0.0 || pv > 0.0 {
                stack.push((nu, nv, depth + 1));
            }
        }
    }
    Ok(worst)
}

/// Bounded-length mergeability certificate: the merged machine reproduces
/// every word probability up to `max_len` within the process tolerance.
/// Agreement to a finite length does not prove agreement for all lengths.
pub fn is_mergeable(machine: &Machine, partition: &Partition, max_len: usize, limits: &Limits) -> Result<bool> {
    let merged = merge(machine, partition)?;
    Ok(max_word_discrepancy(machine, &merged, max_len, limits)? <= tolerance::PROCESS)
}

/// Longest verification length up to 8 that fits the enumeration cap.
fn verification_length(a: &Machine, b: &Machine, limits: &Limits) -> usize {
    (0..=8)
        .rev()
        .find(|&l| {
            limits
                .check(tolerance::table_size(a.num_symbols(), l, a.num_states() + b.num_states()))
                .is_ok()
        })
        .unwrap_or(0)
}

fn verify_same_process(a: &Machine, b: &Machine, limits: &Limits) -> Result<()> {
    let len = verification_length(a, b, limits);
    let d = max_word_discrepancy(a, b, len, limits)?;
    if d > tolerance::PROCESS {
        Err(Error::ProcessMismatch(d))
    } else {
        Ok(())
    }
}

/// Recurrent part of the mixed-state presentation, as a unifilar machine.
fn mixed_state_machine(machine: &Machine, limits: &Limits) -> Result<Machine> {
    let pi = stationary_distribution(machine)?;
    let k = machine.num_symbols();
    let mut beliefs: Vec<DVector<f64>> = vec![pi.to_vector()];
    let mut edges: Vec<Vec<Option<(usize, f64)>>> = Vec::new();
    let mut head = 0;
    while head < beliefs.len() {
        let b = beliefs[head].clone();
        head += 1;
        let mut out = vec![None; k];
        for (x, slot) in out.iter_mut().enumerate() {
            let v = machine.transition(x) * &b;
            let p = v.sum();
            if p <= tolerance::PROB_ZERO {
                continue;
            }
            let nb = v / p;
            let idx = match beliefs
                .iter()
                .position(|e| (e - &nb).amax() <= tolerance::BELIEF)
            {
                Some(i) => i,
                None => {
                    if beliefs.len() >= limits.belief_cap {
                        return Err(Error::BeliefCapExceeded { cap: limits.belief_cap });
                    }
                    beliefs.push(nb);
                    beliefs.len() - 1
                }
            };
            *slot = Some((idx, p));
        }
        edges.push(out);
    }

    let adj: Vec<Vec<usize>> = edges
        .iter()
        .map(|out| out.iter().flatten().map(|&(to, _)| to).collect())
        .collect();
    let comps = strongly_connected_components(&adj);
    let bottom: Vec<&Vec<usize>> = comps
        .iter()
        .filter(|c| c.iter().all(|&v| adj[v].iter().all(|w| c.contains(w))))
        .collect();
    if bottom.len() != 1 {
        return Err(Error::AmbiguousRecurrence(bottom.len()));
    }
    let members = bottom[0];
    let local = |g: usize| members.iter().position(|&m| m == g).expect("closed component");
    let m = members.len();
    let mut mats = vec![DMatrix::zeros(m, m); k];
    for (i, &g) in members.iter().enumerate() {
        let total: f64 = edges[g].iter().flatten().map(|&(_, p)| p).sum();
        for (x, e) in edges[g].iter().enumerate() {
            if let Some((to, p)) = e {
                mats[x][(local(*to), i)] = p / total;
            }
        }
    }
    let mut used = std::collections::HashSet::new();
    let names: Vec<String> = members
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let b = &beliefs[g];
            let (imax, &bmax) = b
                .iter()
                .enumerate()
                .max_by(|a, c| a.1.total_cmp(c.1))
                .expect("nonempty belief");
            let name = if bmax >= 1.0 - tolerance::BELIEF {
                machine.states()[imax].clone()
            } else {
                format!("m{i}")
            };
            if used.insert(name.clone()) {
                name
            } else {
                format!("m{i}")
            }
        })
        .collect();
    let out = Machine::new(names, machine.alphabet().to_vec(), mats)?;
    out.require_valid()?;
    Ok(out)
}

/// Minimal unifilar generator with predictively distinct states.
///
/// Unifilar inputs are merged predictively; others go through the
/// mixed-state (belief) construction first. The result is checked against
/// the input on words up to length 8.
pub fn forward_epsilon_machine(machine: &Machine, limits: &Limits) -> Result<Machine> {
    machine.require_valid()?;
    let unifilar = if is_unifilar(machine) {
        machine.clone()
    } else {
        mixed_state_machine(machine, limits)?
    };
    let partition = predictive_partition(&unifilar)?;
    let em = if partition.is_trivial() {
        unifilar
    } else {
        merge(&unifilar, &partition)?
    };
    verify_same_process(machine, &em, limits)?;
    Ok(em)
}

/// Minimal co-unifilar generator with retrodictively distinct states,
/// obtained by reversing, building the forward epsilon-machine, and
/// reversing back.
pub fn reverse_epsilon_machine(machine: &Machine, limits: &Limits) -> Result<Machine> {
    let rev = time_reverse(machine)?;
    let em = time_reverse(&forward_epsilon_machine(&rev, limits)?)?;
    if !crate::machine::is_counifilar(&em) {
        return Err(Error::NotReverseEpsilonMachine("pipeline output not co-unifilar".into()));
    }
    verify_same_process(machine, &em, limits)?;
    Ok(em)
}

/// Conditional table `Pr(target | source)`, columns indexed by source.
#[derive(Debug, Clone, PartialEq)]
pub struct StateChannel {
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    /// Entry `(target, source)`.
    pub matrix: DMatrix<f64>,
}

/// Dense labeled matrix, the JSON form of a [`StateChannel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl Serialize for StateChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LabeledMatrix {
            rows: self.targets.clone(),
            cols: self.sources.clone(),
            matrix: self
                .matrix
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let lm = LabeledMatrix::deserialize(d)?;
        let (r, c) = (lm.rows.len(), lm.cols.len());
        if lm.matrix.len() != r || lm.matrix.iter().any(|row| row.len() != c) {
            return Err(serde::de::Error::custom("channel matrix shape does not match labels"));
        }
        Ok(StateChannel {
            matrix: DMatrix::from_fn(r, c, |i, j| lm.matrix[i][j]),
            sources: lm.cols,
            targets: lm.rows,
        })
    }
}

impl StateChannel {
    /// Largest column-sum deviation from one.
    pub fn normalization_residual(&self) -> f64 {
        self.matrix
            .column_iter()
            .map(|c| (c.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Estimated channel plus convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub channel: StateChannel,
    pub horizon: usize,
    /// Largest deviation of a synchronized word's reverse belief from its
    /// group average.
    pub max_disagreement: f64,
    /// Probability of words that left the forward machine unsynchronized.
    pub unsynchronized_mass: f64,
}

/// Estimates `Pr(s | p)` from forward states `p` of `fwd` to reverse states
/// `s` of `rev` by enumerating words of length `horizon`. Words whose
/// forward belief is concentrated on one state contribute their reverse
/// belief to that state's column, weighted by word probability.
pub fn forward_state_channel(fwd: &Machine, rev: &Machine, horizon: usize, limits: &Limits) -> Result<ChannelEstimate> {
    if fwd.alphabet() != rev.alphabet() {
        return Err(Error::InvalidMachine("machines use different alphabets".into()));
    }
    verify_same_process(fwd, rev, limits)?;
    limits.check(tolerance::table_size(
        fwd.num_symbols(),
        horizon,
        fwd.num_states() + rev.num_states(),
    ))?;
    let (np, ns) = (fwd.num_states(), rev.num_states());
    let lambda = stationary_distribution(fwd)?.to_vector();
    let pi = stationary_distribution(rev)?.to_vector();

    struct Leaf {
        state: usize,
        prob: f64,
        belief: DVector<f64>,
    }
    let mut leaves: Vec<Leaf> = Vec::new();
    let mut unsync = 0.0;
    let mut stack = vec![(lambda, pi, 0usize)];
    while let Some((u, v, depth)) = stack.pop() {
        if depth == horizon {
            let p = u.sum();
            let (imax, bmax) = u
                .iter()
                .enumerate()
                .map(|(i, &x)| (i, x / p))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty");
            if bmax >= 1.0 - tolerance::SYNC {
                let total = v.sum();
                leaves.push(Leaf { state: imax, prob: p, belief: v / total });
            } else {
                unsync += p;
            }
            continue;
        }
        for x in 0..fwd.num_symbols() {
            let nu = fwd.transition(x) * &u;
            if nu.sum() > 0.0 {
                let nv = rev.transition(x) * &v;
                stack.push((nu, nv, depth + 1));
            }
        }
    }

    let mut matrix = DMatrix::zeros(ns, np);
    let mut weight = vec![0.0; np];
    for leaf in &leaves {
        weight[leaf.state] += leaf.prob;
        let mut col = matrix.column_mut(leaf.state);
        col += &leaf.belief * leaf.prob;
    }
    for (p, &w) in weight.iter().enumerate() {
        if w <= 0.0 {
            return Err(Error::NotSynchronized {
                horizon,
                state: fwd.states()[p].clone(),
            });
        }
        let mut col = matrix.column_mut(p);
        col /= w;
    }
    let max_disagreement = leaves
        .iter()
        .map(|l| (&l.belief - matrix.column(l.state)).amax())
        .fold(0.0, f64::max);
    Ok(ChannelEstimate {
        channel: StateChannel {
            sources: fwd.states().to_vec(),
            targets: rev.states().to_vec(),
            matrix,
        },
        horizon,
        max_disagreement,
        unsynchronized_mass: unsync,
    })
}

/// Finest partition of target states such that
/// `Pr(s' | s) = sum_p C(s|p) C(s'|p) lambda_p / pi_s` vanishes across blocks.
pub fn ergodic_partition(channel: &StateChannel, fwd_stationary: &[f64], rev_stationary: &[f64]) -> Result<Partition> {
    let (ns, np) = channel.matrix.shape();
    if fwd_stationary.len() != np {
        return Err(Error::DimensionMismatch { expected: np, found: fwd_stationary.len() });
    }
    if rev_stationary.len() != ns {
        return Err(Error::DimensionMismatch { expected: ns, found: rev_stationary.len() });
    }
    if channel.normalization_residual() > 1e-10 {
        return Err(Error::InvalidDistribution("channel columns not normalized".into()));
    }
    let c = &channel.matrix;
    let mut edges = Vec::new();
    for s in 0..ns {
        for s2 in 0..ns {
            if s == s2 {
                continue;
            }
            let pe: f64 = (0..np)
                .map(|p| c[(s, p)] * c[(s2, p)] * fwd_stationary[p])
                .sum::<f64>()
                / rev_stationary[s];
            if pe > tolerance::SUPPORT {
                edges.push((s, s2));
            }
        }
    }
    Ok(Partition::from_edges(ns, edges))
}
