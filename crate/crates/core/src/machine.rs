//! Classical hidden Markov generators.
//!
//! Transition matrices are stored column-stochastic: `transitions[x][(to, from)]`
//! is the probability of emitting symbol `x` and moving to `to` given `from`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::tolerance::{self, Limits};
use crate::{Error, Result};

/// A labeled stochastic transition family over finite states and symbols.
#[derive(Clone)]
pub struct Machine {
    states: Vec<String>,
    alphabet: Vec<String>,
    transitions: Vec<DMatrix<f64>>,
    stationary: Arc<OnceLock<std::result::Result<StationaryDist, (usize, f64)>>>,
}

impl fmt::Debug for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Machine")
            .field("states", &self.states)
            .field("alphabet", &self.alphabet)
            .field("transitions", &self.transitions)
            .finish()
    }
}

/// Stationary distribution, indexed like `Machine::states`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDist {
    pub probs: Vec<f64>,
    /// Final residual `max |T pi - pi|`.
    pub residual: f64,
}

impl StationaryDist {
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.probs)
    }
}

impl std::ops::Index<usize> for StationaryDist {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

/// A finite symbol sequence, stored as alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }
    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    /// Decodes a mixed-radix word index; the first symbol is most significant.
    pub fn from_index(mut index: usize, len: usize, radix: usize) -> Word {
        let mut out = vec![0; len];
        for slot in out.iter_mut().rev() {
            *slot = index % radix;
            index /= radix;
        }
        Word(out)
    }

    pub fn index(&self, radix: usize) -> usize {
        self.0.iter().fold(0, |acc, &x| acc * radix + x)
    }
}

/// One failed check in a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EntryOutOfRange { symbol: String, to: String, from: String, value: f64 },
    NotStochastic { state: String, column_sum: f64 },
    NotIrreducible { components: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EntryOutOfRange { symbol, to, from, value } => write!(
                f,
                "entry ({to}, {from}) for symbol {symbol} out of range: {value}"
            ),
            Violation::NotStochastic { state, column_sum } => {
                write!(f, "column {state} not stochastic (sum {column_sum})")
            }
            Violation::NotIrreducible { components } => {
                write!(f, "not irreducible ({components} strongly connected components)")
            }
        }
    }
}

/// Outcome of [`validate`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Largest column-sum deviation from one.
    pub max_stochastic_residual: f64,
    pub irreducible: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Machine {
    /// Builds a machine, checking only shapes, label uniqueness and finiteness.
    /// Use [`validate`] (or [`Machine::validated`]) for the stochastic invariants.
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        transitions: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::InvalidMachine("no states".into()));
        }
        if alphabet.is_empty() {
            return Err(Error::InvalidMachine("empty alphabet".into()));
        }
        if transitions.len() != alphabet.len() {
            return Err(Error::InvalidMachine(format!(
                "{} symbols but {} transition matrices",
                alphabet.len(),
                transitions.len()
            )));
        }
        check_unique("state", &states)?;
        check_unique("symbol", &alphabet)?;
        for (x, t) in transitions.iter().enumerate() {
            if t.nrows() != n || t.ncols() != n {
                return Err(Error::InvalidMachine(format!(
                    "matrix for symbol {} is {}x{}, expected {n}x{n}",
                    alphabet[x],
                    t.nrows(),
                    t.ncols()
                )));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMachine(format!(
                    "non-finite entry for symbol {}",
                    alphabet[x]
                )));
            }
        }
        Ok(Machine {
            states,
            alphabet,
            transitions,
            stationary: Arc::new(OnceLock::new()),
        })
    }

    /// Builds a machine and rejects it unless [`validate`] passes.
    pub fn validated(
        states: Vec<String>,
        alphabet: Vec<String>,
        transitions: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let m = Machine::new(states, alphabet, transitions)?;
        m.require_valid()?;
        Ok(m)
    }

    /// Convenience constructor from `(from, symbol, to, prob)` edges.
    pub fn from_edges(
        states: &[&str],
        alphabet: &[&str],
        edges: &[(&str, &str, &str, f64)],
    ) -> Result<Self> {
        let file = MachineFile {
            states: states.iter().map(|s| s.to_string()).collect(),
            alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
            transitions: edges
                .iter()
                .map(|&(from, symbol, to, prob)| Edge {
                    from: from.into(),
                    symbol: symbol.into(),
                    to: to.into(),
                    prob,
                })
                .collect(),
        };
        let m = file.into_machine()?;
        m.require_valid()?;
        Ok(m)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }
    pub fn num_states(&self) -> usize {
        self.states.len()
    }
    pub fn num_symbols(&self) -> usize {
        self.alphabet.len()
    }
    /// `T^(x)` with entry `(to, from)`.
    pub fn transition(&self, x: usize) -> &DMatrix<f64> {
        &self.transitions[x]
    }
    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.transitions
    }

    /// Total transition matrix `T = sum_x T^(x)`.
    pub fn total(&self) -> DMatrix<f64> {
        let n = self.num_states();
        self.transitions
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, t| acc + t)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn symbol_index(&self, name: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    /// Builds a word from symbol names.
    pub fn word<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Word> {
        symbols
            .iter()
            .map(|s| self.symbol_index(s.as_ref()))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    /// Parses a word. Single-character alphabets are read character by
    /// character; otherwise symbols are separated by whitespace or commas.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        if self.alphabet.iter().all(|s| s.chars().count() == 1) {
            text.chars()
                .filter(|c| !c.is_whitespace() && *c != ',')
                .map(|c| self.symbol_index(&c.to_string()))
                .collect::<Result<Vec<_>>>()
                .map(Word)
        } else {
            text.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| self.symbol_index(s))
                .collect::<Result<Vec<_>>>()
                .map(Word)
        }
    }

    pub fn format_word(&self, word: &Word) -> String {
        let sep = if self.alphabet.iter().all(|s| s.chars().count() == 1) {
            ""
        } else {
            " "
        };
        word.0
            .iter()
            .map(|&x| self.alphabet[x].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub(crate) fn require_valid(&self) -> Result<()> {
        let report = validate(self);
        if report.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidMachine(msgs.join("; ")))
        }
    }

    /// Same structure with new state labels.
    pub fn relabeled(&self, states: Vec<String>) -> Result<Machine> {
        Machine::new(states, self.alphabet.clone(), self.transitions.clone())
    }

    /// Largest entrywise difference to another machine of the same shape.
    pub fn max_abs_diff(&self, other: &Machine) -> Option<f64> {
        if self.num_states() != other.num_states() || self.num_symbols() != other.num_symbols() {
            return None;
        }
        Some(
            self.transitions
                .iter()
                .zip(&other.transitions)
                .map(|(a, b)| (a - b).abs().max())
                .fold(0.0, f64::max),
        )
    }
}

fn check_unique(what: &str, labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::InvalidMachine(format!("duplicate {what} `{l}`")));
        }
    }
    Ok(())
}

/// Checks entry ranges, column stochasticity and irreducibility.
pub fn validate(machine: &Machine) -> ValidationReport {
    let n = machine.num_states();
    let mut report = ValidationReport::default();
    for (x, t) in machine.transitions.iter().enumerate() {
        for from in 0..n {
            for to in 0..n {
                let v = t[(to, from)];
                if !(-tolerance::STOCHASTIC..=1.0 + tolerance::STOCHASTIC).contains(&v) {
                    report.violations.push(Violation::EntryOutOfRange {
                        symbol: machine.alphabet[x].clone(),
                        to: machine.states[to].clone(),
                        from: machine.states[from].clone(),
                        value: v,
                    });
                }
            }
        }
    }
    let total = machine.total();
    for from in 0..n {
        let sum: f64 = total.column(from).sum();
        let dev = (sum - 1.0).abs();
        report.max_stochastic_residual = report.max_stochastic_residual.max(dev);
        if dev > tolerance::STOCHASTIC {
            report.violations.push(Violation::NotStochastic {
                state: machine.states[from].clone(),
                column_sum: sum,
            });
        }
    }
    let adjacency = support_graph(&total, tolerance::PROB_ZERO);
    let components = strongly_connected_components(&adjacency).len();
    report.irreducible = components == 1;
    if !report.irreducible {
        report
            .violations
            .push(Violation::NotIrreducible { components });
    }
    report
}

/// Directed adjacency lists `from -> to` for entries above `threshold`.
pub(crate) fn support_graph(total: &DMatrix<f64>, threshold: f64) -> Vec<Vec<usize>> {
    let n = total.ncols();
    (0..n)
        .map(|from| (0..n).filter(|&to| total[(to, from)] > threshold).collect())
        .collect()
}

/// Tarjan's algorithm, iterative. Components come out in reverse topological
/// order: a component never has edges into a later one.
pub(crate) fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Unique stationary distribution via power iteration on the lazy chain
/// `(I + T) / 2`, which converges for periodic machines as well.
pub fn stationary_distribution(machine: &Machine) -> Result<StationaryDist> {
    machine.require_valid()?;
    match machine.stationary.get_or_init(|| power_iterate(&machine.total())) {
        Ok(pi) => Ok(pi.clone()),
        Err((iterations, residual)) => Err(Error::NonConvergence {
            iterations: *iterations,
            residual: *residual,
        }),
    }
}

fn power_iterate(total: &DMatrix<f64>) -> std::result::Result<StationaryDist, (usize, f64)> {
    let n = total.ncols();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..tolerance::STATIONARY_MAX_ITER {
        let tv = total * &v;
        residual = (&tv - &v).amax();
        if residual <= tolerance::STATIONARY_TARGET {
            return Ok(finish_stationary(v, total));
        }
        let mut next = (&v + tv) * 0.5;
        let s = next.sum();
        next /= s;
        v = next;
    }
    if residual <= tolerance::STATIONARY_ACCEPT {
        Ok(finish_stationary(v, total))
    } else {
        Err((tolerance::STATIONARY_MAX_ITER, residual))
    }
}

/// Polishes the power-iteration estimate with one linear solve of
/// `(T - I) pi = 0` under normalization, which is nonsingular for
/// irreducible chains.
fn finish_stationary(v: DVector<f64>, total: &DMatrix<f64>) -> StationaryDist {
    let n = v.len();
    let mut a = total - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let v = match a.lu().solve(&rhs) {
        Some(p) if p.iter().all(|&x| x > 0.0) && (total * &p - &p).amax() <= (total * &v - &v).amax() => p,
        _ => v,
    };
    let residual = (total * &v - &v).amax();
    StationaryDist {
        probs: v.iter().copied().collect(),
        residual,
    }
}

/// Unnormalized forward vector `T^(x_t) ... T^(x_1) v`.
pub(crate) fn propagate(machine: &Machine, start: &DVector<f64>, word: &[usize]) -> DVector<f64> {
    word.iter()
        .fold(start.clone(), |v, &x| &machine.transitions[x] * v)
}

/// Probability that the stationary machine emits `word`.
pub fn word_probability(machine: &Machine, word: &Word) -> Result<f64> {
    check_word(machine, word)?;
    let pi = stationary_distribution(machine)?;
    Ok(propagate(machine, &pi.to_vector(), &word.0).sum())
}

pub(crate) fn check_word(machine: &Machine, word: &Word) -> Result<()> {
    match word.0.iter().find(|&&x| x >= machine.num_symbols()) {
        Some(x) => Err(Error::UnknownSymbol(format!("#{x}"))),
        None => Ok(()),
    }
}

/// Exact joint distribution of a length-`t` word and the state after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointWordState {
    pub t: usize,
    pub num_symbols: usize,
    pub num_states: usize,
    /// Row-major: `probs[word_index * num_states + state]`.
    pub probs: Vec<f64>,
}

impl JointWordState {
    pub fn num_words(&self) -> usize {
        self.probs.len() / self.num_states
    }
    pub fn get(&self, word: &Word, state: usize) -> f64 {
        self.probs[word.index(self.num_symbols) * self.num_states + state]
    }
    /// Joint probabilities of all states for one word index.
    pub fn row(&self, word_index: usize) -> &[f64] {
        &self.probs[word_index * self.num_states..(word_index + 1) * self.num_states]
    }
    pub fn word_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks(self.num_states)
            .map(|c| c.iter().sum())
            .collect()
    }
    pub fn state_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_states];
        for row in self.probs.chunks(self.num_states) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Forward vectors `A_w v` for every word of length `t`, indexed by word.
pub(crate) fn forward_table(machine: &Machine, start: &DVector<f64>, t: usize) -> Vec<DVector<f64>> {
    let k = machine.num_symbols();
    let mut level = vec![start.clone()];
    for _ in 0..t {
        let mut next = Vec::with_capacity(level.len() * k);
        for v in &level {
            for tx in &machine.transitions {
                next.push(tx * v);
            }
        }
        level = next;
    }
    level
}

/// Exact `Pr(x_1..x_t, s_t)` by forward filtering over all words of length `t`.
pub fn joint_word_state(machine: &Machine, t: usize, limits: &Limits) -> Result<JointWordState> {
    let n = machine.num_states();
    let k = machine.num_symbols();
    limits.check(tolerance::table_size(k, t, n))?;
    let pi = stationary_distribution(machine)?;
    let table = forward_table(machine, &pi.to_vector(), t);
    let probs = table.iter().flat_map(|v| v.iter().copied()).collect();
    Ok(JointWordState {
        t,
        num_symbols: k,
        num_states: n,
        probs,
    })
}

/// Probabilities of every word of length `t`, indexed by word.
pub fn word_distribution(machine: &Machine, t: usize, limits: &Limits) -> Result<Vec<f64>> {
    limits.check(tolerance::table_size(machine.num_symbols(), t, machine.num_states()))?;
    let pi = stationary_distribution(machine)?;
    Ok(forward_table(machine, &pi.to_vector(), t)
        .iter()
        .map(|v| v.sum())
        .collect())
}

/// Edge-reversed machine generating the time-reversed process.
///
/// Each edge `b -> a` on `x` becomes `a -> b` on `x` with weight
/// `pi_b T^(x)[a][b] / pi_a`, so the result stays column-stochastic.
pub fn time_reverse(machine: &Machine) -> Result<Machine> {
    let pi = stationary_distribution(machine)?;
    let n = machine.num_states();
    let transitions = machine
        .transitions
        .iter()
        .map(|t| DMatrix::from_fn(n, n, |to, from| pi[to] * t[(from, to)] / pi[from]))
        .collect();
    let rev = Machine::new(machine.states.clone(), machine.alphabet.clone(), transitions)?;
    let _ = rev.stationary.set(Ok(pi));
    Ok(rev)
}

/// Successor map `f[s][x]` when the machine is unifilar; `None` marks an
/// unused (state, symbol) pair.
pub type TransitionMap = Vec<Vec<Option<usize>>>;

/// Unifilarity test; returns the successor function on success.
pub fn unifilar_map(machine: &Machine) -> Option<TransitionMap> {
    let n = machine.num_states();
    let mut map = vec![vec![None; machine.num_symbols()]; n];
    for (x, t) in machine.transitions.iter().enumerate() {
        for from in 0..n {
            let targets: Vec<usize> = (0..n).filter(|&to| t[(to, from)] > tolerance::PROB_ZERO).collect();
            match targets.as_slice() {
                [] => {}
                [to] => map[from][x] = Some(*to),
                _ => return None,
            }
        }
    }
    Some(map)
}

/// Co-unifilarity test; returns the predecessor function `g[s'][x]`.
pub fn counifilar_map(machine: &Machine) -> Option<TransitionMap> {
    match counifilar_violation(machine) {
        Some(_) => None,
        None => {
            let n = machine.num_states();
            let mut map = vec![vec![None; machine.num_symbols()]; n];
            for (x, t) in machine.transitions.iter().enumerate() {
                for to in 0..n {
                    map[to][x] = (0..n).find(|&from| t[(to, from)] > tolerance::PROB_ZERO);
                }
            }
            Some(map)
        }
    }
}

/// First `(target, symbol, predecessors)` with two or more predecessors.
pub fn counifilar_violation(machine: &Machine) -> Option<(usize, usize, Vec<usize>)> {
    let n = machine.num_states();
    for to in 0..n {
        for (x, t) in machine.transitions.iter().enumerate() {
            let preds: Vec<usize> = (0..n).filter(|&from| t[(to, from)] > tolerance::PROB_ZERO).collect();
            if preds.len() > 1 {
                return Some((to, x, preds));
            }
        }
    }
    None
}

pub fn is_unifilar(machine: &Machine) -> bool {
    unifilar_map(machine).is_some()
}

pub fn is_counifilar(machine: &Machine) -> bool {
    counifilar_violation(machine).is_none()
}

/// One transition in the JSON machine format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: String,
    pub symbol: String,
    pub to: String,
    pub prob: f64,
}

/// On-disk machine format. Unlisted transitions are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineFile {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub transitions: Vec<Edge>,
}

impl MachineFile {
    /// Builds the (unvalidated) machine; duplicate triples are rejected.
    pub fn into_machine(self) -> Result<Machine> {
        let n = self.states.len();
        let state_ix: HashMap<&str, usize> =
            self.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let symbol_ix: HashMap<&str, usize> =
            self.alphabet.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut mats = vec![DMatrix::zeros(n, n); self.alphabet.len()];
        let mut seen = HashSet::new();
        for (i, e) in self.transitions.iter().enumerate() {
            let ctx = |field: &str, value: &str| {
                Error::Parse(format!("transitions[{i}].{field}: unknown label `{value}`"))
            };
            let from = *state_ix.get(e.from.as_str()).ok_or_else(|| ctx("from", &e.from))?;
            let to = *state_ix.get(e.to.as_str()).ok_or_else(|| ctx("to", &e.to))?;
            let x = *symbol_ix
                .get(e.symbol.as_str())
                .ok_or_else(|| ctx("symbol", &e.symbol))?;
            if !seen.insert((from, x, to)) {
                return Err(Error::Parse(format!(
                    "transitions[{i}]: duplicate triple ({}, {}, {})",
                    e.from, e.symbol, e.to
                )));
            }
            if !e.prob.is_finite() {
                return Err(Error::Parse(format!("transitions[{i}].prob: not finite")));
            }
            mats[x][(to, from)] = e.prob;
        }
        Machine::new(self.states, self.alphabet, mats)
    }

    /// Lists every transition with probability above zero.
    pub fn from_machine(machine: &Machine) -> MachineFile {
        let n = machine.num_states();
        let mut transitions = Vec::new();
        for from in 0..n {
            for (x, t) in machine.transitions.iter().enumerate() {
                for to in 0..n {
                    let p = t[(to, from)];
                    if p != 0.0 {
                        transitions.push(Edge {
                            from: machine.states[from].clone(),
                            symbol: machine.alphabet[x].clone(),
                            to: machine.states[to].clone(),
                            prob: p,
                        });
                    }
                }
            }
        }
        MachineFile {
            states: machine.states.clone(),
            alphabet: machine.alphabet.clone(),
            transitions,
        }
    }
}

impl Machine {
    /// Parses the JSON machine format. The result is not validated.
    pub fn from_json(text: &str) -> Result<Machine> {
        let file: MachineFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_machine()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MachineFile::from_machine(self)).expect("machine serializes")
    }
}

impl Serialize for Machine {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MachineFile::from_machine(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Machine {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MachineFile::deserialize(d)?
            .into_machine()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use approx::assert_abs_diff_eq;

    #[test]
    fn iid_coin_is_valid() {
        let r = validate(&corpus::iid_coin());
        assert!(r.is_valid(), "{r:?}");
    }

    #[test]
    fn substochastic_column_flagged() {
        let m = Machine::new(
            vec!["A".into()],
            vec!["0".into()],
            vec![DMatrix::from_element(1, 1, 0.9)],
        )
        .unwrap();
        let r = validate(&m);
        assert!(matches!(r.violations[0], Violation::NotStochastic { .. }));
        assert!(r.violations[0].to_string().contains("column A not stochastic"));
    }

    #[test]
    fn disconnected_states_flagged() {
        let m = Machine::new(
            vec!["A".into(), "B".into()],
            vec!["0".into()],
            vec![DMatrix::identity(2, 2)],
        )
        .unwrap();
        let r = validate(&m);
        assert!(!r.irreducible);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotIrreducible { components: 2 })));
    }

    #[test]
    fn stationary_examples() {
        let p2 = stationary_distribution(&corpus::period2()).unwrap();
        assert_abs_diff_eq!(p2[0], 0.5, epsilon = 1e-12);
        let gm = stationary_distribution(&corpus::golden_mean()).unwrap();
        // Solve (T - I) pi = 0 with the normalization replacing one row.
        let t = corpus::golden_mean().total();
        let mut a = t - DMatrix::identity(2, 2);
        a.row_mut(1).fill(1.0);
        let oracle = a.lu().solve(&DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(gm[0], oracle[0], epsilon = 1e-12);
        assert_abs_diff_eq!(gm[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(stationary_distribution(&corpus::iid_coin()).unwrap().probs, vec![1.0]);
    }

    #[test]
    fn word_probability_examples() {
        let p2 = corpus::period2();
        assert_abs_diff_eq!(word_probability(&p2, &p2.parse_word("01").unwrap()).unwrap(), 0.5, epsilon = 1e-12);
        let iid = corpus::iid_coin();
        assert_abs_diff_eq!(
            word_probability(&iid, &iid.parse_word("0110").unwrap()).unwrap(),
            1.0 / 16.0,
            epsilon = 1e-15
        );
        let gm = corpus::golden_mean();
        assert_eq!(word_probability(&gm, &gm.parse_word("11").unwrap()).unwrap(), 0.0);
        assert!(matches!(gm.parse_word("2"), Err(Error::UnknownSymbol(_))));
        assert!(matches!(
            word_probability(&gm, &Word(vec![5])),
            Err(Error::UnknownSymbol(_))
        ));
    }

    #[test]
    fn joint_examples() {
        let p2 = corpus::period2();
        let j = joint_word_state(&p2, 1, &Limits::default()).unwrap();
        let one = p2.parse_word("1").unwrap();
        let zero = p2.parse_word("0").unwrap();
        let (a, b) = (p2.state_index("A").unwrap(), p2.state_index("B").unwrap());
        assert_abs_diff_eq!(j.get(&one, b), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(j.get(&zero, a), 0.5, epsilon = 1e-12);
        assert_eq!(j.get(&one, a), 0.0);

        let iid = corpus::iid_coin();
        let j = joint_word_state(&iid, 2, &Limits::default()).unwrap();
        assert!(j.probs.iter().all(|&p| (p - 0.25).abs() < 1e-15));

        let gm = corpus::golden_mean();
        let j = joint_word_state(&gm, 0, &Limits::default()).unwrap();
        assert_abs_diff_eq!(j.probs[0], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn enumeration_cap_reports_required_count() {
        let limits = Limits { enumeration_cap: 100, ..Limits::default() };
        match joint_word_state(&corpus::golden_mean(), 8, &limits) {
            Err(Error::EnumerationCapExceeded { required, cap }) => {
                assert_eq!(required, 512);
                assert_eq!(cap, 100);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn period2_reversal_swaps_edges() {
        let p2 = corpus::period2();
        let r = time_reverse(&p2).unwrap();
        let (a, b) = (0, 1);
        let one = p2.symbol_index("1").unwrap();
        let zero = p2.symbol_index("0").unwrap();
        assert_eq!(r.transition(one)[(a, b)], 1.0);
        assert_eq!(r.transition(zero)[(b, a)], 1.0);
        let rr = time_reverse(&r).unwrap();
        assert!(rr.max_abs_diff(&p2).unwrap() <= 1e-12);
    }

    #[test]
    fn structural_predicates() {
        let gm = corpus::golden_mean();
        assert!(is_unifilar(&gm));
        assert!(!is_counifilar(&gm));
        let (to, x, preds) = counifilar_violation(&gm).unwrap();
        assert_eq!(gm.states()[to], "A");
        assert_eq!(gm.alphabet()[x], "0");
        assert_eq!(preds, vec![0, 1]);
        for m in [corpus::period2(), corpus::iid_coin()] {
            assert!(is_unifilar(&m) && is_counifilar(&m));
        }
        let f = unifilar_map(&corpus::period2()).unwrap();
        assert_eq!(f[0][1], Some(1));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let gm = corpus::golden_mean();
        let back = Machine::from_json(&gm.to_json()).unwrap();
        assert_eq!(back.max_abs_diff(&gm), Some(0.0));
        let dup = r#"{"states":["A"],"alphabet":["0"],"transitions":[
            {"from":"A","symbol":"0","to":"A","prob":0.5},
            {"from":"A","symbol":"0","to":"A","prob":0.5}]}"#;
        assert!(matches!(Machine::from_json(dup), Err(Error::Parse(m)) if m.contains("duplicate")));
        let bad = r#"{"states":["A"],"alphabet":["0"],"transitions":[{"from":"Z","symbol":"0","to":"A","prob":1}]}"#;
        assert!(matches!(Machine::from_json(bad), Err(Error::Parse(m)) if m.contains("transitions[0].from")));
    }
}
