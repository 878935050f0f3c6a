//! Standard machines and seeded random generators for tests and demos.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::machine::{stationary_distribution, validate, Machine};

fn build(states: &[&str], alphabet: &[&str], edges: &[(&str, &str, &str, f64)]) -> Machine {
    Machine::from_edges(states, alphabet, edges).expect("corpus machine is valid")
}

/// Single-state fair coin.
pub fn iid_coin() -> Machine {
    build(&["A"], &["0", "1"], &[("A", "0", "A", 0.5), ("A", "1", "A", 0.5)])
}

/// Biased single-state coin emitting `1` with probability `p`.
pub fn biased_coin(p: f64) -> Machine {
    build(&["A"], &["0", "1"], &[("A", "0", "A", 1.0 - p), ("A", "1", "A", p)])
}

/// `A -1-> B -0-> A`.
pub fn period2() -> Machine {
    build(&["A", "B"], &["0", "1"], &[("A", "1", "B", 1.0), ("B", "0", "A", 1.0)])
}

/// `A -0-> B -1-> C -1-> A`.
pub fn period3() -> Machine {
    build(
        &["A", "B", "C"],
        &["0", "1"],
        &[("A", "0", "B", 1.0), ("B", "1", "C", 1.0), ("C", "1", "A", 1.0)],
    )
}

/// Golden Mean process: no two consecutive `1`s.
pub fn golden_mean() -> Machine {
    build(
        &["A", "B"],
        &["0", "1"],
        &[("A", "0", "A", 0.5), ("A", "1", "B", 0.5), ("B", "0", "A", 1.0)],
    )
}

/// Even process: `1`s come in even-length runs.
pub fn even_process() -> Machine {
    build(
        &["A", "B"],
        &["0", "1"],
        &[("A", "0", "A", 0.5), ("A", "1", "B", 0.5), ("B", "1", "A", 1.0)],
    )
}

/// Fair coin presented with two cloned states that split incoming mass.
pub fn duplicated_coin() -> Machine {
    let mut edges = Vec::new();
    for from in ["A", "B"] {
        for x in ["0", "1"] {
            for to in ["A", "B"] {
                edges.push((from, x, to, 0.25));
            }
        }
    }
    build(&["A", "B"], &["0", "1"], &edges)
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn symbols(k: usize) -> Vec<String> {
    (0..k).map(|i| i.to_string()).collect()
}

/// Accepts a candidate only if it is valid and no state is nearly transient.
fn acceptable(m: &Machine) -> bool {
    validate(m).is_valid()
        && stationary_distribution(m)
            .map(|pi| pi.probs.iter().all(|&p| p > 1e-3))
            .unwrap_or(false)
}

fn weights(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Random irreducible machine; each state has two to four outgoing edges.
pub fn random_machine(seed: u64, num_states: usize, num_symbols: usize) -> Machine {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = num_states;
    let slots = n * num_symbols;
    loop {
        let mut mats = vec![DMatrix::zeros(n, n); num_symbols];
        for from in 0..n {
            let edges = rng.random_range(2..=4usize.min(slots));
            let mut chosen: Vec<usize> = Vec::new();
            while chosen.len() < edges {
                let c = rng.random_range(0..slots);
                if !chosen.contains(&c) {
                    chosen.push(c);
                }
            }
            for (c, w) in chosen.iter().zip(weights(&mut rng, edges)) {
                mats[c % num_symbols][(c / num_symbols, from)] = w;
            }
        }
        let m = Machine::new(labels("S", n), symbols(num_symbols), mats).expect("shape");
        if acceptable(&m) {
            return m;
        }
    }
}

/// Random irreducible co-unifilar machine: each `(to, symbol)` pair has at
/// most one predecessor.
pub fn random_counifilar(seed: u64, num_states: usize, num_symbols: usize) -> Machine {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = num_states;
    loop {
        let mut out_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for to in 0..n {
            for x in 0..num_symbols {
                if rng.random_bool(0.75) {
                    out_edges[rng.random_range(0..n)].push((to, x));
                }
            }
        }
        if out_edges.iter().any(|e| e.is_empty()) {
            continue;
        }
        let mut mats = vec![DMatrix::zeros(n, n); num_symbols];
        for (from, edges) in out_edges.iter().enumerate() {
            for (&(to, x), w) in edges.iter().zip(weights(&mut rng, edges.len())) {
                mats[x][(to, from)] = w;
            }
        }
        let m = Machine::new(labels("S", n), symbols(num_symbols), mats).expect("shape");
        if acceptable(&m) {
            return m;
        }
    }
}

/// Random irreducible unifilar machine: each `(from, symbol)` pair has at most
/// one successor.
pub fn random_unifilar(seed: u64, num_states: usize, num_symbols: usize) -> Machine {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = num_states;
    loop {
        let mut mats = vec![DMatrix::zeros(n, n); num_symbols];
        let mut ok = true;
        for from in 0..n {
            let used: Vec<usize> = (0..num_symbols).filter(|_| rng.random_bool(0.75)).collect();
            if used.is_empty() {
                ok = false;
                break;
            }
            for (&x, w) in used.iter().zip(weights(&mut rng, used.len())) {
                mats[x][(rng.random_range(0..n), from)] = w;
            }
        }
        if !ok {
            continue;
        }
        let m = Machine::new(labels("S", n), symbols(num_symbols), mats).expect("shape");
        if acceptable(&m) {
            return m;
        }
    }
}
