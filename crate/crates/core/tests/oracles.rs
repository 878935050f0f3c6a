//! Library results against independent brute-force computations.

use std::collections::HashMap;
use std::hash::Hash;

use nalgebra::DMatrix;
use num_complex::Complex64;

use ratchetlab::corpus;
use ratchetlab::equivalence::{
    ergodic_partition, forward_epsilon_machine, forward_state_channel, merge, retrodictive_partition,
    reverse_epsilon_machine, Partition,
};
use ratchetlab::info::{
    block_entropy, classical_dissipation, classical_local_reversibility_check, classify_efficiency, entropy_rate,
    is_retrodictor, Witness,
};
use ratchetlab::machine::{stationary_distribution, time_reverse, unifilar_map, word_probability, Machine, Word};
use ratchetlab::qmachine::{
    build_qmachine, build_reverse_qmachine, machine_memory, mcp, qmachine_memory, qword_probability,
    quantum_dissipation, solve_overlaps, synchronization_stats, PhaseTable, QMachine, SyncOptions, DEFAULT_ALPHAS,
};
use ratchetlab::quantum::{mutual_information, von_neumann_entropy, CMatrix, DensityOperator};
use ratchetlab::Limits;

fn h<K: Eq + Hash>(dist: &HashMap<K, f64>) -> f64 {
    dist.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

fn marginal<K, J: Eq + Hash>(dist: &HashMap<K, f64>, f: impl Fn(&K) -> J) -> HashMap<J, f64> {
    let mut out = HashMap::new();
    for (k, p) in dist {
        *out.entry(f(k)).or_insert(0.0) += p;
    }
    out
}

/// One explicit path: start state, emitted symbols, visited states.
#[derive(Clone)]
struct Path {
    symbols: Vec<usize>,
    states: Vec<usize>,
    prob: f64,
}

fn paths(m: &Machine, len: usize) -> Vec<Path> {
    let pi = stationary_distribution(m).unwrap();
    let mut out: Vec<Path> = (0..m.num_states())
        .map(|s| Path { symbols: vec![], states: vec![s], prob: pi[s] })
        .collect();
    for _ in 0..len {
        let mut next = Vec::new();
        for p in &out {
            let s = *p.states.last().unwrap();
            for x in 0..m.num_symbols() {
                for t in 0..m.num_states() {
                    let q = m.transition(x)[(t, s)];
                    if q > 0.0 {
                        let mut np = p.clone();
                        np.symbols.push(x);
                        np.states.push(t);
                        np.prob *= q;
                        next.push(np);
                    }
                }
            }
        }
        out = next;
    }
    out
}

/// `(I(S_t : X_1..t), I(S_t+1 X_t+1 : X_1..t))` from explicit paths.
fn dissipation_oracle(m: &Machine, t: usize) -> (f64, f64) {
    let mut joint: HashMap<(Vec<usize>, usize, usize, usize), f64> = HashMap::new();
    for p in paths(m, t + 1) {
        let key = (p.symbols[..t].to_vec(), p.states[t], p.symbols[t], p.states[t + 1]);
        *joint.entry(key).or_insert(0.0) += p.prob;
    }
    let w = marginal(&joint, |k| k.0.clone());
    let s = marginal(&joint, |k| k.1);
    let ws = marginal(&joint, |k| (k.0.clone(), k.1));
    let xs = marginal(&joint, |k| (k.2, k.3));
    let wxs = marginal(&joint, |k| (k.0.clone(), k.2, k.3));
    (h(&w) + h(&s) - h(&ws), h(&w) + h(&xs) - h(&wxs))
}

fn oracle_corpus() -> Vec<(String, Machine)> {
    let mut v = vec![
        ("iid".to_string(), corpus::iid_coin()),
        ("period2".to_string(), corpus::period2()),
        ("period3".to_string(), corpus::period3()),
        ("golden_mean".to_string(), corpus::golden_mean()),
        ("even".to_string(), corpus::even_process()),
        ("duplicated".to_string(), corpus::duplicated_coin()),
    ];
    for seed in 0..4 {
        v.push((format!("random{seed}"), corpus::random_machine(seed, 3, 2)));
        v.push((format!("counifilar{seed}"), corpus::random_counifilar(seed, 3, 2)));
    }
    v
}

#[test]
fn classical_dissipation_matches_path_oracle() {
    let limits = Limits::default();
    for (name, m) in oracle_corpus() {
        let trace = classical_dissipation(&m, 5, &limits).unwrap();
        for rec in &trace.records {
            let (before, after) = dissipation_oracle(&m, rec.t);
            assert!((rec.info_before - before).abs() < 1e-10, "{name} t={}", rec.t);
            assert!((rec.info_after - after).abs() < 1e-10, "{name} t={}", rec.t);
            assert!((rec.dissipation - (before - after)).abs() < 1e-10, "{name} t={}", rec.t);
        }
    }
}

#[test]
fn golden_mean_dissipation_value() {
    // Pr(S_t | past) is a delta on the last symbol, so I(S_t : past) = H[pi];
    // after one more step only the last symbol X_t still carries information.
    let gm = corpus::golden_mean();
    let trace = classical_dissipation(&gm, 6, &Limits::default()).unwrap();
    let h_pi = -(2.0f64 / 3.0) * (2.0f64 / 3.0).log2() - (1.0f64 / 3.0) * (1.0f64 / 3.0).log2();
    let (_, after) = dissipation_oracle(&gm, 6);
    let rec = &trace.records[5];
    assert!((rec.info_before - h_pi).abs() < 1e-12);
    assert!((rec.dissipation - (h_pi - after)).abs() < 1e-10);
    assert!(rec.dissipation > 0.6);
}

#[test]
fn word_probabilities_match_paths() {
    for (name, m) in oracle_corpus() {
        for len in 1..=6 {
            let mut by_word: HashMap<Vec<usize>, f64> = HashMap::new();
            for p in paths(&m, len) {
                *by_word.entry(p.symbols).or_insert(0.0) += p.prob;
            }
            for i in 0..m.num_symbols().pow(len as u32) {
                let w = Word::from_index(i, len, m.num_symbols());
                let expected = by_word.get(w.symbols()).copied().unwrap_or(0.0);
                assert!((word_probability(&m, &w).unwrap() - expected).abs() < 1e-12, "{name}");
            }
        }
    }
}

#[test]
fn block_entropy_matches_paths() {
    let limits = Limits::default();
    for (name, m) in oracle_corpus() {
        for len in 1..=6 {
            let words = marginal(
                &paths(&m, len).into_iter().enumerate().map(|(i, p)| ((i, p.symbols), p.prob)).collect(),
                |k: &(usize, Vec<usize>)| k.1.clone(),
            );
            assert!((block_entropy(&m, len, &limits).unwrap() - h(&words)).abs() < 1e-10, "{name}");
        }
    }
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn projector(dim: usize, i: usize) -> CMatrix {
    let mut p = CMatrix::zeros(dim, dim);
    p[(i, i)] = Complex64::new(1.0, 0.0);
    p
}

/// Quantum mutual informations from the full classical-quantum operators
/// `sum_w |w><w| (x) rho_w` and `sum_w |w><w| (x) sum_x |x><x| (x) K_x rho_w K_x^+`.
fn quantum_oracle(qm: &QMachine, t: usize) -> (f64, f64) {
    let (k, d) = (qm.source().num_symbols(), qm.dim());
    let nw = k.pow(t as u32);
    let mut pre = CMatrix::zeros(nw * d, nw * d);
    let mut post = CMatrix::zeros(nw * k * d, nw * k * d);
    for wi in 0..nw {
        let w = Word::from_index(wi, t, k);
        let mut op = CMatrix::identity(d, d);
        for &x in w.symbols() {
            op = qm.kraus_op(x) * op;
        }
        let rho_w = &op * qm.stationary_state().matrix() * op.adjoint();
        pre += kron(&projector(nw, wi), &rho_w);
        for x in 0..k {
            let out = qm.kraus_op(x) * &rho_w * qm.kraus_op(x).adjoint();
            post += kron(&projector(nw, wi), &kron(&projector(k, x), &out));
        }
    }
    let pre = DensityOperator::new(pre).unwrap();
    let post = DensityOperator::new(post).unwrap();
    (mutual_information(&pre, (nw, d)).unwrap(), mutual_information(&post, (nw, k * d)).unwrap())
}

fn zeros(m: &Machine) -> PhaseTable {
    PhaseTable::zeros(m.num_symbols(), m.num_states())
}

#[test]
fn quantum_dissipation_matches_joint_operator() {
    let limits = Limits::default();
    let mut machines = vec![corpus::golden_mean(), corpus::even_process(), corpus::period3(), corpus::iid_coin()];
    machines.push(corpus::random_unifilar(5, 3, 2));
    for m in machines {
        let em = forward_epsilon_machine(&m, &limits).unwrap();
        let fwd = build_qmachine(&em, &zeros(&em)).unwrap();
        let rem = reverse_epsilon_machine(&m, &limits).unwrap();
        let rev = build_reverse_qmachine(&rem, &zeros(&rem)).unwrap();
        for qm in [fwd, rev] {
            let trace = quantum_dissipation(&qm, 3, &limits).unwrap();
            for rec in &trace.records {
                let (before, after) = quantum_oracle(&qm, rec.t);
                assert!((rec.info_before - before).abs() < 1e-9, "t={} {} vs {}", rec.t, rec.info_before, before);
                assert!((rec.info_after - after).abs() < 1e-9, "t={}", rec.t);
            }
        }
    }
}

#[test]
fn golden_mean_qmachine_spectrum() {
    // Weighted Gram matrix [[2/3, 1/3], [1/3, 1/3]] has eigenvalues (1 +- sqrt(5)/3) / 2.
    let gm = corpus::golden_mean();
    let qm = build_qmachine(&gm, &zeros(&gm)).unwrap();
    assert_eq!(qm.dim(), 2);
    let l = [(1.0 + 5f64.sqrt() / 3.0) / 2.0, (1.0 - 5f64.sqrt() / 3.0) / 2.0];
    let s_expected: f64 = l.iter().map(|p| -p * p.log2()).sum();
    assert!((von_neumann_entropy(qm.stationary_state()) - s_expected).abs() < 1e-12);
    let mem = qmachine_memory(&qm, &DEFAULT_ALPHAS).unwrap();
    let classical = machine_memory(&gm, &DEFAULT_ALPHAS).unwrap();
    assert!(mem.entropy < classical.entropy);
    assert!((mem.renyi[0].bits - 1.0).abs() < 1e-12);
    let omega = qm.overlap_matrix();
    assert!((omega[(0, 1)].re - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn qword_probability_examples() {
    let gm = corpus::golden_mean();
    let qm = build_qmachine(&gm, &zeros(&gm)).unwrap();
    assert!(qword_probability(&qm, &gm.parse_word("11").unwrap()).unwrap().abs() < 1e-12);
    let iid = corpus::iid_coin();
    let qm = build_qmachine(&iid, &zeros(&iid)).unwrap();
    assert_eq!(qm.dim(), 1);
    for t in 1..=6 {
        let w = Word::from_index(t * 7 % (1 << t), t, 2);
        assert!((qword_probability(&qm, &w).unwrap() - 0.5f64.powi(t as i32)).abs() < 1e-14);
    }
    let p2 = corpus::period2();
    let qm = build_qmachine(&p2, &zeros(&p2)).unwrap();
    assert!((qword_probability(&qm, &p2.parse_word("0101").unwrap()).unwrap() - 0.5).abs() < 1e-12);
}

/// Zero-phase overlap matrix by plain iteration of the defining recursion.
fn overlap_oracle(m: &Machine) -> DMatrix<f64> {
    let f = unifilar_map(m).unwrap();
    let n = m.num_states();
    let mut omega = DMatrix::identity(n, n);
    for _ in 0..20_000 {
        omega = DMatrix::from_fn(n, n, |r, s| {
            (0..m.num_symbols())
                .filter_map(|x| match (f[r][x], f[s][x]) {
                    (Some(a), Some(b)) => {
                        Some((m.transition(x)[(a, r)] * m.transition(x)[(b, s)]).sqrt() * omega[(a, b)])
                    }
                    _ => None,
                })
                .sum()
        });
    }
    omega
}

#[test]
fn reverse_golden_mean_stationary_state() {
    let limits = Limits::default();
    let rem = reverse_epsilon_machine(&corpus::golden_mean(), &limits).unwrap();
    let qm = build_reverse_qmachine(&rem, &zeros(&rem)).unwrap();
    let tilde = overlap_oracle(&time_reverse(&rem).unwrap());
    let pi = stationary_distribution(&rem).unwrap();
    let rho = qm.stationary_state().matrix();
    for s in 0..2 {
        for r in 0..2 {
            let expected = (pi[s] * pi[r]).sqrt() * tilde[(s, r)];
            assert!((rho[(s, r)] - Complex64::new(expected, 0.0)).norm() < 1e-12);
        }
    }
    assert!(rho[(0, 1)].norm() > 0.1);
    let h_pi: f64 = pi.as_slice().iter().map(|p| -p * p.log2()).sum();
    assert!(von_neumann_entropy(qm.stationary_state()) < h_pi - 1e-3);
}

#[test]
fn overlap_solver_matches_iteration() {
    for m in [corpus::golden_mean(), corpus::even_process(), corpus::random_unifilar(2, 4, 2)] {
        let solved = solve_overlaps(&m, &zeros(&m)).unwrap();
        let oracle = overlap_oracle(&m);
        for r in 0..m.num_states() {
            for s in 0..m.num_states() {
                assert!((solved.matrix[(r, s)].re - oracle[(r, s)]).abs() < 1e-12);
                assert!(solved.matrix[(r, s)].im.abs() < 1e-14);
            }
        }
    }
}

#[test]
fn mcp_agrees_with_ergodic_partition() {
    let limits = Limits::default();
    let mut checked = 0;
    let mut machines = vec![corpus::iid_coin(), corpus::period2(), corpus::period3(), corpus::golden_mean()];
    machines.extend((0..6).map(|seed| corpus::random_counifilar(200 + seed, 3, 2)));
    for m in machines {
        let (Ok(fwd), Ok(rev)) = (forward_epsilon_machine(&m, &limits), reverse_epsilon_machine(&m, &limits)) else {
            continue;
        };
        let Ok(est) = forward_state_channel(&fwd, &rev, 14, &limits) else { continue };
        let lambda = stationary_distribution(&fwd).unwrap();
        let pi = stationary_distribution(&rev).unwrap();
        let ergodic = ergodic_partition(&est.channel, lambda.as_slice(), pi.as_slice()).unwrap();
        let qm = build_reverse_qmachine(&rev, &zeros(&rev)).unwrap();
        assert_eq!(mcp(&qm), ergodic, "{:?}", rev.states());
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} machines synchronized");
}

#[test]
fn efficiency_examples() {
    let p2 = classify_efficiency(&corpus::period2()).unwrap();
    assert!(p2.efficient);
    assert!(matches!(p2.witness, Witness::PredecessorFunction { .. }));
    let gm = classify_efficiency(&corpus::golden_mean()).unwrap();
    assert!(!gm.efficient);
    match gm.witness {
        Witness::Violation { state, symbol, mut predecessors } => {
            predecessors.sort();
            assert_eq!((state.as_str(), symbol.as_str()), ("A", "0"));
            assert_eq!(predecessors, vec!["A".to_string(), "B".to_string()]);
        }
        other => panic!("{other:?}"),
    }
    assert!(classify_efficiency(&corpus::iid_coin()).unwrap().efficient);
}

#[test]
fn merge_of_duplicates_and_golden_mean() {
    let dup = corpus::duplicated_coin();
    let merged = merge(&dup, &retrodictive_partition(&dup).unwrap()).unwrap();
    assert_eq!(merged.num_states(), 1);
    assert!((merged.transition(0)[(0, 0)] - 0.5).abs() < 1e-12);
    // pi-weighted emission: 2/3 (1/2, 1/2) + 1/3 (1, 0).
    let gm = corpus::golden_mean();
    let one = merge(&gm, &Partition::whole(2)).unwrap();
    assert!((one.transition(0)[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
    assert!((one.transition(1)[(0, 0)] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn retrodictor_examples() {
    let limits = Limits::default();
    assert!(is_retrodictor(&corpus::period2(), 6, &limits).unwrap().retrodictor);
    assert!(is_retrodictor(&corpus::iid_coin(), 6, &limits).unwrap().retrodictor);
    let gm = is_retrodictor(&corpus::golden_mean(), 6, &limits).unwrap();
    assert!(!gm.retrodictor && !gm.structural);
}

#[test]
fn entropy_rate_examples() {
    let limits = Limits::default();
    assert!((entropy_rate(&corpus::iid_coin(), &limits).unwrap().bits_per_symbol - 1.0).abs() < 1e-12);
    assert!(entropy_rate(&corpus::period2(), &limits).unwrap().bits_per_symbol.abs() < 1e-12);
    assert!((entropy_rate(&corpus::golden_mean(), &limits).unwrap().bits_per_symbol - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn erasing_a_correlated_bit_is_irreversible() {
    // X and Y perfectly correlated; the channel maps every x to z = 0.
    let joint = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
    let erase = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
    assert!(!classical_local_reversibility_check(&joint, &erase).unwrap());
    assert!(classical_local_reversibility_check(&joint, &DMatrix::identity(2, 2)).unwrap());
}

#[test]
fn even_process_block_entropy_converges_slowly() {
    // H(10) - H(9) from explicit paths stays far from h = 2/3.
    let even = corpus::even_process();
    let words = |len| {
        marginal(
            &paths(&even, len).into_iter().enumerate().map(|(i, p)| ((i, p.symbols), p.prob)).collect(),
            |k: &(usize, Vec<usize>)| k.1.clone(),
        )
    };
    let diff = h(&words(10)) - h(&words(9));
    assert!(diff - 2.0 / 3.0 > 1e-3, "{diff}");
}

#[test]
fn even_process_low_fidelity_mass_jumps_at_seven() {
    // Encodings are orthogonal (Omega_AB = Omega_BA / sqrt 2 = 0), so the fidelity
    // is the largest classical belief. Only 1^t stays unsynchronized: its belief
    // is (1/2, 1/2) with Pr = 1/12 at t = 7 and (2/3, 1/3) at t = 6. The
    // threshold 1 - 0.9^t crosses 1/2 between t = 6 and t = 7.
    let even = corpus::even_process();
    let qm = build_qmachine(&even, &zeros(&even)).unwrap();
    assert!(qm.overlap_matrix()[(0, 1)].norm() < 1e-12);
    let stats = synchronization_stats(&qm, 8, &SyncOptions::default(), &Limits::default()).unwrap();
    assert!(stats.curve[5].low_fidelity_mass.abs() < 1e-12);
    assert!((stats.curve[6].low_fidelity_mass - 1.0 / 12.0).abs() < 1e-12);
}

#[test]
fn golden_mean_synchronization_is_monotone() {
    let gm = corpus::golden_mean();
    let qm = build_qmachine(&gm, &zeros(&gm)).unwrap();
    let stats = synchronization_stats(&qm, 10, &SyncOptions::default(), &Limits::default()).unwrap();
    for pair in stats.curve.windows(2) {
        assert!(pair[1].low_fidelity_mass <= pair[0].low_fidelity_mass);
    }
    let p2 = corpus::period2();
    let qm = build_qmachine(&p2, &zeros(&p2)).unwrap();
    let stats = synchronization_stats(&qm, 6, &SyncOptions::default(), &Limits::default()).unwrap();
    assert!(stats.curve.iter().all(|p| p.low_fidelity_mass == 0.0));
}
