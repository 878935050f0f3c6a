//! One test per acceptance criterion; each prints a single PASS/FAIL line.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ratchetlab::corpus;
use ratchetlab::equivalence::{forward_epsilon_machine, reverse_epsilon_machine};
use ratchetlab::info::{block_entropy, classical_dissipation, classify_efficiency, shannon_entropy, unifilar_entropy_rate};
use ratchetlab::machine::{is_counifilar, is_unifilar, stationary_distribution, time_reverse, word_distribution, Machine, Word};
use ratchetlab::qmachine::{
    build_qmachine, build_reverse_qmachine, check_forward_efficiency, check_reverse_efficiency, qword_probability,
    quantum_dissipation, solve_overlaps, synchronization_stats, Kind, PhaseTable, QMachine, SyncOptions,
};
use ratchetlab::quantum::linalg::CMatrix;
use ratchetlab::quantum::{
    dpi_saturation_check, fidelity, petz_recovery, relative_entropy, von_neumann_entropy, DensityOperator,
    KrausChannel,
};
use ratchetlab::Limits;

fn report(n: usize, pass: bool, detail: String) {
    println!("criterion {n}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn named_corpus() -> Vec<(String, Machine)> {
    let mut out = vec![
        ("iid".to_string(), corpus::iid_coin()),
        ("period2".to_string(), corpus::period2()),
        ("period3".to_string(), corpus::period3()),
        ("golden_mean".to_string(), corpus::golden_mean()),
        ("even".to_string(), corpus::even_process()),
    ];
    for seed in 0..20u64 {
        out.push((format!("random{seed}"), corpus::random_machine(seed, 3 + (seed as usize % 2), 2)));
    }
    for seed in 0..10u64 {
        out.push((format!("counifilar{seed}"), corpus::random_counifilar(100 + seed, 3 + (seed as usize % 2), 2)));
    }
    out
}

fn zeros(m: &Machine) -> PhaseTable {
    PhaseTable::zeros(m.num_symbols(), m.num_states())
}

/// Forward and reverse q-machines for every corpus machine whose epsilon-machines
/// exist and whose builder accepts them, plus the reasons for the rest.
fn corpus_qmachines() -> (Vec<(String, Machine, QMachine)>, Vec<String>) {
    let limits = Limits::default();
    let (mut out, mut skipped) = (Vec::new(), Vec::new());
    for (name, m) in named_corpus() {
        let forward = forward_epsilon_machine(&m, &limits).and_then(|em| build_qmachine(&em, &zeros(&em)));
        let reverse = reverse_epsilon_machine(&m, &limits).and_then(|em| build_reverse_qmachine(&em, &zeros(&em)));
        for (kind, built) in [("forward", forward), ("reverse", reverse)] {
            match built {
                Ok(qm) => out.push((format!("{name}/{kind}"), m.clone(), qm)),
                Err(e) => skipped.push(format!("{name}/{kind}: {e}")),
            }
        }
    }
    (out, skipped)
}

fn summarize_skips(skipped: &[String]) -> String {
    let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
    for s in skipped {
        let reason = s.split_once(": ").map_or(s.as_str(), |x| x.1);
        let key: String = reason.split(|c: char| c.is_ascii_digit()).next().unwrap_or("").trim().to_string();
        *counts.entry(key).or_default() += 1;
    }
    format!("{} skipped {:?}", skipped.len(), counts)
}

fn all_words(num_symbols: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        for i in 0..num_symbols.pow(len as u32) {
            out.push(Word::from_index(i, len, num_symbols));
        }
    }
    out
}

#[test]
fn criterion_1_classical_efficiency_equivalence() {
    let start = Instant::now();
    let limits = Limits::default();
    let mut mismatches = Vec::new();
    let mut efficient = 0;
    let corpus = named_corpus();
    for (name, m) in &corpus {
        let verdict = classify_efficiency(m).unwrap();
        let trace = classical_dissipation(m, 6, &limits).unwrap();
        let numeric = trace.max_dissipation() <= 1e-9;
        if verdict.efficient != numeric {
            mismatches.push(format!("{name} (structural {}, max dS {:.3e})", verdict.efficient, trace.max_dissipation()));
        }
        efficient += verdict.efficient as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        mismatches.is_empty() && secs < 60.0,
        format!(
            "{} machines, {efficient} efficient, {} mismatches {:?}, {secs:.2}s",
            corpus.len(),
            mismatches.len(),
            mismatches
        ),
    );
}

#[test]
fn criterion_2_qmachine_process_fidelity() {
    let (qms, skipped) = corpus_qmachines();
    let mut worst: f64 = 0.0;
    let mut worst_name = String::new();
    for (name, source, qm) in &qms {
        for w in all_words(source.num_symbols(), 8) {
            let classical = ratchetlab::machine::word_probability(source, &w).unwrap();
            let err = (qword_probability(qm, &w).unwrap() - classical).abs();
            if err > worst {
                worst = err;
                worst_name = name.clone();
            }
        }
    }
    let forward = qms.iter().filter(|q| q.2.kind() == Kind::Forward).count();
    report(
        2,
        worst <= 1e-9 && !qms.is_empty(),
        format!(
            "{} q-machines ({forward} forward, {} reverse), max |dP| = {worst:.2e} ({worst_name}); {}",
            qms.len(),
            qms.len() - forward,
            summarize_skips(&skipped)
        ),
    );
}

#[test]
fn criterion_3_overlap_solver() {
    let limits = Limits::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (_, m) in named_corpus() {
        if let Ok(em) = forward_epsilon_machine(&m, &limits) {
            worst = worst.max(solve_overlaps(&em, &zeros(&em)).unwrap().residual);
            count += 1;
        }
    }
    let gm = corpus::golden_mean();
    let omega = solve_overlaps(&gm, &zeros(&gm)).unwrap().matrix;
    let ab_err = (omega[(0, 1)] - Complex64::new(1.0 / 2f64.sqrt(), 0.0)).norm();
    report(
        3,
        worst <= 1e-12 && ab_err <= 1e-12,
        format!("{count} epsilon-machines, max residual {worst:.2e}, |Omega_AB - 1/sqrt2| = {ab_err:.2e}"),
    );
}

#[test]
fn criterion_4_compression_efficiency_exclusivity() {
    let limits = Limits::default();
    let mut violations = Vec::new();
    let (mut compressed, mut efficient) = (0, 0);
    for (name, _, qm) in corpus_qmachines().0 {
        let h_pi = shannon_entropy(stationary_distribution(qm.source()).unwrap().as_slice()).unwrap();
        let s_rho = von_neumann_entropy(qm.stationary_state());
        let max_ds = quantum_dissipation(&qm, 4, &limits).unwrap().max_dissipation();
        if s_rho < h_pi - 1e-6 {
            compressed += 1;
            if max_ds <= 1e-6 {
                violations.push(format!("{name}: compressed but max dS {max_ds:.2e}"));
            }
        }
        let verdict = match qm.kind() {
            Kind::Forward => check_forward_efficiency(&qm, 4, &limits).unwrap(),
            Kind::Reverse => check_reverse_efficiency(&qm, 4, &limits).unwrap(),
        };
        if verdict.efficient {
            efficient += 1;
            if (s_rho - h_pi).abs() > 1e-9 || !verdict.mcp_trivially_maximal {
                violations.push(format!("{name}: efficient but S(rho) - H(pi) = {:.2e}", s_rho - h_pi));
            }
        }
    }
    report(
        4,
        violations.is_empty(),
        format!("{compressed} compressed, {efficient} efficient, violations {violations:?}"),
    );
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    g.qr().q()
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> DensityOperator {
    let g = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityOperator::new(m / tr).unwrap()
}

/// Channel from the first `d_out` rows of blocks of a random isometry.
fn random_channel(rng: &mut ChaCha8Rng, d_in: usize, d_out: usize, kraus: usize) -> KrausChannel {
    let u = random_unitary(rng, d_out * kraus.max(1).max(d_in.div_ceil(d_out)));
    let rows = u.nrows();
    let iso = u.columns(0, d_in).into_owned();
    let ops = (0..rows / d_out).map(|k| iso.rows(k * d_out, d_out).into_owned()).collect();
    KrausChannel::new(ops).unwrap()
}

#[test]
fn criterion_5_quantum_toolbox() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst_dpi: f64 = 0.0;
    let mut worst_fid: f64 = 0.0;
    let mut worst_petz: f64 = 0.0;
    let mut disagreements = 0;
    for _ in 0..200 {
        let d_in = rng.random_range(2..=4);
        let d_out = rng.random_range(2..=4);
        let kraus = rng.random_range(1..=3);
        let channel = random_channel(&mut rng, d_in, d_out, kraus);
        let rho = random_state(&mut rng, d_in);
        let sigma = random_state(&mut rng, d_in);
        let (er, es) = (channel.apply(&rho).unwrap(), channel.apply(&sigma).unwrap());
        worst_dpi = worst_dpi.max(relative_entropy(&er, &es).unwrap() - relative_entropy(&rho, &sigma).unwrap());
        worst_fid = worst_fid.max(fidelity(&rho, &sigma).unwrap() - fidelity(&er, &es).unwrap());
        let petz = petz_recovery(&channel, &sigma).unwrap();
        let back = petz.apply_matrix(es.matrix()).unwrap();
        worst_petz = worst_petz.max((back - sigma.matrix()).camax());
        if dpi_saturation_check(&rho, &sigma, &channel).is_err() {
            disagreements += 1;
        }
    }
    // Saturating instances: unitary channels, and discarding a shared ancilla.
    let mut saturated = 0;
    for i in 0..20 {
        let (rho, sigma, channel) = if i % 2 == 0 {
            let d = 2 + i % 3;
            let u = random_unitary(&mut rng, d);
            (random_state(&mut rng, d), random_state(&mut rng, d), KrausChannel::unitary(u).unwrap())
        } else {
            let tau = random_state(&mut rng, 2);
            let (a, b) = (random_state(&mut rng, 2), random_state(&mut rng, 2));
            let rho = DensityOperator::new(a.matrix().kronecker(tau.matrix())).unwrap();
            let sigma = DensityOperator::new(b.matrix().kronecker(tau.matrix())).unwrap();
            let ops = (0..2)
                .map(|k| {
                    let bra = CMatrix::from_fn(1, 2, |_, j| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0));
                    CMatrix::identity(2, 2).kronecker(&bra)
                })
                .collect();
            (rho, sigma, KrausChannel::new(ops).unwrap())
        };
        match dpi_saturation_check(&rho, &sigma, &channel) {
            Ok(c) if c.saturated && c.recovered => saturated += 1,
            Ok(_) => {}
            Err(_) => disagreements += 1,
        }
    }
    report(
        5,
        worst_dpi <= 1e-9 && worst_fid <= 1e-9 && worst_petz <= 1e-9 && disagreements == 0 && saturated == 20,
        format!(
            "DPI excess {worst_dpi:.2e}, fidelity excess {worst_fid:.2e}, Petz error {worst_petz:.2e}, \
             {disagreements} verdict disagreements, {saturated}/20 saturating detected"
        ),
    );
}

#[test]
fn criterion_6_reversal_algebra() {
    let limits = Limits::default();
    let (mut inv, mut words, mut stat): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (_, m) in named_corpus() {
        let r = time_reverse(&m).unwrap();
        inv = inv.max(time_reverse(&r).unwrap().max_abs_diff(&m).unwrap());
        let (pm, pr) = (stationary_distribution(&m).unwrap(), stationary_distribution(&r).unwrap());
        for i in 0..m.num_states() {
            stat = stat.max((pm[i] - pr[i]).abs());
        }
        for len in 1..=8 {
            let fwd = word_distribution(&m, len, &limits).unwrap();
            let rev = word_distribution(&r, len, &limits).unwrap();
            for (i, p) in fwd.iter().enumerate() {
                let w = Word::from_index(i, len, m.num_symbols()).reversed();
                words = words.max((p - rev[w.index(m.num_symbols())]).abs());
            }
        }
    }
    report(
        6,
        inv <= 1e-12 && words <= 1e-10 && stat <= 1e-10,
        format!("involution {inv:.2e}, reversed words {words:.2e}, stationary {stat:.2e}"),
    );
}

#[test]
fn criterion_7_synchronization_monotone() {
    let limits = Limits::default();
    let mut failures = Vec::new();
    let mut count = 0;
    for (name, _, qm) in corpus_qmachines().0.into_iter().filter(|q| q.2.kind() == Kind::Forward) {
        let stats = synchronization_stats(&qm, 8, &SyncOptions::default(), &limits).unwrap();
        count += 1;
        let curve: Vec<f64> = stats.curve.iter().filter(|p| p.t >= 2).map(|p| p.low_fidelity_mass).collect();
        for (i, pair) in curve.windows(2).enumerate() {
            if pair[1] > pair[0] {
                failures.push(format!("{name}: t={} mass {:.6} > t={} mass {:.6}", i + 3, pair[1], i + 2, pair[0]));
            }
        }
    }
    report(7, failures.is_empty(), format!("{count} forward q-machines, increases {failures:?}"));
}

#[test]
fn criterion_8_entropy_rate_consistency() {
    let limits = Limits::default();
    let mut worst: f64 = 0.0;
    let mut worst_name = String::new();
    let mut count = 0;
    for (name, m) in named_corpus() {
        let Ok(em) = forward_epsilon_machine(&m, &limits) else { continue };
        count += 1;
        let closed = unifilar_entropy_rate(&em).unwrap();
        let diff = block_entropy(&em, 10, &limits).unwrap() - block_entropy(&em, 9, &limits).unwrap();
        if (closed - diff).abs() > worst {
            worst = (closed - diff).abs();
            worst_name = name;
        }
    }
    let iid = unifilar_entropy_rate(&corpus::iid_coin()).unwrap();
    let p2 = unifilar_entropy_rate(&corpus::period2()).unwrap();
    let gm = unifilar_entropy_rate(&corpus::golden_mean()).unwrap();
    let exact = (iid - 1.0).abs() <= 1e-9 && p2.abs() <= 1e-9 && (gm - 2.0 / 3.0).abs() <= 1e-9;
    report(
        8,
        worst <= 1e-6 && exact,
        format!(
            "{count} epsilon-machines, max |h - (H(10) - H(9))| = {worst:.2e} ({worst_name}); \
             IID {iid:.12}, period-2 {p2:.12}, GM {gm:.12}"
        ),
    );
}

#[test]
fn corpus_structure_sanity() {
    for (name, m) in named_corpus() {
        if name.starts_with("counifilar") {
            assert!(is_counifilar(&m), "{name}");
        }
    }
    assert!(is_unifilar(&corpus::even_process()));
}
