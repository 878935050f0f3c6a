//! The analysis report assembled by the `analyze` command.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::equivalence::{forward_epsilon_machine, predictive_partition, retrodictive_partition, reverse_epsilon_machine, PartitionFile};
use crate::info::{classical_dissipation, classify_efficiency, entropy_rate, DissipationTrace, EfficiencyVerdict, EntropyRate, BOLTZMANN};
use crate::machine::{is_counifilar, is_unifilar, validate, Machine, ValidationReport};
use crate::qmachine::{
    build_qmachine, build_reverse_qmachine, check_forward_efficiency, check_reverse_efficiency,
    machine_memory, qmachine_memory, quantum_dissipation, Kind, MemoryMetrics, PhaseTable, QMachine,
    TheoremVerdict, DEFAULT_ALPHAS,
};
use crate::quantum::{cq_mlcm, CQEnsemble, DensityOperator};
use crate::tolerance::{self, Limits};
use crate::Result;

/// Either a computed section or the reason it is missing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Section<T> {
    Computed(T),
    Unavailable { reason: String },
}

impl<T> Section<T> {
    pub fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Section::Computed(v),
            Err(e) => Section::Unavailable { reason: e.to_string() },
        }
    }

    pub fn computed(&self) -> Option<&T> {
        match self {
            Section::Computed(v) => Some(v),
            Section::Unavailable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MachineSummary {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Structure {
    pub unifilar: bool,
    pub counifilar: bool,
    pub retrodictive_partition: PartitionFile,
    pub predictive_partition: PartitionFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalSection {
    pub verdict: EfficiencyVerdict,
    pub dissipation: DissipationTrace,
    /// Dissipation at or below this counts as zero.
    pub dissipation_tolerance: f64,
    pub entropy_rate: EntropyRate,
    pub memory: MemoryMetrics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlcmSummary {
    pub block_dims: Vec<usize>,
    pub min_gap: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumSection {
    /// States of the epsilon-machine the q-machine was built from.
    pub source_states: Vec<String>,
    pub dimension: usize,
    pub verdict: TheoremVerdict,
    pub dissipation: DissipationTrace,
    pub dissipation_tolerance: f64,
    pub memory: MemoryMetrics,
    pub classical_memory: MemoryMetrics,
    /// `H[pi] - S(rho_pi)` in bits.
    pub compression: f64,
    /// Block structure of the one-symbol word-state ensemble.
    pub mlcm: Section<MlcmSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    pub tool_version: String,
    pub t_max: usize,
    pub seed: u64,
    pub enumeration_cap: usize,
    pub belief_cap: usize,
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub machine: MachineSummary,
    pub validation: ValidationReport,
    pub structure: Option<Structure>,
    pub classical: Option<Section<ClassicalSection>>,
    pub forward_quantum: Option<Section<QuantumSection>>,
    pub reverse_quantum: Option<Section<QuantumSection>>,
    pub provenance: Provenance,
}

impl AnalysisReport {
    pub fn is_valid(&self) -> bool {
        self.validation.is_valid()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub t_max: usize,
    /// Horizon for the quantum theorem cross-checks.
    pub t_check: usize,
    pub seed: u64,
    pub limits: Limits,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { t_max: 6, t_check: 4, seed: 0, limits: Limits::default() }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn provenance(input: &[u8], options: &AnalysisOptions) -> Provenance {
    Provenance {
        input_sha256: sha256_hex(input),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        t_max: options.t_max,
        seed: options.seed,
        enumeration_cap: options.limits.enumeration_cap,
        belief_cap: options.limits.belief_cap,
        tolerances: tolerance::table().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    }
}

/// Runs the full pipeline. Invalid machines yield a report with only the
/// validation section filled.
pub fn analyze(machine: &Machine, input: &[u8], options: &AnalysisOptions) -> AnalysisReport {
    let validation = validate(machine);
    let mut report = AnalysisReport {
        machine: MachineSummary { states: machine.states().to_vec(), alphabet: machine.alphabet().to_vec() },
        validation,
        structure: None,
        classical: None,
        forward_quantum: None,
        reverse_quantum: None,
        provenance: provenance(input, options),
    };
    if !report.validation.is_valid() {
        return report;
    }
    let limits = &options.limits;
    report.structure = (|| -> Result<Structure> {
        Ok(Structure {
            unifilar: is_unifilar(machine),
            counifilar: is_counifilar(machine),
            retrodictive_partition: retrodictive_partition(machine)?.to_labeled(machine.states()),
            predictive_partition: predictive_partition(machine)?.to_labeled(machine.states()),
        })
    })()
    .ok();
    report.classical = Some(Section::from_result((|| {
        Ok(ClassicalSection {
            verdict: classify_efficiency(machine)?,
            dissipation: classical_dissipation(machine, options.t_max, limits)?,
            dissipation_tolerance: tolerance::DISSIPATION,
            entropy_rate: entropy_rate(machine, limits)?,
            memory: machine_memory(machine, &DEFAULT_ALPHAS)?,
        })
    })()));
    report.forward_quantum = Some(Section::from_result(
        forward_epsilon_machine(machine, limits).and_then(|em| {
            let qm = build_qmachine(&em, &PhaseTable::zeros(em.num_symbols(), em.num_states()))?;
            quantum_section(&qm, options)
        }),
    ));
    report.reverse_quantum = Some(Section::from_result(
        reverse_epsilon_machine(machine, limits).and_then(|em| {
            let qm = build_reverse_qmachine(&em, &PhaseTable::zeros(em.num_symbols(), em.num_states()))?;
            quantum_section(&qm, options)
        }),
    ));
    report
}

/// Verdict, dissipation, memory and MLCM summary of one q-machine.
pub fn quantum_section(qm: &QMachine, options: &AnalysisOptions) -> Result<QuantumSection> {
    let verdict = match qm.kind() {
        Kind::Forward => check_forward_efficiency(qm, options.t_check, &options.limits)?,
        Kind::Reverse => check_reverse_efficiency(qm, options.t_check, &options.limits)?,
    };
    let memory = qmachine_memory(qm, &DEFAULT_ALPHAS)?;
    let classical_memory = machine_memory(qm.source(), &DEFAULT_ALPHAS)?;
    Ok(QuantumSection {
        source_states: qm.source().states().to_vec(),
        dimension: qm.dim(),
        verdict,
        dissipation: quantum_dissipation(qm, options.t_max, &options.limits)?,
        dissipation_tolerance: tolerance::DISSIPATION,
        compression: classical_memory.entropy - memory.entropy,
        memory,
        classical_memory,
        mlcm: Section::from_result(word_state_mlcm(qm, options.seed)),
    })
}

fn word_state_mlcm(qm: &QMachine, seed: u64) -> Result<MlcmSummary> {
    let rho = qm.stationary_state().matrix();
    let mut members = Vec::new();
    for k in qm.kraus().ops() {
        let out = k * rho * k.adjoint();
        let p = crate::quantum::linalg::trace(&out).re;
        if p > tolerance::PROB_ZERO {
            members.push((p, DensityOperator::new(out / crate::quantum::linalg::c(p, 0.0))?));
        }
    }
    let total: f64 = members.iter().map(|m| m.0).sum();
    for m in members.iter_mut() {
        m.0 /= total;
    }
    let m = cq_mlcm(&CQEnsemble::new(members)?, seed)?;
    Ok(MlcmSummary {
        block_dims: m.partition.blocks().iter().map(|b| b.len()).collect(),
        min_gap: m.min_gap,
        seed,
    })
}

fn trace_lines(out: &mut String, trace: &DissipationTrace, temperature: Option<f64>) {
    let joules = temperature.map(|t| trace.in_joules(t));
    for (i, r) in trace.records.iter().enumerate() {
        let _ = write!(
            out,
            "    t={:<2} I_before={:.9} I_after={:.9} dS={:.3e} bits",
            r.t, r.info_before, r.info_after, r.dissipation
        );
        if let Some(j) = &joules {
            let _ = write!(out, " ({:.3e} J)", j[i]);
        }
        out.push('\n');
    }
}

fn quantum_text(out: &mut String, title: &str, section: &Option<Section<QuantumSection>>, temperature: Option<f64>) {
    match section {
        Some(Section::Computed(q)) => {
            let _ = writeln!(out, "{title}: {}", if q.verdict.efficient { "efficient" } else { "inefficient" });
            let _ = writeln!(
                out,
                "  dimension {}  S(rho) = {:.6}  H[pi] = {:.6}  compression = {:.6} bits",
                q.dimension, q.memory.entropy, q.classical_memory.entropy, q.compression
            );
            let _ = writeln!(
                out,
                "  MCP trivially maximal: {}  merged machine {:?}: {}",
                q.verdict.mcp_trivially_maximal, q.verdict.merged_property, q.verdict.merged_property_holds
            );
            trace_lines(out, &q.dissipation, temperature);
        }
        Some(Section::Unavailable { reason }) => {
            let _ = writeln!(out, "{title}: unavailable ({reason})");
        }
        None => {}
    }
}

/// Text rendering of a single q-machine section.
pub fn render_quantum_text(title: &str, section: &QuantumSection, temperature: Option<f64>) -> String {
    let mut out = String::new();
    quantum_text(&mut out, title, &Some(Section::Computed(section.clone())), temperature);
    out
}

/// Human-readable rendering. Dissipation is shown in bits and, when a
/// temperature in kelvin is given, in joules via `k_B T ln 2`.
pub fn render_text(report: &AnalysisReport, temperature: Option<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "machine: {} states {:?}, alphabet {:?}",
        report.machine.states.len(),
        report.machine.states,
        report.machine.alphabet
    );
    if !report.validation.is_valid() {
        out.push_str("validation: FAILED\n");
        for v in &report.validation.violations {
            let _ = writeln!(out, "  - {v}");
        }
        return out;
    }
    out.push_str("validation: ok\n");
    if let Some(s) = &report.structure {
        let _ = writeln!(out, "unifilar: {}  co-unifilar: {}", s.unifilar, s.counifilar);
        let _ = writeln!(out, "retrodictive partition: {:?}", s.retrodictive_partition.blocks);
        let _ = writeln!(out, "predictive partition: {:?}", s.predictive_partition.blocks);
    }
    match &report.classical {
        Some(Section::Computed(c)) => {
            let _ = writeln!(
                out,
                "classical: {}  (entropy rate {:.9} bits/symbol, H[pi] = {:.6} bits)",
                if c.verdict.efficient { "efficient" } else { "inefficient" },
                c.entropy_rate.bits_per_symbol,
                c.memory.entropy
            );
            trace_lines(&mut out, &c.dissipation, temperature);
        }
        Some(Section::Unavailable { reason }) => {
            let _ = writeln!(out, "classical: unavailable ({reason})");
        }
        None => {}
    }
    quantum_text(&mut out, "forward q-machine", &report.forward_quantum, temperature);
    quantum_text(&mut out, "reverse q-machine", &report.reverse_quantum, temperature);
    let _ = writeln!(
        out,
        "input sha256 {}  version {}  seed {}",
        report.provenance.input_sha256, report.provenance.tool_version, report.provenance.seed
    );
    if let Some(t) = temperature {
        let _ = writeln!(out, "k_B T ln 2 at {t} K = {:.6e} J", BOLTZMANN * t * std::f64::consts::LN_2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn golden_mean_report() {
        let gm = corpus::golden_mean();
        let r = analyze(&gm, gm.to_json().as_bytes(), &AnalysisOptions::default());
        let c = r.classical.as_ref().unwrap().computed().unwrap();
        assert!(!c.verdict.efficient);
        assert!(c.dissipation.max_dissipation() > 1e-6);
        let f = r.forward_quantum.as_ref().unwrap().computed().unwrap();
        assert_eq!(f.dimension, 2);
        assert!(f.compression > 0.0);
        let text = render_text(&r, Some(300.0));
        assert!(text.contains("classical: inefficient"));
        assert!(text.contains(" J)"));
    }

    #[test]
    fn report_round_trips() {
        let p2 = corpus::period2();
        let r = analyze(&p2, b"x", &AnalysisOptions::default());
        let json = serde_json::to_string(&r).unwrap();
        let back: AnalysisReport = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
