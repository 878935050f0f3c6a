//! Quantum generators: the forward q-machine and its time reverse.

mod construct;
mod overlap;
mod thermo;

use serde::{Deserialize, Serialize};

use crate::machine::{counifilar_map, stationary_distribution, unifilar_map, Machine, MachineFile, Word};
use crate::quantum::linalg::{c, max_abs, CMatrix};
use crate::quantum::{DensityOperator, KrausChannel};
use crate::serial::{from_rows, to_rows};
use crate::tolerance;
use crate::{Error, Result};

pub use construct::{build_qmachine, build_reverse_qmachine};
pub use overlap::{solve_overlaps, OverlapMatrix};
pub use thermo::{
    check_forward_efficiency, check_reverse_efficiency, machine_memory, mcp, qmachine_memory,
    quantum_dissipation, synchronization_stats, CrossCheck, MemoryMetrics, MergedProperty,
    RenyiValue, SyncFit, SyncMethod, SyncOptions, SyncPoint, SyncStats, TheoremVerdict,
    DEFAULT_ALPHAS,
};

/// Real phase per `(symbol, state)`, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseTable {
    phases: Vec<Vec<f64>>,
}

impl PhaseTable {
    pub fn zeros(num_symbols: usize, num_states: usize) -> Self {
        PhaseTable { phases: vec![vec![0.0; num_states]; num_symbols] }
    }

    /// `phases[x][s]`; every entry must be finite.
    pub fn new(phases: Vec<Vec<f64>>) -> Result<Self> {
        if phases.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::Parse("phase table has non-finite entries".into()));
        }
        Ok(PhaseTable { phases })
    }

    pub fn get(&self, x: usize, s: usize) -> f64 {
        self.phases[x][s]
    }

    pub fn negated(&self) -> Self {
        PhaseTable {
            phases: self.phases.iter().map(|r| r.iter().map(|p| -p).collect()).collect(),
        }
    }

    pub(crate) fn check_shape(&self, machine: &Machine) -> Result<()> {
        let (k, n) = (machine.num_symbols(), machine.num_states());
        if self.phases.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: self.phases.len() });
        }
        if let Some(r) = self.phases.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: r.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Forward,
    Reverse,
}

/// A quantum generator built from a classical source machine.
#[derive(Debug, Clone)]
pub struct QMachine {
    kind: Kind,
    source: Machine,
    phases: PhaseTable,
    /// Column `s` is the encoding `|psi_s>`.
    encodings: CMatrix,
    kraus: KrausChannel,
    rho: DensityOperator,
}

impl QMachine {
    pub(crate) fn from_parts(
        kind: Kind,
        source: Machine,
        phases: PhaseTable,
        encodings: CMatrix,
        kraus: KrausChannel,
        rho: DensityOperator,
    ) -> Result<Self> {
        let qm = QMachine { kind, source, phases, encodings, kraus, rho };
        validate_qmachine(&qm)?;
        Ok(qm)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }
    pub fn source(&self) -> &Machine {
        &self.source
    }
    pub fn phases(&self) -> &PhaseTable {
        &self.phases
    }
    pub fn encodings(&self) -> &CMatrix {
        &self.encodings
    }
    pub fn kraus(&self) -> &KrausChannel {
        &self.kraus
    }
    /// Kraus operator for symbol index `x`.
    pub fn kraus_op(&self, x: usize) -> &CMatrix {
        &self.kraus.ops()[x]
    }
    pub fn stationary_state(&self) -> &DensityOperator {
        &self.rho
    }
    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.encodings.nrows()
    }
    /// Gram matrix of the encodings, `<psi_r|psi_s>`.
    pub fn overlap_matrix(&self) -> CMatrix {
        self.encodings.adjoint() * &self.encodings
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("q-machine serializes")
    }

    /// Parses and revalidates every invariant.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Residuals of the q-machine invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantResiduals {
    /// Forward: dynamics relation; reverse: explicit Kraus form.
    pub dynamics: f64,
    pub completeness: f64,
    pub invariance: f64,
    /// Forward: stationary state vs encoding ensemble; reverse: encoding orthonormality.
    pub encoding: f64,
}

impl InvariantResiduals {
    pub fn max(&self) -> f64 {
        self.dynamics.max(self.completeness).max(self.invariance).max(self.encoding)
    }
}

/// Computes all invariant residuals.
pub fn invariant_residuals(qm: &QMachine) -> Result<InvariantResiduals> {
    let m = &qm.source;
    let (n, k, d) = (m.num_states(), m.num_symbols(), qm.dim());
    qm.phases.check_shape(m)?;
    if qm.encodings.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: qm.encodings.ncols() });
    }
    if qm.kraus.ops().len() != k || qm.kraus.d_in() != d || qm.kraus.d_out() != d || qm.rho.dim() != d {
        return Err(Error::InvariantViolation("Kraus or state dimensions disagree with encodings".into()));
    }
    let pi = stationary_distribution(m)?;
    let mut dynamics: f64 = 0.0;
    let encoding;
    match qm.kind {
        Kind::Forward => {
            let f = unifilar_map(m).ok_or(Error::NotUnifilar)?;
            for (s, row) in f.iter().enumerate() {
                for (x, next) in row.iter().enumerate() {
                    let lhs = qm.kraus_op(x) * qm.encodings.column(s);
                    let expected = match *next {
                        Some(t) => {
                            let amp = c(0.0, qm.phases.get(x, s)).exp() * m.transition(x)[(t, s)].sqrt();
                            qm.encodings.column(t) * amp
                        }
                        None => lhs.map(|_| c(0.0, 0.0)),
                    };
                    dynamics = dynamics.max((lhs - expected).camax());
                }
            }
            let ens = (0..n).fold(CMatrix::zeros(d, d), |acc, s| {
                let v = qm.encodings.column(s);
                acc + (v * v.adjoint()) * c(pi[s], 0.0)
            });
            encoding = max_abs(&(ens - qm.rho.matrix()));
        }
        Kind::Reverse => {
            let g = counifilar_map(m).ok_or_else(|| Error::NotReverseEpsilonMachine("not co-unifilar".into()))?;
            for x in 0..k {
                let expected = construct::reverse_kraus(m, &g, &qm.phases, x);
                dynamics = dynamics.max(max_abs(&(qm.kraus_op(x) - expected)));
            }
            encoding = max_abs(&(qm.overlap_matrix() - CMatrix::identity(n, n)));
        }
    }
    let completeness = qm.kraus.completeness_defect(None);
    let invariance = max_abs(&(qm.kraus.apply_matrix(qm.rho.matrix())? - qm.rho.matrix()));
    Ok(InvariantResiduals { dynamics, completeness, invariance, encoding })
}

/// Fails unless every invariant holds within the operator tolerance.
pub fn validate_qmachine(qm: &QMachine) -> Result<InvariantResiduals> {
    let r = invariant_residuals(qm)?;
    let checks = [
        ("dynamics", r.dynamics),
        ("completeness", r.completeness),
        ("invariance", r.invariance),
        ("encoding", r.encoding),
    ];
    for (name, value) in checks {
        if value.is_nan() || value > tolerance::OPERATOR {
            return Err(Error::InvariantViolation(format!("{name} residual {value:e}")));
        }
    }
    Ok(r)
}

/// `K^(x_t) ... K^(x_1)`.
pub(crate) fn word_operator(qm: &QMachine, word: &Word) -> CMatrix {
    let d = qm.dim();
    word.symbols()
        .iter()
        .fold(CMatrix::identity(d, d), |acc, &x| qm.kraus_op(x) * acc)
}

/// `Tr[K^w rho K^w^dagger]`.
pub fn qword_probability(qm: &QMachine, word: &Word) -> Result<f64> {
    crate::machine::check_word(&qm.source, word)?;
    let kw = word_operator(qm, word);
    Ok(crate::quantum::linalg::trace(&(&kw * qm.rho.matrix() * kw.adjoint())).re)
}

#[derive(Serialize, Deserialize)]
struct QMachineFile {
    kind: Kind,
    source: MachineFile,
    phases: PhaseTable,
    encodings: Vec<Vec<[f64; 2]>>,
    kraus: Vec<Vec<Vec<[f64; 2]>>>,
    stationary_state: Vec<Vec<[f64; 2]>>,
}

impl Serialize for QMachine {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QMachineFile {
            kind: self.kind,
            source: MachineFile::from_machine(&self.source),
            phases: self.phases.clone(),
            encodings: to_rows(&self.encodings),
            kraus: self.kraus.ops().iter().map(to_rows).collect(),
            stationary_state: to_rows(self.rho.matrix()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QMachine {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = QMachineFile::deserialize(d)?;
        let build = || -> Result<QMachine> {
            let source = f.source.into_machine()?;
            source.require_valid()?;
            let encodings = from_rows(&f.encodings).map_err(Error::Parse)?;
            let ops = f
                .kraus
                .iter()
                .map(from_rows)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(Error::Parse)?;
            let kraus = KrausChannel::new(ops)?;
            let rho = DensityOperator::new(from_rows(&f.stationary_state).map_err(Error::Parse)?)?;
            QMachine::from_parts(f.kind, source, f.phases, encodings, kraus, rho)
        };
        build().map_err(D::Error::custom)
    }
}
