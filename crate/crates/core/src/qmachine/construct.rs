use super::{Kind, PhaseTable, QMachine};
use crate::equivalence::{predictive_partition, retrodictive_partition};
use crate::machine::{counifilar_map, stationary_distribution, time_reverse, unifilar_map, Machine, TransitionMap};
use crate::quantum::linalg::{c, eigh, CMatrix};
use crate::quantum::{DensityOperator, KrausChannel};
use crate::tolerance;
use crate::{Error, Result};

use super::overlap::solve_overlaps;

/// Forward q-machine of a forward epsilon-machine.
///
/// The weighted Gram matrix `sqrt(pi_r pi_s) Omega_rs = U Lambda U^dagger`
/// fixes the encodings `psi_s = sum_a sqrt(l_a / pi_s) conj(U_sa) |a>` in
/// dimension `d = #{l_a > cutoff}`. Kraus operators act on the encoding span
/// as `K^x psi_s = e^{i phi} sqrt(T^x) psi_f(s,x)`, realized through the
/// right inverse of the encoding matrix.
pub fn build_qmachine(machine: &Machine, phases: &PhaseTable) -> Result<QMachine> {
    machine.require_valid()?;
    let f = unifilar_map(machine).ok_or_else(|| Error::NotEpsilonMachine("not unifilar".into()))?;
    if !predictive_partition(machine)?.is_trivial() {
        return Err(Error::NotEpsilonMachine("states are not predictively distinct".into()));
    }
    let omega = solve_overlaps(machine, phases)?;
    let pi = stationary_distribution(machine)?;
    let n = machine.num_states();
    let gram = CMatrix::from_fn(n, n, |r, s| omega.matrix[(r, s)] * (pi[r] * pi[s]).sqrt());
    let (values, u) = eigh(&gram);
    let kept: Vec<usize> = (0..n).rev().filter(|&a| values[a] > tolerance::SINGULAR_CUTOFF).collect();
    let d = kept.len();

    let psi = CMatrix::from_fn(d, n, |a, s| u[(s, kept[a])].conj() * (values[kept[a]] / pi[s]).sqrt());
    let right_inverse = CMatrix::from_fn(n, d, |s, a| u[(s, kept[a])] * (pi[s] / values[kept[a]]).sqrt());
    let ops = (0..machine.num_symbols())
        .map(|x| forward_kraus(machine, &f, phases, &psi, &right_inverse, x))
        .collect();
    let kraus = KrausChannel::from_ops_unchecked(ops)?;
    let rho = DensityOperator::diagonal(&kept.iter().map(|&a| values[a]).collect::<Vec<_>>())?;
    QMachine::from_parts(Kind::Forward, machine.clone(), phases.clone(), psi, kraus, rho)
}

fn forward_kraus(
    machine: &Machine,
    f: &TransitionMap,
    phases: &PhaseTable,
    psi: &CMatrix,
    right_inverse: &CMatrix,
    x: usize,
) -> CMatrix {
    let (d, n) = psi.shape();
    // Column s: e^{i phi_xs} sqrt(T^x_{f(s,x) s}) psi_{f(s,x)}.
    let image = CMatrix::from_fn(d, n, |a, s| match f[s][x] {
        Some(t) => psi[(a, t)] * c(0.0, phases.get(x, s)).exp() * machine.transition(x)[(t, s)].sqrt(),
        None => c(0.0, 0.0),
    });
    image * right_inverse
}

/// `K^x = sum_a e^{i phi_xa} sqrt(T^x_{a, g(a,x)}) |a><g(a,x)|`.
pub(crate) fn reverse_kraus(machine: &Machine, g: &TransitionMap, phases: &PhaseTable, x: usize) -> CMatrix {
    let n = machine.num_states();
    let mut k = CMatrix::zeros(n, n);
    for a in 0..n {
        if let Some(b) = g[a][x] {
            k[(a, b)] = c(0.0, phases.get(x, a)).exp() * machine.transition(x)[(a, b)].sqrt();
        }
    }
    k
}

/// Reverse q-machine of a reverse epsilon-machine: orthonormal encodings,
/// explicit Kraus operators, and a stationary state built from the overlap
/// matrix of the time-reversed machine under negated phases.
pub fn build_reverse_qmachine(machine: &Machine, phases: &PhaseTable) -> Result<QMachine> {
    machine.require_valid()?;
    phases.check_shape(machine)?;
    let g = counifilar_map(machine).ok_or_else(|| Error::NotReverseEpsilonMachine("not co-unifilar".into()))?;
    if !retrodictive_partition(machine)?.is_trivial() {
        return Err(Error::NotReverseEpsilonMachine("states are not retrodictively distinct".into()));
    }
    let reversed = time_reverse(machine)?;
    let omega = solve_overlaps(&reversed, &phases.negated())?;
    let pi = stationary_distribution(machine)?;
    let n = machine.num_states();
    let rho = DensityOperator::new(CMatrix::from_fn(n, n, |s, r| omega.matrix[(s, r)] * (pi[s] * pi[r]).sqrt()))?;
    let ops = (0..machine.num_symbols())
        .map(|x| reverse_kraus(machine, &g, phases, x))
        .collect();
    let kraus = KrausChannel::new(ops)?;
    QMachine::from_parts(Kind::Reverse, machine.clone(), phases.clone(), CMatrix::identity(n, n), kraus, rho)
}
