use serde::{Deserialize, Serialize};

use super::PhaseTable;
use crate::machine::{unifilar_map, Machine, TransitionMap};
use crate::quantum::linalg::{c, hermitian_deviation, CMatrix};
use crate::tolerance;
use crate::{Error, Result};

/// Encoding overlaps `<psi_r|psi_s>` with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    #[serde(with = "crate::serial::cmatrix")]
    pub matrix: CMatrix,
    /// `max |map(Omega) - Omega|` at the returned iterate.
    pub residual: f64,
    pub iterations: usize,
}

impl OverlapMatrix {
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }
}

/// One application of the overlap map
/// `Omega_rs -> sum_x e^{i(phi_xs - phi_xr)} sqrt(T_r T_s) Omega_{f(r,x) f(s,x)}`.
fn overlap_map(machine: &Machine, f: &TransitionMap, phases: &PhaseTable, omega: &CMatrix) -> CMatrix {
    let n = machine.num_states();
    CMatrix::from_fn(n, n, |r, s| {
        (0..machine.num_symbols())
            .filter_map(|x| {
                let (fr, fs) = (f[r][x]?, f[s][x]?);
                let t = machine.transition(x);
                let amp = (t[(fr, r)] * t[(fs, s)]).sqrt();
                let phase = c(0.0, phases.get(x, s) - phases.get(x, r)).exp();
                Some(phase * amp * omega[(fr, fs)])
            })
            .sum()
    })
}

/// Fixed-point iteration of the overlap map from the identity.
pub fn solve_overlaps(machine: &Machine, phases: &PhaseTable) -> Result<OverlapMatrix> {
    machine.require_valid()?;
    phases.check_shape(machine)?;
    let f = unifilar_map(machine).ok_or(Error::NotUnifilar)?;
    let n = machine.num_states();
    let mut omega = CMatrix::identity(n, n);
    let mut step = f64::INFINITY;
    for iterations in 1..=tolerance::OVERLAP_MAX_ITER {
        let next = overlap_map(machine, &f, phases, &omega);
        step = (&next - &omega).iter().map(|z| z.norm()).fold(0.0, f64::max);
        omega = next;
        if step < tolerance::OVERLAP_STEP {
            let residual = (overlap_map(machine, &f, phases, &omega) - &omega)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if residual > tolerance::OVERLAP_RESIDUAL {
                return Err(Error::NonConvergence { iterations, residual });
            }
            return Ok(OverlapMatrix { matrix: omega, residual, iterations });
        }
    }
    Err(Error::NonConvergence { iterations: tolerance::OVERLAP_MAX_ITER, residual: step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn overlap_examples() {
        let gm = corpus::golden_mean();
        let o = solve_overlaps(&gm, &PhaseTable::zeros(2, 2)).unwrap();
        assert!((o.matrix[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((o.matrix[(0, 1)].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(o.residual <= 1e-12);
        let p2 = solve_overlaps(&corpus::period2(), &PhaseTable::zeros(2, 2)).unwrap();
        assert_eq!(p2.matrix[(0, 1)].norm(), 0.0);
        let rgm = crate::machine::time_reverse(&gm).unwrap();
        assert!(matches!(solve_overlaps(&rgm, &PhaseTable::zeros(2, 2)), Err(Error::NotUnifilar)));
    }

    #[test]
    fn phases_rotate_overlaps() {
        let gm = corpus::golden_mean();
        let phases = PhaseTable::new(vec![vec![0.0, 0.7], vec![0.0, 0.0]]).unwrap();
        let o = solve_overlaps(&gm, &phases).unwrap();
        // Omega_AB = e^{i(phi_0B - phi_0A)} sqrt(1/2) Omega_AA.
        let expected = c(0.0, 0.7).exp() * std::f64::consts::FRAC_1_SQRT_2;
        assert!((o.matrix[(0, 1)] - expected).norm() < 1e-12);
        assert!(o.hermitian_deviation() < 1e-12);
    }
}
