//! Block decomposition of a classical-quantum ensemble.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{c, eigh, CMatrix};
use super::state::CQEnsemble;
use crate::equivalence::Partition;
use crate::tolerance;
use crate::{Error, Result};

const RETRIES: usize = 5;
/// Relative eigenvalue separation required of the generic combination.
const GAP: f64 = 1e-8;
/// At most this many anticommutator terms join the generic combination.
const MAX_ANTICOMMUTATORS: usize = 16;

/// Finest orthogonal block decomposition shared by all ensemble members.
#[derive(Debug, Clone)]
pub struct Mlcm {
    /// Orthonormal columns; blocks index into them.
    pub basis: CMatrix,
    pub partition: Partition,
    /// Smallest relative eigenvalue gap of the accepted combination.
    pub min_gap: f64,
    /// Columns spanning the common kernel of all members, if any; they are
    /// reported as one block.
    pub kernel: Vec<usize>,
}

impl Mlcm {
    /// Orthogonal projector onto each block.
    pub fn projectors(&self) -> Vec<CMatrix> {
        self.partition
            .blocks()
            .iter()
            .map(|b| {
                let d = self.basis.nrows();
                b.iter().fold(CMatrix::zeros(d, d), |acc, &i| {
                    let v = self.basis.column(i);
                    acc + v * v.adjoint()
                })
            })
            .collect()
    }
}

/// Block decomposition via the eigenbasis of a random positive combination
/// of the members (plus anticommutators); blocks are the connected
/// components of the members' off-diagonal couplings in that basis.
pub fn cq_mlcm(ensemble: &CQEnsemble, seed: u64) -> Result<Mlcm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members: Vec<&CMatrix> = ensemble
        .members()
        .iter()
        .filter(|(p, _)| *p > 0.0)
        .map(|(_, r)| r.matrix())
        .collect();
    let d = ensemble.dim();
    let mut best_gap = 0.0;
    for _ in 0..RETRIES {
        let mut h = CMatrix::zeros(d, d);
        for m in &members {
            h += *m * c(rng.random_range(0.5..1.5), 0.0);
        }
        let mut terms = 0;
        'pairs: for i in 0..members.len() {
            for j in i + 1..members.len() {
                if terms == MAX_ANTICOMMUTATORS {
                    break 'pairs;
                }
                let w = c(rng.random_range(0.5..1.5), 0.0);
                h += (members[i] * members[j] + members[j] * members[i]) * w;
                terms += 1;
            }
        }
        let (values, basis) = eigh(&h);
        let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let kernel: Vec<usize> = (0..d).filter(|&i| values[i].abs() <= GAP * scale).collect();
        let live: Vec<usize> = (0..d).filter(|i| !kernel.contains(i)).collect();
        let gap = live
            .windows(2)
            .map(|w| (values[w[1]] - values[w[0]]) / scale)
            .fold(f64::INFINITY, f64::min);
        if gap <= GAP {
            best_gap = f64::max(best_gap, gap);
            continue;
        }
        let mut edges = Vec::new();
        for m in &members {
            let rotated = basis.adjoint() * *m * &basis;
            for &i in &live {
                for &j in &live {
                    if i < j && rotated[(i, j)].norm() > tolerance::COUPLING {
                        edges.push((i, j));
                    }
                }
            }
        }
        if kernel.len() > 1 {
            edges.extend(kernel.windows(2).map(|w| (w[0], w[1])));
        }
        return Ok(Mlcm {
            basis,
            partition: Partition::from_edges(d, edges),
            min_gap: if gap.is_finite() { gap } else { 1.0 },
            kernel,
        });
    }
    Err(Error::DegenerateGeneric(best_gap))
}

#[cfg(test)]
mod tests {
    use super::super::linalg::{max_abs, CVector};
    use super::super::state::DensityOperator;
    use super::*;

    fn plus() -> DensityOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityOperator::pure(&CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)])).unwrap()
    }

    #[test]
    fn disjoint_diagonal_members_give_singletons() {
        let ens = CQEnsemble::new(vec![
            (0.2, DensityOperator::basis(3, 0)),
            (0.3, DensityOperator::basis(3, 1)),
            (0.5, DensityOperator::basis(3, 2)),
        ])
        .unwrap();
        let m = cq_mlcm(&ens, 0).unwrap();
        assert!(m.partition.is_trivial());
    }

    #[test]
    fn coherent_member_couples_the_qubit() {
        let ens = CQEnsemble::new(vec![(0.5, DensityOperator::basis(2, 0)), (0.5, plus())]).unwrap();
        let m = cq_mlcm(&ens, 0).unwrap();
        assert_eq!(m.partition.num_blocks(), 1);
    }

    #[test]
    fn blocks_do_not_depend_on_seed() {
        let mut a = CMatrix::zeros(3, 3);
        a.view_mut((0, 0), (2, 2)).copy_from(plus().matrix());
        let r1 = DensityOperator::new(a * c(0.5, 0.0) + DensityOperator::basis(3, 2).matrix() * c(0.5, 0.0)).unwrap();
        let ens = CQEnsemble::new(vec![(0.5, r1), (0.5, DensityOperator::basis(3, 0))]).unwrap();
        let p1 = cq_mlcm(&ens, 1).unwrap().projectors();
        let p2 = cq_mlcm(&ens, 2).unwrap().projectors();
        assert_eq!(p1.len(), 2);
        for p in &p1 {
            assert!(p2.iter().any(|q| max_abs(&(p - q)) < 1e-8));
        }
    }

    #[test]
    fn inherent_degeneracy_is_reported() {
        let ens = CQEnsemble::new(vec![(1.0, DensityOperator::diagonal(&[0.4, 0.4, 0.2]).unwrap())]).unwrap();
        assert!(matches!(cq_mlcm(&ens, 0), Err(Error::DegenerateGeneric(_))));
    }
}
