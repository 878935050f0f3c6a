//! Density operators, ensembles and entropic quantities.

use serde::{Deserialize, Serialize};

use super::linalg::{
    self, c, eigenvalues, entropy_of_psd, hermitian_deviation, hermitian_part, log2_on_support,
    partial_trace, sqrt_psd, support_projector, trace, CMatrix, CVector, Keep,
};
use crate::tolerance;
use crate::{Error, Result};

/// Hermitian, positive, unit-trace complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > tolerance::OPERATOR {
            return Err(Error::NotHermitian(dev));
        }
        let matrix = hermitian_part(&matrix);
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > tolerance::OPERATOR {
            return Err(Error::NotUnitTrace(tr));
        }
        let min = eigenvalues(&matrix).first().copied().unwrap_or(0.0);
        if min < -tolerance::OPERATOR {
            return Err(Error::NotPositive(min));
        }
        Ok(DensityOperator { matrix })
    }

    /// `|v><v| / <v|v>`.
    pub fn pure(v: &CVector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::NotUnitTrace(0.0));
        }
        let u = v / c(n, 0.0);
        DensityOperator::new(&u * u.adjoint())
    }

    /// Computational basis state `|i><i|` in dimension `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = c(1.0, 0.0);
        DensityOperator { matrix: m }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        DensityOperator::new(CMatrix::from_fn(d, d, |i, j| if i == j { c(probs[i], 0.0) } else { c(0.0, 0.0) }))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator { matrix: CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues(&self.matrix)
    }

    /// Number of eigenvalues above the singular-value cutoff.
    pub fn rank(&self) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > tolerance::SINGULAR_CUTOFF).count()
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::serial::cmatrix::serialize(&self.matrix, s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = crate::serial::cmatrix::deserialize(d)?;
        DensityOperator::new(m).map_err(serde::de::Error::custom)
    }
}

fn same_dim(a: &DensityOperator, b: &DensityOperator) -> Result<()> {
    if a.dim() != b.dim() {
        Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() })
    } else {
        Ok(())
    }
}

/// `-Tr rho log2 rho` in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_psd(rho.matrix())
}

/// Renyi entropy of order `alpha` in bits; orders 0, 1 and infinity are the
/// analytic limits (log rank, von Neumann, min-entropy).
pub fn renyi_entropy_of_spectrum(spectrum: &[f64], alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    let support: Vec<f64> = spectrum
        .iter()
        .copied()
        .filter(|&l| l > tolerance::SINGULAR_CUTOFF)
        .collect();
    Ok(if alpha == 0.0 {
        (support.len() as f64).log2()
    } else if alpha == 1.0 {
        support.iter().map(|&l| -l * l.log2()).sum()
    } else if alpha.is_infinite() {
        -support.iter().copied().fold(0.0, f64::max).log2()
    } else {
        support.iter().map(|&l| l.powf(alpha)).sum::<f64>().log2() / (1.0 - alpha)
    })
}

pub fn renyi_entropy(rho: &DensityOperator, alpha: f64) -> Result<f64> {
    renyi_entropy_of_spectrum(&rho.eigenvalues(), alpha)
}

/// `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    let s = sqrt_psd(rho.matrix());
    let inner = &s * sigma.matrix() * &s;
    let f = trace(&sqrt_psd(&inner)).re.powi(2);
    Ok(f.clamp(0.0, 1.0))
}

/// `Tr rho (log2 rho - log2 sigma)`, or `+inf` when the support of `rho`
/// is not contained in that of `sigma`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    let d = rho.dim();
    let kernel = CMatrix::identity(d, d) - support_projector(sigma.matrix());
    if trace(&(&kernel * rho.matrix())).re > tolerance::OPERATOR {
        return Ok(f64::INFINITY);
    }
    let cross = trace(&(rho.matrix() * log2_on_support(sigma.matrix()))).re;
    Ok((-von_neumann_entropy(rho) - cross).max(0.0))
}

/// Trace distance `||rho - sigma||_1`.
pub fn trace_norm_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    Ok(linalg::trace_norm_hermitian(&(rho.matrix() - sigma.matrix())))
}

/// `I(A:B) = H(A) + H(B) - H(AB)` for an operator on `C^da (x) C^db`.
pub fn mutual_information(rho_ab: &DensityOperator, dims: (usize, usize)) -> Result<f64> {
    let (da, db) = dims;
    if da * db != rho_ab.dim() {
        return Err(Error::DimensionMismatch { expected: da * db, found: rho_ab.dim() });
    }
    let a = partial_trace(rho_ab.matrix(), da, db, Keep::A);
    let b = partial_trace(rho_ab.matrix(), da, db, Keep::B);
    Ok(entropy_of_psd(&a) + entropy_of_psd(&b) - von_neumann_entropy(rho_ab))
}

/// Weighted family of states sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CQEnsemble {
    members: Vec<(f64, DensityOperator)>,
}

impl CQEnsemble {
    pub fn new(members: Vec<(f64, DensityOperator)>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidDistribution("empty ensemble".into()))?;
        let d = first.1.dim();
        let mut total = 0.0;
        for (p, rho) in &members {
            if *p < 0.0 || p.is_nan() {
                return Err(Error::NegativeProbability(*p));
            }
            if rho.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: rho.dim() });
            }
            total += p;
        }
        if (total - 1.0).abs() > tolerance::OPERATOR {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(CQEnsemble { members })
    }

    pub fn members(&self) -> &[(f64, DensityOperator)] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    pub fn average(&self) -> DensityOperator {
        let d = self.dim();
        let m = self
            .members
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, (p, r)| acc + r.matrix() * c(*p, 0.0));
        DensityOperator { matrix: hermitian_part(&m) }
    }

    /// Block-diagonal operator `sum_x p_x |x><x| (x) rho_x`.
    pub fn cq_state(&self) -> DensityOperator {
        let (k, d) = (self.members.len(), self.dim());
        let mut m = CMatrix::zeros(k * d, k * d);
        for (x, (p, r)) in self.members.iter().enumerate() {
            m.view_mut((x * d, x * d), (d, d)).copy_from(&(r.matrix() * c(*p, 0.0)));
        }
        DensityOperator { matrix: m }
    }
}

/// `H(average) - sum p H(member)`.
pub fn holevo(ensemble: &CQEnsemble) -> f64 {
    von_neumann_entropy(&ensemble.average())
        - ensemble
            .members()
            .iter()
            .map(|(p, r)| p * von_neumann_entropy(r))
            .sum::<f64>()
}
