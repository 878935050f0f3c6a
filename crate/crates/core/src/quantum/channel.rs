//! Kraus channels, adjoints, Petz recovery and the DPI saturation check.

use serde::{Deserialize, Serialize};

use super::linalg::{c, inv_sqrt_on_support, max_abs, sqrt_psd, support_projector, CMatrix};
use super::state::{relative_entropy, trace_norm_distance, DensityOperator};
use crate::tolerance;
use crate::{Error, Result};

/// Finite list of Kraus operators `K: C^d_in -> C^d_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    d_in: usize,
    d_out: usize,
}

impl KrausChannel {
    /// Validated channel: `sum K^dagger K = I` within the operator tolerance.
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let ch = KrausChannel::from_ops_unchecked(ops)?;
        let defect = ch.completeness_defect(None);
        if defect > tolerance::OPERATOR {
            return Err(Error::NotTracePreserving(defect));
        }
        Ok(ch)
    }

    /// Checks shapes only; used for adjoints and maps that are trace
    /// preserving on a subspace.
    pub fn from_ops_unchecked(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidDistribution("channel has no Kraus operators".into()))?;
        let (d_out, d_in) = first.shape();
        for k in &ops {
            if k.shape() != (d_out, d_in) {
                return Err(Error::DimensionMismatch { expected: d_out * d_in, found: k.nrows() * k.ncols() });
            }
        }
        Ok(KrausChannel { ops, d_in, d_out })
    }

    pub fn identity(d: usize) -> Self {
        KrausChannel { ops: vec![CMatrix::identity(d, d)], d_in: d, d_out: d }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        KrausChannel::new(vec![u])
    }

    /// Complete dephasing in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let ops = (0..d)
            .map(|i| {
                let mut k = CMatrix::zeros(d, d);
                k[(i, i)] = c(1.0, 0.0);
                k
            })
            .collect();
        KrausChannel { ops, d_in: d, d_out: d }
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }
    pub fn d_in(&self) -> usize {
        self.d_in
    }
    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// `max |sum K^dagger K - P|` with `P` the identity unless given.
    pub fn completeness_defect(&self, projector: Option<&CMatrix>) -> f64 {
        let sum = self
            .ops
            .iter()
            .fold(CMatrix::zeros(self.d_in, self.d_in), |acc, k| acc + k.adjoint() * k);
        match projector {
            Some(p) => max_abs(&(sum - p)),
            None => max_abs(&(sum - CMatrix::identity(self.d_in, self.d_in))),
        }
    }

    /// `sum K m K^dagger` for any input-sized matrix.
    pub fn apply_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.d_in || m.ncols() != self.d_in {
            return Err(Error::DimensionMismatch { expected: self.d_in, found: m.nrows() });
        }
        Ok(self
            .ops
            .iter()
            .fold(CMatrix::zeros(self.d_out, self.d_out), |acc, k| acc + k * m * k.adjoint()))
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        DensityOperator::new(self.apply_matrix(rho.matrix())?)
    }

    /// Heisenberg-picture map with Kraus operators `K^dagger`.
    pub fn adjoint(&self) -> KrausChannel {
        KrausChannel {
            ops: self.ops.iter().map(|k| k.adjoint()).collect(),
            d_in: self.d_out,
            d_out: self.d_in,
        }
    }

    /// `after . self`.
    pub fn then(&self, after: &KrausChannel) -> Result<KrausChannel> {
        if after.d_in != self.d_out {
            return Err(Error::DimensionMismatch { expected: self.d_out, found: after.d_in });
        }
        let ops = after
            .ops
            .iter()
            .flat_map(|a| self.ops.iter().map(move |k| a * k))
            .collect();
        Ok(KrausChannel { ops, d_in: self.d_in, d_out: after.d_out })
    }
}

impl Serialize for KrausChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::serial::cmatrix_vec::serialize(&self.ops, s)
    }
}

impl<'de> Deserialize<'de> for KrausChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let ops = crate::serial::cmatrix_vec::deserialize(d)?;
        KrausChannel::new(ops).map_err(serde::de::Error::custom)
    }
}

/// Petz recovery `R_k = sigma^1/2 K_k^dagger E(sigma)^-1/2`, with the inverse
/// taken on the support of `E(sigma)`. The result is trace preserving on that
/// support.
pub fn petz_recovery(channel: &KrausChannel, sigma: &DensityOperator) -> Result<KrausChannel> {
    if sigma.dim() != channel.d_in() {
        return Err(Error::DimensionMismatch { expected: channel.d_in(), found: sigma.dim() });
    }
    let out = channel.apply_matrix(sigma.matrix())?;
    let inv = inv_sqrt_on_support(&out);
    let root = sqrt_psd(sigma.matrix());
    let ops = channel.ops().iter().map(|k| &root * k.adjoint() * &inv).collect();
    let recovery = KrausChannel::from_ops_unchecked(ops)?;
    let defect = recovery.completeness_defect(Some(&support_projector(&out)));
    if defect > tolerance::SUPPORT {
        return Err(Error::SingularOutput(defect));
    }
    Ok(recovery)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpiCheck {
    pub saturated: bool,
    pub recovered: bool,
    /// `D(rho||sigma) - D(E rho || E sigma)`.
    pub relative_entropy_gap: f64,
    /// `|| R(E(rho)) - rho ||_1`.
    pub recovery_error: f64,
}

/// Computes both saturation criteria without asserting agreement.
pub fn dpi_saturation(rho: &DensityOperator, sigma: &DensityOperator, channel: &KrausChannel) -> Result<DpiCheck> {
    let before = relative_entropy(rho, sigma)?;
    if before.is_infinite() {
        return Err(Error::SupportViolation);
    }
    let e_rho = channel.apply(rho)?;
    let e_sigma = channel.apply(sigma)?;
    let after = relative_entropy(&e_rho, &e_sigma)?;
    let recovery = petz_recovery(channel, sigma)?;
    let back = DensityOperator::new(recovery.apply_matrix(e_rho.matrix())?)?;
    let gap = before - after;
    let err = trace_norm_distance(&back, rho)?;
    Ok(DpiCheck {
        saturated: gap.abs() <= tolerance::DPI,
        recovered: err <= tolerance::DPI,
        relative_entropy_gap: gap,
        recovery_error: err,
    })
}

/// Equality in the data processing inequality, decided both by the
/// relative-entropy gap and by Petz recovery; the two must agree.
pub fn dpi_saturation_check(rho: &DensityOperator, sigma: &DensityOperator, channel: &KrausChannel) -> Result<DpiCheck> {
    let r = dpi_saturation(rho, sigma, channel)?;
    if r.saturated != r.recovered {
        return Err(Error::VerdictMismatch(format!(
            "relative entropy gap {:e}, recovery error {:e}",
            r.relative_entropy_gap, r.recovery_error
        )));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::super::linalg::{trace, CVector};
    use super::*;

    fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
    }

    fn plus() -> DensityOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityOperator::pure(&CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)])).unwrap()
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let half = CMatrix::identity(2, 2) * c(0.5, 0.0);
        assert!(matches!(KrausChannel::new(vec![half]), Err(Error::NotTracePreserving(_))));
    }

    #[test]
    fn apply_examples() {
        let rho = plus();
        assert_eq!(KrausChannel::identity(2).apply(&rho).unwrap(), rho);
        let out = KrausChannel::dephasing(2).apply(&rho).unwrap();
        assert!(max_abs(&(out.matrix() - DensityOperator::maximally_mixed(2).matrix())) < 1e-15);
        assert!(matches!(
            KrausChannel::identity(3).apply(&rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn adjoint_duality_on_fixed_probe() {
        let ch = KrausChannel::unitary(hadamard()).unwrap().then(&KrausChannel::dephasing(2)).unwrap();
        let rho = DensityOperator::diagonal(&[0.3, 0.7]).unwrap();
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.2, 0.3), c(0.2, -0.3), c(-0.5, 0.0)]);
        let lhs = trace(&(ch.apply(&rho).unwrap().matrix() * &m));
        let rhs = trace(&(rho.matrix() * ch.adjoint().apply_matrix(&m).unwrap()));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn petz_examples() {
        let deph = KrausChannel::dephasing(2);
        let mixed = DensityOperator::maximally_mixed(2);
        let r = petz_recovery(&deph, &mixed).unwrap();
        let probe = plus();
        let a = r.apply_matrix(probe.matrix()).unwrap();
        let b = deph.apply_matrix(probe.matrix()).unwrap();
        assert!(max_abs(&(a - b)) < 1e-12);

        let u = KrausChannel::unitary(hadamard()).unwrap();
        let sigma = DensityOperator::diagonal(&[0.8, 0.2]).unwrap();
        let r = petz_recovery(&u, &sigma).unwrap();
        assert!(max_abs(&(&r.ops()[0] - hadamard().adjoint())) < 1e-12);
    }

    #[test]
    fn dpi_examples() {
        let u = KrausChannel::unitary(hadamard()).unwrap();
        let rho = plus();
        let rho_mixed = DensityOperator::new(
            rho.matrix() * c(0.9, 0.0) + DensityOperator::maximally_mixed(2).matrix() * c(0.1, 0.0),
        )
        .unwrap();
        let sigma = DensityOperator::maximally_mixed(2);
        let r = dpi_saturation_check(&rho_mixed, &sigma, &u).unwrap();
        assert!(r.saturated && r.recovered);
        let r = dpi_saturation_check(&rho_mixed, &sigma, &KrausChannel::dephasing(2)).unwrap();
        assert!(!r.saturated && !r.recovered);
        assert!(matches!(
            dpi_saturation_check(&sigma, &DensityOperator::basis(2, 0), &u),
            Err(Error::SupportViolation)
        ));
    }
}
