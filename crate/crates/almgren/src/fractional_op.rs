//! Spectral fractional powers of the Dirichlet Laplacian and the weak form
//! of (−Δ)^s u = h u.

use serde::{Deserialize, Serialize};

use crate::eigenbasis::{dirichlet_eigenpairs, CoefficientRole, DomainQuadrature, SpectralFunction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalOrder {
    pub s: f64,
    pub dim: usize,
}

impl FractionalOrder {
    /// Requires s ∈ (0, 1) and N ≥ 2s. N = 2s is allowed (the one-dimensional
    /// half-Laplacian); there the critical exponent is infinite.
    pub fn new(s: f64, dim: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Usage(format!("fractional order {s} outside (0, 1)")));
        }
        if (dim as f64) < 2.0 * s {
            return Err(Error::Config(format!("need N ≥ 2s, got N = {dim}, s = {s}")));
        }
        Ok(FractionalOrder { s, dim })
    }

    /// 2*_s = 2N/(N − 2s), `None` when N = 2s.
    pub fn critical_exponent(&self) -> Option<f64> {
        let n = self.dim as f64;
        let gap = n - 2.0 * self.s;
        if gap <= 0.0 {
            None
        } else {
            Some(2.0 * n / gap)
        }
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Usage(format!("order {s} outside (0, 1]")));
    }
    Ok(())
}

/// Coefficients μ_k^s c_k, tagged as a dual element.
pub fn apply_fractional_laplacian(v: &SpectralFunction, s: f64) -> Result<SpectralFunction> {
    check_order(s)?;
    let mut out = v.clone();
    for (c, m) in out.coeffs.iter_mut().zip(&v.modes) {
        *c *= m.eigenvalue.powf(s);
    }
    out.role = CoefficientRole::Dual;
    Ok(out)
}

/// Duality pairing ⟨(−Δ)^s v₁, v₂⟩.
pub fn riesz_pairing(v1: &SpectralFunction, v2: &SpectralFunction, s: f64) -> Result<f64> {
    v1.check_compatible(v2)?;
    let dual = apply_fractional_laplacian(v1, s)?;
    Ok(dual.coeffs.iter().zip(&v2.coeffs).map(|(a, b)| a * b).sum())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WeakResidual {
    /// max_k |(u, φ_k)_{H^s} − ∫ h u φ_k| / ‖u‖_{L²}.
    pub max_residual: f64,
    pub per_test: Vec<f64>,
    pub quadrature_nodes: usize,
    /// Change of the residual under a refined rule exceeded 1e−10.
    pub flagged: bool,
}

/// Weak-form residual tested against the first `m` Dirichlet eigenfunctions
/// of the domain.
pub fn weak_residual(u: &SpectralFunction, h: &dyn Fn(&[f64]) -> f64, s: f64, m: usize) -> Result<WeakResidual> {
    let tests = dirichlet_eigenpairs(&u.domain, m.max(1))?;
    let all: Vec<_> = tests.iter().chain(&u.modes).cloned().collect();
    weak_residual_with_nodes(u, h, s, m, DomainQuadrature::nodes_for(&all))
}

pub fn weak_residual_with_nodes(
    u: &SpectralFunction,
    h: &dyn Fn(&[f64]) -> f64,
    s: f64,
    m: usize,
    nodes: usize,
) -> Result<WeakResidual> {
    check_order(s)?;
    if m == 0 {
        return Err(Error::Usage("need at least one test function".into()));
    }
    let norm = u.l2_norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("u ≡ 0".into()));
    }
    let tests = dirichlet_eigenpairs(&u.domain, m)?;
    let compute = |n: usize| -> Vec<f64> {
        let q = DomainQuadrature::new(&u.domain, n);
        let hu: Vec<f64> = q.points.iter().map(|p| h(&p[..]) * u.eval(p)).collect();
        tests
            .iter()
            .map(|phi| {
                // (u, φ)_{H^s} picks the matching coefficient
                let lhs: f64 = u
                    .modes
                    .iter()
                    .zip(&u.coeffs)
                    .filter(|(mode, _)| mode.index == phi.index)
                    .map(|(mode, c)| mode.eigenvalue.powf(s) * c)
                    .sum();
                let rhs: f64 = q.points.iter().zip(&q.weights).zip(&hu).map(|((p, w), v)| w * v * phi.eval(p)).sum();
                (lhs - rhs).abs() / norm
            })
            .collect()
    };
    let per_test = compute(nodes);
    let fine = compute(nodes + nodes / 2);
    let max_residual = per_test.iter().copied().fold(0.0, f64::max);
    let fine_max = fine.iter().copied().fold(0.0, f64::max);
    Ok(WeakResidual {
        max_residual,
        per_test,
        quadrature_nodes: nodes,
        flagged: (fine_max - max_residual).abs() > 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::DomainSpec;
    use std::f64::consts::PI;

    fn unit() -> DomainSpec {
        DomainSpec::interval(0.0, 1.0, 1.0, 0.5)
    }

    #[test]
    fn fractional_examples() {
        let phi1 = SpectralFunction::from_coefficients(&unit(), &[1.0, 0.0]).unwrap();
        let a = apply_fractional_laplacian(&phi1, 0.5).unwrap();
        assert!((a.coeffs[0] - PI).abs() < 1e-14);
        assert_eq!(a.role, CoefficientRole::Dual);
        let b = apply_fractional_laplacian(&phi1, 1.0).unwrap();
        assert!((b.coeffs[0] - PI * PI).abs() < 1e-12);
        let v = SpectralFunction::from_coefficients(&unit(), &[1.0, 1.0]).unwrap();
        let c = apply_fractional_laplacian(&v, 0.3).unwrap();
        assert!((c.coeffs[0] - (PI * PI).powf(0.3)).abs() < 1e-13);
        assert!((c.coeffs[1] - (4.0 * PI * PI).powf(0.3)).abs() < 1e-13);
        assert!(apply_fractional_laplacian(&v, 1.5).is_err());
        assert!(apply_fractional_laplacian(&v, 0.0).is_err());
    }

    #[test]
    fn critical_exponent() {
        assert_eq!(FractionalOrder::new(0.5, 1).unwrap().critical_exponent(), None);
        let o = FractionalOrder::new(0.5, 2).unwrap();
        assert!((o.critical_exponent().unwrap() - 4.0).abs() < 1e-15);
        assert!(FractionalOrder::new(0.75, 1).is_err());
    }

    #[test]
    fn weak_residual_examples() {
        let phi1 = SpectralFunction::from_coefficients(&unit(), &[1.0, 0.0, 0.0]).unwrap();
        let r = weak_residual(&phi1, &|_| PI, 0.5, 3).unwrap();
        assert!(r.max_residual < 1e-10);
        let r0 = weak_residual(&phi1, &|_| 0.0, 0.5, 3).unwrap();
        assert!((r0.max_residual - PI).abs() < 1e-12);

        let sq = DomainSpec::rectangle([0.0, 0.0], [1.0, 1.0], [0.5, 0.0], 0.4);
        let u = SpectralFunction::from_indexed(&sq, &[(vec![2, 1], 0.5)]).unwrap();
        let h = (5.0 * PI * PI).sqrt();
        let r = weak_residual(&u, &move |_| h, 0.5, 6).unwrap();
        assert!(r.max_residual < 1e-10);
    }
}
