//! Functional inequalities and integral identities, checked on test fields.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dot, norm, Field, PolyField};
use crate::frequency::{energy, height, height_derivative_surface, unit_ball_measure};
use crate::polynomial::Polynomial;
use crate::quadrature::{Quadrature, QuadratureOrders};
use crate::straightening::CoefficientField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditTag {
    Hardy,
    Poincare,
    SobolevTrace,
    Found,
    Pohozaev,
    DerivativeIdentity,
}

/// A field to audit at one radius.
#[derive(Clone)]
pub struct AuditCase {
    pub field: Arc<dyn Field>,
    pub r: f64,
    pub tolerance: f64,
    pub tag: AuditTag,
}

impl AuditCase {
    pub fn new(field: Arc<dyn Field>, r: f64, tolerance: f64, tag: AuditTag) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::Usage(format!("tolerance must be positive, got {tolerance}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Usage(format!("radius must be positive, got {r}")));
        }
        Ok(AuditCase { field, r, tolerance, tag })
    }

    /// Checks the case against the inequality named by its tag.
    pub fn run(&self, q: &Quadrature, constants: &Constants) -> Result<InequalityCheck> {
        let v = self.field.as_ref();
        let mut c = match self.tag {
            AuditTag::Hardy => hardy_check(v, self.r, q),
            AuditTag::Poincare => poincare_check(v, self.r, q),
            AuditTag::SobolevTrace => sobolev_trace_check(v, self.r, constants.sobolev, q),
            AuditTag::Found => {
                let f = |y: &crate::Point| constants.found_weight.eval(y);
                found_check(v, &f, self.r, constants.epsilon, constants.sobolev, q)
            }
            t => return Err(Error::Usage(format!("{t:?} is an identity, not an inequality"))),
        };
        c.pass = c.lhs <= c.rhs * (1.0 + self.tolerance) + 1e-300;
        Ok(c)
    }
}

/// Constants used by the constant-bearing inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// 𝒮_{N,s}, calibrated and non-normative.
    pub sobolev: f64,
    pub epsilon: f64,
    /// Weight f of the found inequality as a polynomial in (y, t).
    pub found_weight: Polynomial,
}

/// One-sided check lhs ≤ rhs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub tag: AuditTag,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn new(tag: AuditTag, lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            tag,
            lhs,
            rhs,
            pass: lhs <= rhs * (1.0 + 1e-10) + 1e-300,
        }
    }

    /// lhs/rhs, with 0/0 read as 0.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

fn weight_gap(q: &Quadrature) -> f64 {
    q.dim as f64 - 2.0 * q.s
}

/// ∫_{S_r⁺} t^{1−2s} v² dS.
fn surface_l2(v: &dyn Field, r: f64, q: &Quadrature) -> f64 {
    r.powf(q.dim as f64 + 1.0 - 2.0 * q.s) * q.sphere_at(r, |z| v.value(z).powi(2))
}

fn gradient_l2(v: &dyn Field, r: f64, q: &Quadrature) -> f64 {
    q.ball(r, 0.0, |z, _| {
        let (_, g) = v.eval(z);
        dot(&g, &g)
    })
}

/// ∫ t^{1−2s}|∇v|² + ((N−2s)/(2r)) ∫_{S_r⁺} t^{1−2s} v².
fn trace_bracket(v: &dyn Field, r: f64, q: &Quadrature) -> f64 {
    gradient_l2(v, r, q) + weight_gap(q) / (2.0 * r) * surface_l2(v, r, q)
}

/// ((N−2s)/2)² ∫ t^{1−2s} v²/|z|² against ∫ t^{1−2s}(∇v·z/|z|)² plus the
/// boundary term.
pub fn hardy_check(v: &dyn Field, r: f64, q: &Quadrature) -> InequalityCheck {
    let g = weight_gap(q);
    let lhs = (g / 2.0).powi(2) * q.ball(r, -2.0, |z, _| v.value(z).powi(2));
    let radial = q.ball(r, 0.0, |z, th| {
        let (_, gr) = v.eval(z);
        dot(&gr, th).powi(2)
    });
    let rhs = radial + g / (2.0 * r) * surface_l2(v, r, q);
    InequalityCheck::new(AuditTag::Hardy, lhs, rhs)
}

/// ∫ t^{1−2s} v² ≤ (4r/(N−2s)²)(r ∫ t^{1−2s}|∇v|² + ((N−2s)/2) ∫_{S_r⁺} t^{1−2s} v²).
pub fn poincare_check(v: &dyn Field, r: f64, q: &Quadrature) -> InequalityCheck {
    let g = weight_gap(q);
    let lhs = q.ball(r, 0.0, |z, _| v.value(z).powi(2));
    let bracket = r * gradient_l2(v, r, q) + g / 2.0 * surface_l2(v, r, q);
    // N = 2s leaves the constant infinite
    let rhs = if g == 0.0 {
        if bracket > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        4.0 * r / (g * g) * bracket
    };
    InequalityCheck::new(AuditTag::Poincare, lhs, rhs)
}

/// Critical trace exponent 2N/(N−2s).
pub fn critical_exponent(dim: usize, s: f64) -> f64 {
    2.0 * dim as f64 / (dim as f64 - 2.0 * s)
}

/// (∫_{B′_r} |v|^{2*})^{2/2*} ≤ 𝒮 · bracket.
pub fn sobolev_trace_check(v: &dyn Field, r: f64, sobolev: f64, q: &Quadrature) -> InequalityCheck {
    let p = critical_exponent(q.dim, q.s);
    let lhs = q.flat.integrate(r, |y| v.value(y).abs().powf(p)).powf(2.0 / p);
    InequalityCheck::new(AuditTag::SobolevTrace, lhs, sobolev * trace_bracket(v, r, q))
}

/// η_f(r) for a weight f on B′_r.
pub fn eta_f(f: &dyn Fn(&crate::Point) -> f64, r: f64, eps: f64, sobolev: f64, q: &Quadrature) -> f64 {
    let n = q.dim as f64;
    let s = q.s;
    let p = n / (2.0 * s) + eps;
    let lp = q.flat.integrate(r, |y| f(y).abs().powf(p)).powf(1.0 / p);
    sobolev * unit_ball_measure(q.dim).powf(4.0 * s * s * eps / (n * (n + 2.0 * s * eps))) * lp * r.powf(4.0 * s * s * eps / (n + 2.0 * s * eps))
}

/// ∫_{B′_r} f v² ≤ η_f(r) · bracket.
pub fn found_check(v: &dyn Field, f: &dyn Fn(&crate::Point) -> f64, r: f64, eps: f64, sobolev: f64, q: &Quadrature) -> InequalityCheck {
    let lhs = q.flat.integrate(r, |y| f(y) * v.value(y).powi(2));
    InequalityCheck::new(AuditTag::Found, lhs, eta_f(f, r, eps, sobolev, q) * trace_bracket(v, r, q))
}

/// Random polynomial in (y, t), even in t, of degree ≤ `degree`, with
/// coefficients uniform in [−1, 1].
pub fn random_polynomial(rng: &mut ChaCha8Rng, dim: usize, degree: u32) -> Polynomial {
    let mut terms = Vec::new();
    for d in 0..=degree {
        match dim {
            1 => {
                for c in (0..=d).step_by(2) {
                    terms.push(([d - c, c, 0], rng.random_range(-1.0..=1.0)));
                }
            }
            2 => {
                for a in 0..=d {
                    for c in (0..=d - a).step_by(2) {
                        terms.push(([a, d - a - c, c], rng.random_range(-1.0..=1.0)));
                    }
                }
            }
            _ => panic!("dimension must be 1 or 2"),
        }
    }
    Polynomial::from_terms(dim + 1, terms)
}

/// Random weight on the flat ball: a polynomial in y of degree ≤ 2.
fn random_weight(rng: &mut ChaCha8Rng, dim: usize) -> Polynomial {
    let mut terms = Vec::new();
    for d in 0..=2u32 {
        if dim == 1 {
            terms.push(([d, 0, 0], rng.random_range(-1.0..=1.0)));
        } else {
            for a in 0..=d {
                terms.push(([a, d - a, 0], rng.random_range(-1.0..=1.0)));
            }
        }
    }
    Polynomial::from_terms(dim + 1, terms)
}

/// Seeded random test fields with radii in [¼, 1] and found weights.
pub fn random_cases(dim: usize, n: usize, seed: u64) -> Vec<(PolyField, f64, Polynomial)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let p = random_polynomial(&mut rng, dim, 4);
            let r = rng.random_range(0.25..=1.0);
            let f = random_weight(&mut rng, dim);
            (PolyField::new(dim, p), r, f)
        })
        .collect()
}

pub const CALIBRATION_SEED: u64 = 0xA1;
pub const HELD_OUT_SEED: u64 = 0xA2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomAudit {
    pub dim: usize,
    pub s: f64,
    pub cases: usize,
    pub hardy_violations: usize,
    pub poincare_violations: usize,
    pub worst_hardy_ratio: f64,
    pub worst_poincare_ratio: f64,
    /// Smallest 𝒮 passing every calibration case, times the margin.
    pub sobolev_constant: f64,
    pub margin: f64,
    pub sobolev_violations: usize,
    pub sobolev_held_out_violations: usize,
    pub found_violations: usize,
    pub found_held_out_violations: usize,
    pub pass: bool,
}

/// Randomized audit: `n` calibration cases on seed 0xA1 and `n` held-out
/// cases on seed 0xA2.
pub fn random_audit(dim: usize, s: f64, n: usize, margin: f64, orders: QuadratureOrders) -> Result<RandomAudit> {
    if dim as f64 <= 2.0 * s {
        return Err(Error::Usage(format!("the inequalities need N > 2s, got N = {dim}, s = {s}")));
    }
    let q = Quadrature::new(dim, s, orders);
    let eps = 0.5;
    let run = |seed: u64| -> Vec<(InequalityCheck, InequalityCheck, f64, f64, f64)> {
        random_cases(dim, n, seed)
            .par_iter()
            .map(|(v, r, f)| {
                let fw = |y: &crate::Point| f.eval(y);
                let sob = sobolev_trace_check(v, *r, 1.0, &q);
                let found = found_check(v, &fw, *r, eps, 1.0, &q);
                (hardy_check(v, *r, &q), poincare_check(v, *r, &q), sob.ratio(), found.lhs, found.rhs)
            })
            .collect()
    };
    let cal = run(CALIBRATION_SEED);
    let held = run(HELD_OUT_SEED);
    let sobolev_constant = cal.iter().map(|c| c.2).fold(0.0, f64::max) * margin;
    let all = cal.iter().chain(&held);
    let hardy_violations = all.clone().filter(|c| !c.0.pass).count();
    let poincare_violations = all.clone().filter(|c| !c.1.pass).count();
    let worst_hardy_ratio = all.clone().map(|c| c.0.ratio()).fold(0.0, f64::max);
    let worst_poincare_ratio = all.clone().map(|c| c.1.ratio()).fold(0.0, f64::max);
    let sob_fail = |set: &[(InequalityCheck, InequalityCheck, f64, f64, f64)]| set.iter().filter(|c| c.2 > sobolev_constant).count();
    // found with unit constant scales linearly in 𝒮
    let found_fail = |set: &[(InequalityCheck, InequalityCheck, f64, f64, f64)]| set.iter().filter(|c| c.3 > sobolev_constant * c.4 * (1.0 + 1e-10)).count();
    let sobolev_violations = sob_fail(&cal);
    let sobolev_held_out_violations = sob_fail(&held);
    let found_violations = found_fail(&cal);
    let found_held_out_violations = found_fail(&held);
    let pass = hardy_violations == 0
        && poincare_violations == 0
        && sobolev_violations == 0
        && sobolev_held_out_violations == 0
        && found_violations == 0
        && found_held_out_violations == 0;
    Ok(RandomAudit {
        dim,
        s,
        cases: n,
        hardy_violations,
        poincare_violations,
        worst_hardy_ratio,
        worst_poincare_ratio,
        sobolev_constant,
        margin,
        sobolev_violations,
        sobolev_held_out_violations,
        found_violations,
        found_held_out_violations,
        pass,
    })
}

/// The seven integrals of the Pohozaev-type identity at radius r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevTerms {
    pub r: f64,
    /// ∫_{S_r⁺} t^{1−2s} Ã∇W·∇W dS.
    pub surface_energy: f64,
    /// κ_s ∫_{S′_r} h̃ W² dS′.
    pub equator_potential: f64,
    /// 2 ∫_{S_r⁺} t^{1−2s} |Ã∇W·ν|²/μ dS.
    pub normal_flux: f64,
    /// −(κ_s/r) ∫_{B′_r} (div β′ h̃ + β′·∇h̃) W².
    pub flat_potential: f64,
    /// (1/r) ∫ t^{1−2s} Ã∇W·∇W div β.
    pub div_beta: f64,
    /// −(2/r) ∫ t^{1−2s} J_β(Ã∇W)·∇W.
    pub jac_beta: f64,
    /// (1/r) ∫ t^{1−2s} (dÃ∇W∇W)·β.
    pub d_a: f64,
    /// ((1−2s)/r) ∫ t^{1−2s} (α̃/μ) Ã∇W·∇W.
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Evaluates both sides of the Pohozaev-type identity.
pub fn pohozaev_check(w: &dyn Field, cf: &CoefficientField, r: f64, q: &Quadrature) -> PohozaevTerms {
    let dim = cf.map.dim;
    let s = cf.s;
    let sc = r.powf(dim as f64 + 1.0 - 2.0 * s);
    let surface_energy = sc
        * q.sphere_at(r, |z| {
            let (_, g) = w.eval(z);
            dot(&cf.apply(z, &g), &g)
        });
    let normal_flux = 2.0
        * sc
        * q.sphere_at(r, |z| {
            let (_, g) = w.eval(z);
            let an = dot(&cf.apply(z, &g), z) / norm(z);
            an * an / cf.mu(z)
        });
    let (equator_potential, flat_potential) = if cf.potential.is_zero() {
        (0.0, 0.0)
    } else {
        let e = cf.kappa * q.equator.integrate(r, |y| cf.h_tilde(y).0 * w.value(y).powi(2));
        let f = -cf.kappa / r
            * q.flat.integrate(r, |y| {
                let (h, gh) = cf.h_tilde(y);
                let bp = cf.beta_prime(y);
                (cf.div_beta_prime(y) * h + bp[0] * gh[0] + bp[1] * gh[1]) * w.value(y).powi(2)
            });
        (e, f)
    };
    let vol = |f: &dyn Fn(&crate::Point, &crate::Point, &crate::Point) -> f64| {
        q.ball(r, 0.0, |z, _| {
            let (_, g) = w.eval(z);
            let ag = cf.apply(z, &g);
            f(z, &g, &ag)
        }) / r
    };
    let div_beta = vol(&|z, g, ag| dot(ag, g) * cf.div_beta(z));
    let jac_beta = -2.0
        * vol(&|z, g, ag| {
            let j = cf.jac_beta(z);
            let jv = [dot(&j[0], ag), dot(&j[1], ag), dot(&j[2], ag)];
            dot(&jv, g)
        });
    let d_a = if cf.map.graph.is_flat() {
        0.0
    } else {
        vol(&|z, g, _| dot(&cf.d_a(z, g), &cf.beta(z)))
    };
    let alpha = (1.0 - 2.0 * s) * vol(&|z, g, ag| cf.alpha_tilde(z) / cf.mu(z) * dot(ag, g));
    let lhs = surface_energy - equator_potential;
    let rhs = normal_flux + flat_potential + div_beta + jac_beta + d_a + alpha;
    let gap = (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + f64::EPSILON);
    PohozaevTerms {
        r,
        surface_energy,
        equator_potential,
        normal_flux,
        flat_potential,
        div_beta,
        jac_beta,
        d_a,
        alpha,
        lhs,
        rhs,
        gap,
    }
}

/// Pohozaev gaps under quadrature refinement and the empirical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevConvergence {
    pub factors: Vec<f64>,
    pub gaps: Vec<f64>,
    /// log₂ of successive gap ratios; None when the gap is at rounding level.
    pub orders: Vec<Option<f64>>,
    pub pass: bool,
}

/// Gaps at orders scaled by ¼, ½ and 1; the refinement passes when every
/// step above the rounding floor shrinks the gap at order ≥ 2.
pub fn pohozaev_convergence(w: &dyn Field, cf: &CoefficientField, r: f64, base: QuadratureOrders) -> PohozaevConvergence {
    let factors = vec![0.25, 0.5, 1.0];
    let gaps: Vec<f64> = factors
        .iter()
        .map(|&f| pohozaev_check(w, cf, r, &Quadrature::new(cf.map.dim, cf.s, base.scaled(f))).gap)
        .collect();
    // gaps this small sit at the accuracy of the field itself
    let floor = 1e-9;
    let orders: Vec<Option<f64>> = gaps
        .windows(2)
        .map(|g| if g[1] <= floor { None } else { Some((g[0] / g[1]).log2()) })
        .collect();
    let pass = gaps.windows(2).zip(&orders).all(|(g, o)| match o {
        None => g[1] <= floor,
        Some(p) => *p >= 2.0 || g[0] <= floor,
    });
    PohozaevConvergence { factors, gaps, orders, pass }
}

/// H′ by finite differences against its surface form and against (2/r)D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeIdentity {
    pub r: f64,
    pub h: f64,
    pub h_prime: f64,
    pub surface: f64,
    pub energy_form: f64,
    pub surface_gap: f64,
    pub energy_gap: f64,
    /// (H′ − 2D/r)/H, the O(1)·H slack.
    pub slack: f64,
}

pub fn derivative_identity_check(w: &dyn Field, cf: &CoefficientField, r: f64, q: &Quadrature) -> Result<DerivativeIdentity> {
    let h = height(w, cf, r, q);
    if !(h > 0.0) {
        return Err(Error::Degenerate(format!("H({r}) = {h}; the identity needs H > 0")));
    }
    let d = 1e-3 * r;
    let hp = (-height(w, cf, r + 2.0 * d, q) + 8.0 * height(w, cf, r + d, q) - 8.0 * height(w, cf, r - d, q) + height(w, cf, r - 2.0 * d, q)) / (12.0 * d);
    let surface = height_derivative_surface(w, cf, r, q);
    let energy_form = 2.0 / r * energy(w, cf, r, q);
    let rel = |a: f64| (hp - a).abs() / hp.abs().max(f64::MIN_POSITIVE);
    Ok(DerivativeIdentity {
        r,
        h,
        h_prime: hp,
        surface,
        energy_form,
        surface_gap: rel(surface),
        energy_gap: rel(energy_form),
        slack: (hp - energy_form) / h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::Chart;
    use crate::quadrature::HalfSphereRule;
    use crate::special::gamma;
    use crate::sphere_eig::SphereBasis;
    use crate::straightening::{build_map, coefficient_field, BoundaryGraph, Potential};

    fn flat(dim: usize, s: f64, h: f64) -> CoefficientField {
        let map = build_map(BoundaryGraph::flat(), dim, 1.0).unwrap();
        let chart = Chart {
            origin: [0.0; 2],
            rotation: [[1.0, 0.0], [0.0, 1.0]],
            dim,
        };
        coefficient_field(map, chart, Potential::constant(h), s, 1.0).unwrap()
    }

    fn sin_moment(a: f64) -> f64 {
        // ∫_0^π sin^a φ dφ
        std::f64::consts::PI.sqrt() * gamma((a + 1.0) / 2.0) / gamma(a / 2.0 + 1.0)
    }

    fn poly(dim: usize, terms: Vec<([u32; 3], f64)>) -> PolyField {
        PolyField::new(dim, Polynomial::from_terms(dim + 1, terms))
    }

    #[test]
    fn hardy_closed_forms() {
        let (dim, s) = (1, 0.25);
        let q = Quadrature::new(dim, s, QuadratureOrders::default_for(dim));
        let m = HalfSphereRule::exact_measure(dim, s);
        assert!((m - sin_moment(0.5)).abs() < 1e-13);
        let one = PolyField::constant(1, 1.0);
        let c = hardy_check(&one, 1.0, &q);
        // radial integral of ρ^{N−1−2s} is 1/(N−2s) = 2
        assert!((c.lhs - 0.0625 * 2.0 * m).abs() < 1e-12);
        assert!((c.rhs - 0.25 * m).abs() < 1e-12);
        assert!(c.pass);
        let t = poly(1, vec![([0, 1, 0], 1.0)]);
        let c = hardy_check(&t, 1.0, &q);
        let mt = sin_moment(2.5);
        assert!((c.lhs - 0.0625 * mt / 2.5).abs() < 1e-12);
        assert!((c.rhs - (mt / 2.5 + 0.25 * mt)).abs() < 1e-12);
        assert!(c.pass);
        let zero = PolyField::constant(1, 0.0);
        let c = hardy_check(&zero, 1.0, &q);
        assert_eq!((c.lhs, c.rhs, c.pass), (0.0, 0.0, true));
    }

    #[test]
    fn poincare_and_trivial_cases() {
        let q = Quadrature::new(1, 0.5, QuadratureOrders::default_for(1));
        let v = poly(1, vec![([1, 0, 0], 1.0)]);
        let c = poincare_check(&v, 1.0, &q);
        let pi = std::f64::consts::PI;
        // N = 2s: the constant 4r/(N−2s)² is infinite
        assert!((c.lhs - pi / 8.0).abs() < 1e-12);
        assert!(c.rhs.is_infinite() && c.ratio() < 1.0 && c.pass);
        // N = 2, s = ½, v = y₂: ∫y₂² = 2π/15, ∫|∇v|² = 2π/3, ∫_{S⁺}y₂² = 2π/3
        let q2 = Quadrature::new(2, 0.5, QuadratureOrders::default_for(2));
        let c = poincare_check(&poly(2, vec![([0, 1, 0], 1.0)]), 1.0, &q2);
        assert!((c.lhs - 2.0 * pi / 15.0).abs() < 1e-12);
        assert!((c.rhs - 4.0 * pi).abs() < 1e-12);
        assert!(c.ratio() < 1.0 && c.pass);
        let zero = PolyField::constant(1, 0.0);
        let f = |_: &crate::Point| 1.0;
        let q = Quadrature::new(1, 0.25, QuadratureOrders::default_for(1));
        for c in [
            poincare_check(&zero, 1.0, &q),
            sobolev_trace_check(&zero, 1.0, 1.0, &q),
            found_check(&zero, &f, 1.0, 0.5, 1.0, &q),
        ] {
            assert!(c.pass && c.lhs == 0.0);
        }
    }

    #[test]
    fn audit_case_validation() {
        let v: Arc<dyn Field> = Arc::new(PolyField::constant(1, 1.0));
        assert!(AuditCase::new(v.clone(), 1.0, 0.0, AuditTag::Hardy).is_err());
        assert!(AuditCase::new(v.clone(), -1.0, 1e-9, AuditTag::Hardy).is_err());
        let c = AuditCase::new(v, 0.5, 1e-9, AuditTag::Poincare).unwrap();
        let q = Quadrature::new(1, 0.25, QuadratureOrders::default_for(1));
        let k = Constants {
            sobolev: 1.0,
            epsilon: 0.5,
            found_weight: Polynomial::from_terms(2, vec![([0, 0, 0], 1.0)]),
        };
        assert!(c.run(&q, &k).unwrap().pass);
        let p = AuditCase { tag: AuditTag::Pohozaev, ..c };
        assert!(p.run(&q, &k).is_err());
    }

    #[test]
    fn random_fields_are_reproducible_and_t_even() {
        let a = random_cases(2, 5, CALIBRATION_SEED);
        let b = random_cases(2, 5, CALIBRATION_SEED);
        for ((p, r, f), (p2, r2, f2)) in a.iter().zip(&b) {
            assert_eq!((&p.poly, r, f), (&p2.poly, r2, f2));
            assert!(p.poly.degree() <= 4);
            assert!(p.poly.terms.iter().all(|(e, c)| e[2] % 2 == 0 && c.abs() <= 1.0));
        }
    }

    #[test]
    fn homogeneous_pohozaev() {
        for (dim, s) in [(1usize, 0.5), (2, 0.25), (2, 0.75)] {
            let cf = flat(dim, s, 0.0);
            let q = Quadrature::new(dim, s, QuadratureOrders::default_for(dim));
            let basis = SphereBasis::new(dim, s, 3).unwrap();
            for y in basis.iter_functions() {
                let w = PolyField::homogeneous(&y.poly);
                let p = pohozaev_check(&w, &cf, 0.3, &q);
                assert!(p.gap < 1e-8, "{p:?}");
                // closed polar form: ∫_{S_r⁺}|∇W|² = r^{N−1−2s+2m}(m² + λ_m) for a unit Y
                let m = y.degree as f64;
                let lam = crate::sphere_eig::eigenvalue_for_degree(y.degree, dim, s);
                let want = 0.3f64.powf(dim as f64 - 1.0 - 2.0 * s + 2.0 * m) * (m * m + lam);
                assert!((p.surface_energy - want).abs() < 1e-10 * want);
                let d = derivative_identity_check(&w, &cf, 0.3, &q).unwrap();
                assert!(d.surface_gap < 1e-9 && d.energy_gap < 1e-9, "{d:?}");
            }
        }
        let cf = flat(2, 0.5, 0.0);
        let q = Quadrature::new(2, 0.5, QuadratureOrders::default_for(2));
        let zero = PolyField::constant(2, 0.0);
        let p = pohozaev_check(&zero, &cf, 0.3, &q);
        assert_eq!((p.lhs, p.rhs, p.gap), (0.0, 0.0, 0.0));
        assert!(matches!(derivative_identity_check(&zero, &cf, 0.3, &q), Err(Error::Degenerate(_))));
    }
}
