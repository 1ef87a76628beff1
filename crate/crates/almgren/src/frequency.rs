//! Height H(r), energy D(r), the frequency 𝒩 = D/H, its limit γ̂ and the
//! growth audits built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrapolate::{aitken, linear_fit};
use crate::field::{dot, norm, Field};
use crate::quadrature::Quadrature;
use crate::straightening::CoefficientField;

/// H(r) = r^{−(N+1−2s)} ∫_{S_r⁺} t^{1−2s} μ W² dS.
pub fn height(w: &dyn Field, cf: &CoefficientField, r: f64, q: &Quadrature) -> f64 {
    q.sphere_at(r, |z| {
        let v = w.value(z);
        cf.mu(z) * v * v
    })
}

/// ∫_{B_r⁺} t^{1−2s} Ã∇W·∇W.
pub fn dirichlet_energy(w: &dyn Field, cf: &CoefficientField, r: f64, q: &Quadrature) -> f64 {
    q.ball(r, 0.0, |z, _| {
        let (_, g) = w.eval(z);
        dot(&cf.apply(z, &g), &g)
    })
}

/// κ_s ∫_{B′_r} h̃ W(·, 0)².
pub fn potential_energy(w: &dyn Field, cf: &CoefficientField, r: f64, q: &Quadrature) -> f64 {
    if cf.potential.is_zero() {
        return 0.0;
    }
    cf.kappa
        * q.flat.integrate(r, |y| {
            let v = w.value(y);
            cf.h_tilde(y).0 * v * v
        })
}

/// D(r) = r^{−(N−2s)} (∫ t^{1−2s} Ã∇W·∇W − κ_s ∫ h̃ W²).
pub fn energy(w: &dyn Field, cf: &CoefficientField, r: f64, q: &Quadrature) -> f64 {
    let e = dirichlet_energy(w, cf, r, q) - potential_energy(w, cf, r, q);
    e / r.powf(cf.map.dim as f64 - 2.0 * cf.s)
}

/// Unit-ball measure ω_N.
pub fn unit_ball_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => panic!("dimension must be 1 or 2"),
    }
}

/// Exponent 4s²ε/(N + 2sε) of r in η.
pub fn eta_exponent(dim: usize, s: f64, eps: f64) -> f64 {
    4.0 * s * s * eps / (dim as f64 + 2.0 * s * eps)
}

/// η(r) = 𝒮 ω_N^{4s²ε/(N(N+2sε))} ‖h̃‖_{L^{N/2s+ε}(B′_r)} r^{4s²ε/(N+2sε)}.
pub fn eta_bound(cf: &CoefficientField, r: f64, eps: f64, sobolev: f64, q: &Quadrature) -> f64 {
    if cf.potential.is_zero() {
        return 0.0;
    }
    let dim = cf.map.dim;
    let p = dim as f64 / (2.0 * cf.s) + eps;
    let lp = q.flat.integrate(r, |y| cf.h_tilde(y).0.abs().powf(p)).powf(1.0 / p);
    let n = dim as f64;
    sobolev * unit_ball_measure(dim).powf(4.0 * cf.s * cf.s * eps / (n * (n + 2.0 * cf.s * eps))) * lp * r.powf(eta_exponent(dim, cf.s, eps))
}

/// Geometric grid from `hi` down to at least `lo` with the given ratio.
pub fn geometric_grid(hi: f64, lo: f64, ratio: f64) -> Vec<f64> {
    let mut v = vec![hi];
    while *v.last().unwrap() * ratio >= lo * (1.0 - 1e-12) {
        let next = v.last().unwrap() * ratio;
        v.push(next);
    }
    v
}

/// Default grid: ratio 1/√2 from 0.1 r₀ down to about 1e−3 r₀.
pub fn default_grid(r0: f64) -> Vec<f64> {
    geometric_grid(0.1 * r0, 1e-3 * r0 / 2f64.sqrt(), std::f64::consts::FRAC_1_SQRT_2)
        .into_iter()
        .take(14)
        .collect()
}

/// Checks a decreasing geometric grid inside (0, r₀) with ratio ≤ 0.8 and at
/// least 12 points.
pub fn validate_grid(radii: &[f64], r0: f64) -> Result<f64> {
    if radii.len() < 12 {
        return Err(Error::Config(format!("radius grid needs at least 12 points, got {}", radii.len())));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r < r0)) {
        return Err(Error::Config("radii must lie in (0, r₀)".into()));
    }
    let ratio = radii[1] / radii[0];
    if !(ratio > 0.0 && ratio <= 0.8) {
        return Err(Error::Config(format!("grid ratio {ratio} must lie in (0, 0.8]")));
    }
    for w in radii.windows(2) {
        if ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9 {
            return Err(Error::Config("radius grid is not geometric".into()));
        }
    }
    Ok(ratio)
}

/// Nearest admissible vanishing order: a positive integer, odd when N = 1.
pub fn admissible_order(gamma: f64, dim: usize) -> usize {
    if dim == 1 {
        let k = ((gamma - 1.0) / 2.0).round().max(0.0) as usize;
        2 * k + 1
    } else {
        gamma.round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMethod {
    Constant,
    Aitken,
    PowerFit,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub value: f64,
    pub method: GammaMethod,
    /// |difference| between the last two Aitken estimates, or the fit rms.
    pub residual: f64,
}

/// Limit of 𝒩 on a decreasing geometric grid: Aitken Δ² on the tail when two
/// consecutive estimates agree to 0.01, otherwise a linear fit in r^δ on the
/// smaller half of the grid.
pub fn extrapolate_gamma(radii: &[f64], n: &[f64], delta: f64) -> GammaEstimate {
    let k = n.len();
    let tail = &n[k.saturating_sub(4)..];
    let spread = tail.iter().fold(0.0f64, |a, &x| a.max((x - tail[tail.len() - 1]).abs()));
    if spread <= 1e-12 * tail[tail.len() - 1].abs().max(1.0) {
        return GammaEstimate {
            value: n[k - 1],
            method: GammaMethod::Constant,
            residual: spread,
        };
    }
    if k >= 4 {
        if let (Some(a), Some(b)) = (aitken(&n[..k - 1]), aitken(n)) {
            if a.is_finite() && b.is_finite() && (a - b).abs() < 0.01 {
                return GammaEstimate {
                    value: b,
                    method: GammaMethod::Aitken,
                    residual: (a - b).abs(),
                };
            }
        }
    }
    let half = k / 2;
    let x: Vec<f64> = radii[half..].iter().map(|r| r.powf(delta)).collect();
    let (a, _, rms) = linear_fit(&x, &n[half..]);
    GammaEstimate {
        value: a,
        method: GammaMethod::PowerFit,
        residual: rms,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileSettings {
    pub epsilon: f64,
    /// Unknown Sobolev constant 𝒮_{N,s} in η (non-normative).
    pub sobolev_constant: f64,
    pub classification_tolerance: f64,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        ProfileSettings {
            epsilon: 0.5,
            sobolev_constant: 1.0,
            classification_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RadialProfile {
    pub dim: usize,
    pub s: f64,
    pub radii: Vec<f64>,
    pub height: Vec<f64>,
    pub energy: Vec<f64>,
    pub frequency: Vec<f64>,
    pub eta: Vec<f64>,
    pub gamma_hat: f64,
    pub gamma_method: GammaMethod,
    pub fit_residual: f64,
    /// |γ̂ − γ̂ without the two smallest radii|.
    pub gamma_stability: f64,
    pub m0: usize,
    pub classified: bool,
    /// Extrapolated limit of r^{−2γ}H(r), γ = m₀ when classified.
    pub height_limit: f64,
    pub diagnostics: Vec<String>,
}

impl PartialEq for GammaEstimate {
    fn eq(&self, o: &Self) -> bool {
        self.value == o.value && self.method == o.method && self.residual == o.residual
    }
}

/// H and D at every radius (in parallel, order preserved) and the derived
/// classification.
pub fn frequency_profile(w: &dyn Field, cf: &CoefficientField, q: &Quadrature, radii: &[f64], settings: &ProfileSettings) -> Result<RadialProfile> {
    validate_grid(radii, cf.map.r0)?;
    let dim = cf.map.dim;
    let s = cf.s;
    let vals: Vec<(f64, f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            (
                height(w, cf, r, q),
                energy(w, cf, r, q),
                eta_bound(cf, r, settings.epsilon, settings.sobolev_constant, q),
            )
        })
        .collect();
    let mut h = Vec::with_capacity(radii.len());
    let mut d = Vec::with_capacity(radii.len());
    let mut eta = Vec::with_capacity(radii.len());
    for (r, (a, b, c)) in radii.iter().zip(vals) {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Degenerate(format!("H({r}) = {a}; the solution vanishes near the boundary point")));
        }
        if !b.is_finite() {
            return Err(Error::Numeric(format!("D({r}) is not finite")));
        }
        h.push(a);
        d.push(b);
        eta.push(c);
    }
    let n: Vec<f64> = d.iter().zip(&h).map(|(a, b)| a / b).collect();
    let delta = eta_exponent(dim, s, settings.epsilon);
    let est = extrapolate_gamma(radii, &n, delta);
    let short = extrapolate_gamma(&radii[..radii.len() - 2], &n[..n.len() - 2], delta);
    let m0 = admissible_order(est.value, dim);
    let classified = (est.value - m0 as f64).abs() < settings.classification_tolerance;
    let mut diagnostics = Vec::new();
    if !classified {
        diagnostics.push(format!(
            "γ̂ = {} is not within {} of an admissible order",
            est.value, settings.classification_tolerance
        ));
    }
    let floor = -(dim as f64 - 2.0 * s) / 2.0;
    if let Some((r, v)) = radii.iter().zip(&n).find(|(_, &v)| v <= floor) {
        diagnostics.push(format!("𝒩({r}) = {v} is not above −(N−2s)/2"));
    }
    let gamma = if classified { m0 as f64 } else { est.value };
    let scaled: Vec<f64> = radii.iter().zip(&h).map(|(r, hv)| hv / r.powf(2.0 * gamma)).collect();
    let height_limit = match aitken(&scaled) {
        Some(v) if v.is_finite() && (v - scaled[scaled.len() - 1]).abs() < 0.1 * scaled[scaled.len() - 1].abs() => v,
        _ => scaled[scaled.len() - 1],
    };
    Ok(RadialProfile {
        dim,
        s,
        radii: radii.to_vec(),
        height: h,
        energy: d,
        frequency: n,
        eta,
        gamma_hat: est.value,
        gamma_method: est.method,
        fit_residual: est.residual,
        gamma_stability: (est.value - short.value).abs(),
        m0,
        classified,
        height_limit,
        diagnostics,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DoublingCheck {
    pub factor: f64,
    /// max over the grid of log(H(Rr)/H(r))/log R.
    pub exponent: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MonotonicityAudit {
    /// Boundedness witness C = max 𝒩.
    pub frequency_bound: f64,
    pub frequency_bounded: bool,
    pub frequency_above_floor: bool,
    /// c₀ = max_r H(r)/r^{2γ̂} (1 + 1e−3).
    pub upper_constant: f64,
    /// H(r)/r^{2γ̂} settles: tail increments contract or are below 1e−3 relative.
    pub upper_pass: bool,
    pub doubling: Vec<DoublingCheck>,
    pub lower_sigma: f64,
    /// c_σ = H(r_max)/r_max^{2γ̂+σ}.
    pub lower_constant: f64,
    pub lower_pass: bool,
    pub limit: f64,
    pub limit_positive_finite: bool,
    pub pass: bool,
}

fn settles(q: &[f64]) -> bool {
    let n = q.len();
    if n < 4 || q.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let scale = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let inc: Vec<f64> = q[n - 4..].windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    inc.windows(2).all(|w| w[1] <= 0.9 * w[0] || w[1] <= 1e-3 * scale)
}

/// log H interpolated linearly in log r.
fn log_height_at(radii: &[f64], h: &[f64], r: f64) -> Option<f64> {
    let lr = r.ln();
    for i in 0..radii.len() - 1 {
        let (a, b) = (radii[i].ln(), radii[i + 1].ln());
        if (lr <= a + 1e-12 && lr >= b - 1e-12) || (lr >= a - 1e-12 && lr <= b + 1e-12) {
            let t = if a == b { 0.0 } else { (lr - a) / (b - a) };
            return Some(h[i].ln() * (1.0 - t) + h[i + 1].ln() * t);
        }
    }
    None
}

/// Boundedness of 𝒩, upper and lower power bounds on H and doubling, with
/// fitted witnesses.
pub fn monotonicity_audit(p: &RadialProfile, gamma: f64) -> MonotonicityAudit {
    let floor = -(p.dim as f64 - 2.0 * p.s) / 2.0;
    let frequency_bound = p.frequency.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let frequency_bounded = frequency_bound.is_finite();
    let frequency_above_floor = p.frequency.iter().all(|&v| v > floor);
    let q: Vec<f64> = p.radii.iter().zip(&p.height).map(|(r, h)| h / r.powf(2.0 * gamma)).collect();
    let upper_constant = q.iter().fold(0.0f64, |a, &b| a.max(b)) * (1.0 + 1e-3);
    let upper_pass = settles(&q) && q.iter().all(|&v| v <= upper_constant);
    let doubling = [2.0, 4.0]
        .iter()
        .map(|&factor: &f64| {
            let mut exponent = f64::NEG_INFINITY;
            for (r, h) in p.radii.iter().zip(&p.height) {
                if let Some(lh) = log_height_at(&p.radii, &p.height, factor * r) {
                    exponent = exponent.max((lh - h.ln()) / factor.ln());
                }
            }
            // doubling with c̄ ≤ 2 max 𝒩 + 1 is the quantitative form of a
            // bounded frequency
            let pass = exponent.is_finite() && exponent <= 2.0 * frequency_bound.max(0.0) + 1.0;
            DoublingCheck { factor, exponent, pass }
        })
        .collect::<Vec<_>>();
    let sigma = 0.1;
    let lower_constant = p.height[0] / p.radii[0].powf(2.0 * gamma + sigma);
    let lower_pass = p
        .radii
        .iter()
        .zip(&p.height)
        .all(|(r, h)| *h >= lower_constant * r.powf(2.0 * gamma + sigma) * (1.0 - 1e-3));
    let limit = p.height_limit;
    let limit_positive_finite = limit.is_finite() && limit > 0.0 && settles(&q);
    let pass = frequency_bounded && frequency_above_floor && upper_pass && doubling.iter().all(|d| d.pass) && lower_pass && limit_positive_finite;
    MonotonicityAudit {
        frequency_bound,
        frequency_bounded,
        frequency_above_floor,
        upper_constant,
        upper_pass,
        doubling,
        lower_sigma: sigma,
        lower_constant,
        lower_pass,
        limit,
        limit_positive_finite,
        pass,
    }
}

/// 𝒩 at a single radius.
pub fn frequency_at(w: &dyn Field, cf: &CoefficientField, r: f64, q: &Quadrature) -> f64 {
    energy(w, cf, r, q) / height(w, cf, r, q)
}

/// r^{−(N+1−2s)}·2∫_{S_r⁺} t^{1−2s} μ W ∂_νW dS.
pub fn height_derivative_surface(w: &dyn Field, cf: &CoefficientField, r: f64, q: &Quadrature) -> f64 {
    2.0 * q.sphere_at(r, |z| {
        let (v, g) = w.eval(z);
        cf.mu(z) * v * dot(&g, z) / norm(z)
    })
}
