//! Blow-up analysis: rescaled fields V^λ, Fourier coefficients on the
//! half-sphere, the correction terms Υ, the limit coefficients β by two
//! routes and convergence of λ^{−m₀}W(λ·) to the homogeneous profile.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrapolate::{empirical_rate, linear_fit, richardson, Extrapolated};
use crate::field::{dot, norm, Field, ScaledField};
use crate::frequency::{eta_exponent, height};
use crate::quadrature::{legendre_on, Quadrature};
use crate::sphere_eig::{SphereBasis, SphericalEigenfunction};
use crate::straightening::CoefficientField;
use crate::Point;

/// V^λ(z) = W(λz)/√H(λ).
pub fn rescale(w: Arc<dyn Field>, cf: &CoefficientField, lambda: f64, q: &Quadrature) -> Result<ScaledField> {
    if !(lambda > 0.0 && lambda < cf.map.r0) {
        return Err(Error::Usage(format!("λ = {lambda} must lie in (0, {})", cf.map.r0)));
    }
    let h = height(w.as_ref(), cf, lambda, q);
    if !(h >= 1e-300) {
        return Err(Error::Degenerate(format!("H({lambda}) = {h} is below 1e-300")));
    }
    Ok(ScaledField {
        inner: w,
        lambda,
        factor: 1.0 / h.sqrt(),
    })
}

/// ∫_{S⁺} θ^{1−2s} μ(λθ) |V^λ(θ)|² dS, which is 1 by construction.
pub fn normalization(v: &ScaledField, cf: &CoefficientField, q: &Quadrature) -> f64 {
    let l = v.lambda;
    q.sphere_at(1.0, |th| {
        let x = v.value(th);
        cf.mu(&[l * th[0], l * th[1], l * th[2]]) * x * x
    })
}

/// One coefficient φ_{m,k}(λ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficient {
    pub degree: usize,
    /// 1-based index k inside the eigenspace.
    pub index: usize,
    pub value: f64,
}

fn functions_up_to(basis: &SphereBasis, max_degree: usize) -> Vec<(usize, usize, &SphericalEigenfunction)> {
    let mut out = Vec::new();
    for sp in basis.spaces.iter().filter(|e| e.degree <= max_degree) {
        for (k, y) in sp.functions.iter().enumerate() {
            out.push((sp.degree, k + 1, y));
        }
    }
    out
}

/// φ_{m,k}(λ) = ∫_{S⁺} θ^{1−2s} W(λθ) Y_{m,k}(θ) dS for every degree ≤ `max_degree`.
pub fn fourier_coefficients(w: &dyn Field, lambda: f64, basis: &SphereBasis, max_degree: usize, q: &Quadrature) -> Result<Vec<FourierCoefficient>> {
    let need = if basis.dim == 1 && max_degree % 2 == 0 { max_degree - 1 } else { max_degree };
    if basis.spaces.iter().map(|e| e.degree).max().unwrap_or(0) < need {
        return Err(Error::Usage(format!("basis does not reach degree {max_degree}")));
    }
    let fs = functions_up_to(basis, max_degree);
    let mut acc = vec![0.0; fs.len()];
    for (th, &wt) in q.sphere.points.iter().zip(&q.sphere.weights) {
        let v = w.value(&[lambda * th[0], lambda * th[1], lambda * th[2]]);
        if v == 0.0 {
            continue;
        }
        for (a, (_, _, y)) in acc.iter_mut().zip(&fs) {
            *a += wt * v * y.eval(th);
        }
    }
    Ok(fs
        .iter()
        .zip(acc)
        .map(|((d, k, _), value)| FourierCoefficient {
            degree: *d,
            index: *k,
            value,
        })
        .collect())
}

fn minus_identity(cf: &CoefficientField, z: &Point, g: &Point) -> Point {
    let a = cf.apply(z, g);
    [a[0] - g[0], a[1] - g[1], a[2] - g[2]]
}

/// Υ_{m,k}(λ) for each listed eigenfunction, sharing the evaluations of W.
pub fn upsilon_many(w: &dyn Field, cf: &CoefficientField, lambda: f64, ys: &[&SphericalEigenfunction], q: &Quadrature) -> Vec<f64> {
    let dim = cf.map.dim;
    let s = cf.s;
    let mut out = vec![0.0; ys.len()];
    // (Ã − Id) vanishes identically on a flat chart
    if !cf.map.graph.is_flat() {
        let rad = q.radial(-1.0);
        for (rho, wr) in rad.scaled(lambda) {
            for (th, &wt) in q.sphere.points.iter().zip(&q.sphere.weights) {
                let z = [rho * th[0], rho * th[1], rho * th[2]];
                let (_, g) = w.eval(&z);
                let d = minus_identity(cf, &z, &g);
                for (o, y) in out.iter_mut().zip(ys) {
                    let (_, tg) = y.eval_tangential(th);
                    *o -= wr * wt * dot(&d, &tg);
                }
            }
        }
        let surf = lambda.powf(dim as f64 + 1.0 - 2.0 * s);
        for (th, &wt) in q.sphere.points.iter().zip(&q.sphere.weights) {
            let z = [lambda * th[0], lambda * th[1], lambda * th[2]];
            let (_, g) = w.eval(&z);
            let d = minus_identity(cf, &z, &g);
            let dn = dot(&d, th);
            for (o, y) in out.iter_mut().zip(ys) {
                *o += surf * wt * dn * y.eval(th);
            }
        }
    }
    if !cf.potential.is_zero() {
        for (p, &wt) in q.flat.points.iter().zip(&q.flat.weights) {
            let y = [lambda * p[0], lambda * p[1], lambda * p[2]];
            let r = norm(&y);
            if r == 0.0 {
                continue;
            }
            let th = [y[0] / r, y[1] / r, y[2] / r];
            let hv = cf.h_tilde(&y).0 * w.value(&y);
            let jac = lambda.powi(dim as i32);
            for (o, yf) in out.iter_mut().zip(ys) {
                *o += cf.kappa * jac * wt * hv * yf.eval(&th);
            }
        }
    }
    out
}

/// Υ_{m,k}(λ) as the sum of the volume, surface and boundary integrals.
pub fn upsilon(w: &dyn Field, cf: &CoefficientField, lambda: f64, y: &SphericalEigenfunction, q: &Quadrature) -> f64 {
    upsilon_many(w, cf, lambda, &[y], q)[0]
}

/// Panel layout for ∫₀^r ρ^a Υ(ρ) dρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialPanels {
    pub ratio: f64,
    pub panels: usize,
    pub nodes: usize,
}

impl Default for RadialPanels {
    fn default() -> Self {
        RadialPanels {
            ratio: 0.5,
            panels: 30,
            nodes: 8,
        }
    }
}

/// Two radial integrals ∫₀^r ρ^{a_j} Υ(ρ) dρ on geometric panels, with a
/// power-law tail on (0, r q^J).
fn upsilon_integrals(w: &dyn Field, cf: &CoefficientField, r: f64, ys: &[&SphericalEigenfunction], q: &Quadrature, exps: [f64; 2], panels: &RadialPanels) -> (Vec<[f64; 2]>, Vec<String>) {
    let mut nodes = Vec::new();
    for j in 0..panels.panels {
        let hi = r * panels.ratio.powi(j as i32);
        let lo = hi * panels.ratio;
        let rule = legendre_on(panels.nodes, lo, hi);
        nodes.extend(rule.nodes.iter().copied().zip(rule.weights.iter().copied()));
    }
    let eps = r * panels.ratio.powi(panels.panels as i32);
    nodes.push((eps, 0.0));
    nodes.push((eps * panels.ratio, 0.0));
    let vals: Vec<Vec<f64>> = nodes.par_iter().map(|&(rho, _)| upsilon_many(w, cf, rho, ys, q)).collect();
    let n = nodes.len();
    let mut diags = Vec::new();
    let mut out = vec![[0.0; 2]; ys.len()];
    for (k, o) in out.iter_mut().enumerate() {
        for (e, oe) in exps.iter().zip(o.iter_mut()) {
            let mut total = 0.0;
            for ((rho, wt), v) in nodes[..n - 2].iter().zip(&vals) {
                total += wt * rho.powf(*e) * v[k];
            }
            let (a, b) = (vals[n - 2][k], vals[n - 1][k]);
            if a != 0.0 {
                let p = (a / b).abs().ln() / (1.0 / panels.ratio).ln();
                if p.is_finite() && e + p + 1.0 > 0.0 && a.signum() == b.signum() {
                    total += a * eps.powf(e + 1.0) / (e + p + 1.0);
                } else {
                    diags.push(format!("Υ tail for k = {} has no usable power law", k + 1));
                }
            }
            *oe = total;
        }
    }
    (out, diags)
}

/// β estimates by the integral formula (route A) and by extrapolating
/// λ^{−m₀}φ_{m₀,k}(λ) to λ → 0 (route B).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub m0: usize,
    /// Outer radius used in the formula.
    pub radius: f64,
    pub route_a: Vec<f64>,
    pub route_b: Vec<Extrapolated>,
    /// Fitted convergence rate of λ^{−m₀}φ_{m₀,k}, per k.
    pub rates: Vec<Option<f64>>,
    /// max_k |A_k − B_k| / max_k |B_k|.
    pub relative_gap: f64,
    pub agree: bool,
    pub diagnostics: Vec<String>,
}

/// Route-B limit of a sequence sampled on a decreasing geometric grid.
pub fn extrapolate_limit(lambdas: &[f64], x: &[f64], delta: f64) -> (Extrapolated, Option<f64>) {
    let n = x.len();
    let ratio = lambdas[1] / lambdas[0];
    let rate = empirical_rate(x, ratio);
    if let Some(p) = rate {
        let e = richardson(&x[n - 3..], 1.0 / ratio, &[p]);
        if e.value.is_finite() {
            return (e, rate);
        }
    }
    let spread = x[n - 3..].iter().fold(0.0f64, |a, v| a.max((v - x[n - 1]).abs()));
    if spread <= 1e-12 * x[n - 1].abs().max(1e-300) {
        return (Extrapolated { value: x[n - 1], error: spread }, rate);
    }
    let half = n / 2;
    let t: Vec<f64> = lambdas[half..].iter().map(|l| l.powf(delta)).collect();
    let (a, _, rms) = linear_fit(&t, &x[half..]);
    (Extrapolated { value: a, error: rms }, rate)
}

/// β_k for every k at degree m₀, by both routes.
pub fn beta_coefficients(
    w: &dyn Field,
    cf: &CoefficientField,
    basis: &SphereBasis,
    m0: usize,
    r: f64,
    lambdas: &[f64],
    q: &Quadrature,
    epsilon: f64,
) -> Result<BetaEstimate> {
    let space = basis
        .space(m0)
        .ok_or_else(|| Error::Usage(format!("no eigenspace of degree {m0}")))?;
    if lambdas.len() < 3 {
        return Err(Error::Usage("route B needs at least three radii".into()));
    }
    let ys: Vec<&SphericalEigenfunction> = space.functions.iter().collect();
    let dim = cf.map.dim as f64;
    let s = cf.s;
    let m = m0 as f64;
    let den = 2.0 * m + dim - 2.0 * s;
    let exps = [m - 1.0, -m - dim - 1.0 + 2.0 * s];
    let (ints, mut diagnostics) = upsilon_integrals(w, cf, r, &ys, q, exps, &RadialPanels::default());
    let phi_r = fourier_coefficients(w, r, basis, m0, q)?;
    let route_a: Vec<f64> = ys
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let p = phi_r.iter().find(|c| c.degree == m0 && c.index == k + 1).unwrap().value;
            p / r.powf(m) + m * r.powf(-den) / den * ints[k][0] + (m + dim - 2.0 * s) / den * ints[k][1]
        })
        .collect();
    let table = coefficient_table(w, lambdas, basis, m0, q)?;
    let delta = eta_exponent(cf.map.dim, s, epsilon);
    let mut route_b = Vec::new();
    let mut rates = Vec::new();
    for k in 0..ys.len() {
        let x: Vec<f64> = lambdas
            .iter()
            .zip(&table)
            .map(|(l, row)| row.iter().find(|c| c.degree == m0 && c.index == k + 1).unwrap().value / l.powf(m))
            .collect();
        let (e, rate) = extrapolate_limit(lambdas, &x, delta);
        route_b.push(e);
        rates.push(rate);
    }
    let scale = route_b.iter().fold(0.0f64, |a, e| a.max(e.value.abs()));
    let diff = route_a
        .iter()
        .zip(&route_b)
        .fold(0.0f64, |a, (x, e)| a.max((x - e.value).abs()));
    let relative_gap = if scale > 0.0 { diff / scale } else { diff };
    let agree = relative_gap <= 0.05;
    if !agree {
        diagnostics.push(format!("β routes disagree by {:.3}%", 100.0 * relative_gap));
    }
    if scale == 0.0 {
        diagnostics.push("β vanishes on both routes".into());
    }
    Ok(BetaEstimate {
        m0,
        radius: r,
        route_a,
        route_b,
        rates,
        relative_gap,
        agree,
        diagnostics,
    })
}

/// φ_{m,k}(λ) rows for every λ, computed in parallel.
pub fn coefficient_table(w: &dyn Field, lambdas: &[f64], basis: &SphereBasis, max_degree: usize, q: &Quadrature) -> Result<Vec<Vec<FourierCoefficient>>> {
    lambdas
        .par_iter()
        .map(|&l| fourier_coefficients(w, l, basis, max_degree, q))
        .collect()
}

/// Φ̂ = |z|^{m₀} Σ β_k Y_{m₀,k}(z/|z|), a homogeneous polynomial.
pub fn limit_profile(basis: &SphereBasis, m0: usize, beta: &[f64]) -> Result<crate::polynomial::Polynomial> {
    let space = basis
        .space(m0)
        .ok_or_else(|| Error::Usage(format!("no eigenspace of degree {m0}")))?;
    let mut p = crate::polynomial::Polynomial::zero(basis.dim + 1);
    for (y, b) in space.functions.iter().zip(beta) {
        p = p.add(&y.poly.poly.scaled(*b));
    }
    Ok(p)
}

/// (∫_{S₁⁺} θ^{1−2s} f² + ∫_{B₁⁺} t^{1−2s} |∇f|²)^{1/2}.
pub fn weighted_h1_norm(f: &dyn Field, q: &Quadrature) -> f64 {
    let surf = q.sphere_at(1.0, |z| f.value(z).powi(2));
    let vol = q.ball(1.0, 0.0, |z, _| {
        let (_, g) = f.eval(z);
        dot(&g, &g)
    });
    (surf + vol).sqrt()
}

struct Difference<'a> {
    a: &'a dyn Field,
    b: &'a dyn Field,
}

impl Field for Difference<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn eval(&self, z: &Point) -> (f64, Point) {
        let (u, g) = self.a.eval(z);
        let (v, h) = self.b.eval(z);
        (u - v, [g[0] - h[0], g[1] - h[1], g[2] - h[2]])
    }
}

/// d(λ) = ‖λ^{−m₀}W(λ·) − Φ̂‖ in the weighted H¹(B₁⁺) norm.
pub fn profile_convergence(w: Arc<dyn Field>, phi_hat: &dyn Field, m0: usize, lambdas: &[f64], q: &Quadrature) -> Vec<f64> {
    lambdas
        .par_iter()
        .map(|&l| {
            let v = ScaledField {
                inner: w.clone(),
                lambda: l,
                factor: l.powi(-(m0 as i32)),
            };
            weighted_h1_norm(&Difference { a: &v, b: phi_hat }, q)
        })
        .collect()
}

/// ‖λ^{−m₀}W(λy, 0) − Φ̂(y, 0)‖_{L²(B₁′)} / ‖Φ̂(·, 0)‖_{L²(B₁′)}.
pub fn trace_discrepancy(w: &dyn Field, phi_hat: &dyn Field, m0: usize, lambdas: &[f64], q: &Quadrature) -> Vec<f64> {
    let base = q.flat.integrate(1.0, |y| phi_hat.value(y).powi(2)).sqrt();
    lambdas
        .par_iter()
        .map(|&l| {
            let f = l.powi(-(m0 as i32));
            let e = q
                .flat
                .integrate(1.0, |y| (f * w.value(&[l * y[0], l * y[1], l * y[2]]) - phi_hat.value(y)).powi(2))
                .sqrt();
            if base > 0.0 {
                e / base
            } else {
                e
            }
        })
        .collect()
}

/// |rescale(W, λμ)(z) − √(H(λ)/H(λμ)) rescale(W, λ)(μz)| relative to the
/// values, maximised over the sphere nodes.
pub fn scaling_covariance_error(w: Arc<dyn Field>, cf: &CoefficientField, lambda: f64, mu: f64, q: &Quadrature) -> Result<f64> {
    let a = rescale(w.clone(), cf, lambda * mu, q)?;
    let b = rescale(w, cf, lambda, q)?;
    let c = a.factor.recip() / b.factor.recip();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for th in &q.sphere.points {
        let x = a.value(th);
        let y = b.value(&[mu * th[0], mu * th[1], mu * th[2]]) / c;
        worst = worst.max((x - y).abs());
        scale = scale.max(x.abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Blow-up settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupSettings {
    pub epsilon: f64,
    /// Threshold on the final relative discrepancy.
    pub convergence_tolerance: f64,
    /// Required ratio of the leading coefficient over all others.
    pub dominance: f64,
}

impl Default for BlowupSettings {
    fn default() -> Self {
        BlowupSettings {
            epsilon: 0.5,
            convergence_tolerance: 0.05,
            dominance: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub m0: usize,
    pub lambdas: Vec<f64>,
    /// Degrees included in the coefficient table (m ≤ m₀ + 2).
    pub max_degree: usize,
    pub coefficients: Vec<Vec<FourierCoefficient>>,
    /// Normalization of V^λ per λ.
    pub normalization: Vec<f64>,
    pub beta: BetaEstimate,
    /// max_k |λ^{−m₀−N−1+2s} Υ_{m₀,k}(λ)| per λ.
    pub upsilon_envelope: Vec<f64>,
    pub phi_hat_norm: f64,
    pub discrepancy: Vec<f64>,
    pub trace_discrepancy: Vec<f64>,
    /// max over λ of Σφ² − ∫θ^{1−2s}W(λθ)² relative to the latter.
    pub bessel_excess: f64,
    /// max over m < m₀ of |λ^{−m₀}φ_{m,k}| / |β| at the smallest λ.
    pub below_order_ratio: f64,
    /// |φ at degree m₀| over the largest other |φ| at the smallest λ.
    pub dominance_ratio: f64,
    pub scaling_covariance: f64,
    pub converged: bool,
    pub classified: bool,
    pub diagnostics: Vec<String>,
}

/// The full blow-up pipeline at a classified order m₀.
pub fn blowup_analysis(
    w: Arc<dyn Field>,
    cf: &CoefficientField,
    basis: &SphereBasis,
    m0: usize,
    lambdas: &[f64],
    q: &Quadrature,
    settings: &BlowupSettings,
) -> Result<BlowupReport> {
    let dim = cf.map.dim;
    let s = cf.s;
    let max_degree = m0 + 2;
    if basis.space(m0).is_none() {
        return Err(Error::Usage(format!("degree {m0} is not an admissible order for N = {dim}")));
    }
    let wr = w.as_ref();
    let coefficients = coefficient_table(wr, lambdas, basis, max_degree, q)?;
    let normalization = lambdas
        .par_iter()
        .map(|&l| rescale(w.clone(), cf, l, q).map(|v| normalization(&v, cf, q)))
        .collect::<Result<Vec<_>>>()?;
    let beta = beta_coefficients(wr, cf, basis, m0, lambdas[0], lambdas, q, settings.epsilon)?;
    let mut diagnostics = beta.diagnostics.clone();
    let ys: Vec<&SphericalEigenfunction> = basis.space(m0).unwrap().functions.iter().collect();
    let env_exp = -(m0 as f64) - dim as f64 - 1.0 + 2.0 * s;
    let upsilon_envelope: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| {
            upsilon_many(wr, cf, l, &ys, q)
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
                * l.powf(env_exp)
        })
        .collect();
    let b: Vec<f64> = beta.route_b.iter().map(|e| e.value).collect();
    let phi_hat = crate::field::PolyField::new(dim, limit_profile(basis, m0, &b)?);
    let phi_hat_norm = weighted_h1_norm(&phi_hat, q);
    let discrepancy = profile_convergence(w.clone(), &phi_hat, m0, lambdas, q);
    let trace = trace_discrepancy(wr, &phi_hat, m0, lambdas, q);

    let bessel_excess = lambdas
        .iter()
        .zip(&coefficients)
        .map(|(&l, row)| {
            let total = q.sphere_at(l, |z| wr.value(z).powi(2));
            let sum: f64 = row.iter().map(|c| c.value * c.value).sum();
            (sum - total) / total
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let last = coefficients.last().unwrap();
    let lmin = *lambdas.last().unwrap();
    let bnorm = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let below_order_ratio = last
        .iter()
        .filter(|c| c.degree < m0)
        .map(|c| (c.value / lmin.powi(m0 as i32)).abs() / bnorm)
        .fold(0.0, f64::max);
    let lead = last.iter().filter(|c| c.degree == m0).fold(0.0f64, |a, c| a.max(c.value.abs()));
    let other = last.iter().filter(|c| c.degree != m0).fold(0.0f64, |a, c| a.max(c.value.abs()));
    let dominance_ratio = if other > 0.0 { lead / other } else { f64::MAX };
    let scaling_covariance = scaling_covariance_error(w.clone(), cf, lambdas[0], lambdas[lambdas.len() / 2] / lambdas[0], q)?;

    if bessel_excess > 1e-8 {
        diagnostics.push(format!("Bessel inequality exceeded by {bessel_excess:e}"));
    }
    if below_order_ratio >= 0.05 {
        diagnostics.push(format!("below-order coefficients at ratio {below_order_ratio:.3}"));
    }
    if dominance_ratio < settings.dominance {
        diagnostics.push(format!("degree {m0} dominates others only by {dominance_ratio:.2}"));
    }
    let rel: Vec<f64> = discrepancy.iter().map(|d| d / phi_hat_norm.max(1e-300)).collect();
    let k = rel.len();
    let tail_decreasing = rel[k.saturating_sub(4)..].windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-6) || p[1] < 1e-10);
    let converged = tail_decreasing && rel[k - 1] < settings.convergence_tolerance && rel[k - 1] < rel[0].max(1e-10) * (1.0 + 1e-6);
    if !converged {
        diagnostics.push(format!("profile discrepancy ends at {:.3e} relative", rel[k - 1]));
    }
    let classified = beta.agree && bnorm > 0.0 && dominance_ratio >= settings.dominance;
    Ok(BlowupReport {
        m0,
        lambdas: lambdas.to_vec(),
        max_degree,
        coefficients,
        normalization,
        beta,
        upsilon_envelope,
        phi_hat_norm,
        discrepancy,
        trace_discrepancy: trace,
        bessel_excess,
        below_order_ratio,
        dominance_ratio,
        scaling_covariance,
        converged,
        classified,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::Chart;
    use crate::field::{PolyField, SumField};
    use crate::frequency::default_grid;
    use crate::quadrature::QuadratureOrders;
    use crate::straightening::{build_map, coefficient_field, BoundaryGraph, Potential};

    fn flat(dim: usize, s: f64, h: f64, kappa: f64) -> CoefficientField {
        let map = build_map(BoundaryGraph::flat(), dim, 1.0).unwrap();
        let chart = Chart {
            origin: [0.0; 2],
            rotation: [[1.0, 0.0], [0.0, 1.0]],
            dim,
        };
        coefficient_field(map, chart, Potential::constant(h), s, kappa).unwrap()
    }

    #[test]
    fn homogeneous_rescale_and_coefficients() {
        for (dim, s) in [(1usize, 0.5), (2, 0.25)] {
            let cf = flat(dim, s, 0.0, 1.0);
            let q = Quadrature::new(dim, s, QuadratureOrders::default_for(dim));
            let basis = SphereBasis::new(dim, s, 4).unwrap();
            for y in basis.iter_functions() {
                let w: Arc<dyn Field> = Arc::new(PolyField::homogeneous(&y.poly));
                let v = rescale(w.clone(), &cf, 0.3, &q).unwrap();
                let z = [0.2, 0.1, 0.3];
                assert!((v.value(&z) - w.value(&z)).abs() < 1e-12);
                assert!((normalization(&v, &cf, &q) - 1.0).abs() < 1e-12);
                let c = fourier_coefficients(w.as_ref(), 0.5, &basis, 4, &q).unwrap();
                for e in &c {
                    let same = e.degree == y.degree && basis.space(e.degree).unwrap().functions[e.index - 1].poly == y.poly;
                    let want = if same { 0.5f64.powi(y.degree as i32) } else { 0.0 };
                    assert!((e.value - want).abs() < 1e-12, "{e:?}");
                }
            }
            let zero = PolyField::constant(dim, 0.0);
            assert!(fourier_coefficients(&zero, 0.2, &basis, 3, &q).unwrap().iter().all(|c| c.value == 0.0));
            assert!(matches!(rescale(Arc::new(zero), &cf, 0.2, &q), Err(Error::Degenerate(_))));
        }
    }

    #[test]
    fn upsilon_examples() {
        let s = 0.5;
        for dim in [1usize, 2] {
            let q = Quadrature::new(dim, s, QuadratureOrders::default_for(dim));
            let basis = SphereBasis::new(dim, s, 3).unwrap();
            for y in basis.iter_functions() {
                let w = PolyField::homogeneous(&y.poly);
                assert_eq!(upsilon(&w, &flat(dim, s, 0.0, 1.0), 0.3, y, &q), 0.0);
                let (c, kappa, l) = (1.7, 0.8, 0.3);
                let got = upsilon(&w, &flat(dim, s, c, kappa), l, y, &q);
                let m = y.degree as f64;
                // closed polar form: cκ λ^{m+N}/(m+N) ∫_{S^{N−1}} Y(ω, 0)² dω
                let ang = if dim == 1 {
                    y.eval(&[1.0, 0.0, 0.0]).powi(2) + y.eval(&[-1.0, 0.0, 0.0]).powi(2)
                } else {
                    let n = 400;
                    (0..n)
                        .map(|i| {
                            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                            y.eval(&[a.cos(), a.sin(), 0.0]).powi(2)
                        })
                        .sum::<f64>()
                        * 2.0
                        * std::f64::consts::PI
                        / n as f64
                };
                let want = c * kappa * l.powf(m + dim as f64) / (m + dim as f64) * ang;
                assert!((got - want).abs() < 1e-8 * want.abs().max(1e-300), "{dim} {} {got} {want}", y.degree);
            }
        }
    }

    #[test]
    fn beta_for_exact_profiles() {
        let s = 0.5;
        for dim in [1usize, 2] {
            let cf = flat(dim, s, 0.0, 1.0);
            let q = Quadrature::new(dim, s, QuadratureOrders::default_for(dim));
            let basis = SphereBasis::new(dim, s, 5).unwrap();
            let m0 = if dim == 1 { 3 } else { 2 };
            let y = &basis.space(m0).unwrap().functions[0];
            let p: Arc<dyn Field> = Arc::new(PolyField::homogeneous(&y.poly));
            let lambdas = default_grid(0.5);
            for factor in [1.0, 2.0] {
                let w: Arc<dyn Field> = Arc::new(SumField {
                    dim,
                    parts: vec![(factor, p.clone())],
                });
                let rep = blowup_analysis(w, &cf, &basis, m0, &lambdas, &q, &BlowupSettings::default()).unwrap();
                assert!((rep.beta.route_a[0] - factor).abs() < 1e-12);
                assert!((rep.beta.route_b[0].value - factor).abs() < 1e-12);
                for k in 1..rep.beta.route_a.len() {
                    assert!(rep.beta.route_a[k].abs() < 1e-12);
                    assert!(rep.beta.route_b[k].value.abs() < 1e-12);
                }
                assert!(rep.discrepancy.iter().all(|d| *d < 1e-12));
                assert!(rep.converged && rep.classified, "{:?}", rep.diagnostics);
                assert!(rep.normalization.iter().all(|v| (v - 1.0).abs() < 1e-12));
                assert!(rep.bessel_excess < 1e-10);
                assert!(rep.scaling_covariance < 1e-12);
            }
        }
    }

    #[test]
    fn route_b_limit_of_power_sequence() {
        let l: Vec<f64> = (0..10).map(|i| 0.1 * 0.5f64.powi(i)).collect();
        let x: Vec<f64> = l.iter().map(|v| 3.0 + 2.0 * v.powf(0.7)).collect();
        let (e, rate) = extrapolate_limit(&l, &x, 0.2);
        assert!((e.value - 3.0).abs() < 1e-12);
        assert!((rate.unwrap() - 0.7).abs() < 1e-9);
    }
}
