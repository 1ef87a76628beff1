//! The extension U(x, t) = Σ c_k φ_k(x) ψ_s(√μ_k t) of a spectral function to
//! the half-cylinder Ω × (0, ∞), and its weighted Neumann trace.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::eigenbasis::{dirichlet_eigenpairs, DirichletEigenpair, SpectralFunction};
use crate::error::{Error, Result};
use crate::extrapolate::{richardson, Extrapolated};
use crate::quadrature::{jacobi_left_power, legendre_on};
use crate::special::{bessel_k_complementary, gamma};

/// Closed-form κ_s = 2^{1−2s} Γ(1−s)/Γ(s).
pub fn kappa_gamma_formula(s: f64) -> f64 {
    2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s)
}

/// Below this distance from an integer the Bessel route is replaced by the
/// integral representation K_ν(x) = ∫_0^∞ e^{−x cosh u} cosh(νu) du.
const FALLBACK_MARGIN: f64 = 1e-3;

/// Kernel ψ_s and its derivative via the integral representation, used near
/// s ∈ {0, 1}.
pub fn psi_pair_integral(s: f64, xi: f64) -> (f64, f64) {
    if xi <= 0.0 {
        return (1.0, f64::NEG_INFINITY);
    }
    // integrand is negligible once x cosh u > x + 745
    let umax = ((xi + 745.0) / xi).acosh();
    let panels = 64;
    let h = umax / panels as f64;
    let mut ks = 0.0;
    let mut k1s = 0.0;
    for p in 0..panels {
        let rule = legendre_on(16, p as f64 * h, (p + 1) as f64 * h);
        for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
            let e = (-xi * u.cosh()).exp();
            ks += w * e * (s * u).cosh();
            k1s += w * e * ((1.0 - s) * u).cosh();
        }
    }
    let c = 2f64.powf(1.0 - s) / gamma(s);
    let xs = xi.powf(s);
    (c * xs * ks, -c * xs * k1s)
}

/// ψ_s(ξ) = 2^{1−s}/Γ(s) ξ^s K_s(ξ) and ψ_s′(ξ) = −2^{1−s}/Γ(s) ξ^s K_{1−s}(ξ).
pub fn psi_pair(s: f64, xi: f64) -> (f64, f64) {
    if xi <= 0.0 {
        let d = if s < 0.5 {
            f64::NEG_INFINITY
        } else if s == 0.5 {
            -1.0
        } else {
            0.0
        };
        return (1.0, d);
    }
    if xi > 740.0 {
        return (0.0, 0.0);
    }
    if s < FALLBACK_MARGIN || s > 1.0 - FALLBACK_MARGIN {
        return psi_pair_integral(s, xi);
    }
    let (ks, k1s) = bessel_k_complementary(s, xi);
    let c = 2f64.powf(1.0 - s) / gamma(s) * xi.powf(s);
    (c * ks, -c * k1s)
}

/// The separated kernel with κ_s and the checks that validate it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionKernel {
    pub s: f64,
    /// Extrapolated lim_{ξ→0} −ξ^{1−2s} ψ′(ξ).
    pub kappa: f64,
    pub kappa_error: f64,
    pub kappa_oracle: f64,
    pub kappa_discrepancy: f64,
    /// Log-spaced table on [1e−8, 40] of (ξ, ψ, ψ′).
    pub table: Vec<[f64; 3]>,
    /// Largest scale-normalized ODE residual over interior table nodes.
    pub max_ode_residual: f64,
    /// Absolute ODE residual over the nodes with ξ ≥ 1e−2.
    pub max_abs_ode_residual: f64,
}

/// Second derivative of ψ by Richardson-refined central differences of ψ′.
pub fn psi_second_derivative(s: f64, xi: f64) -> f64 {
    let h = 1e-3 * xi;
    let d = |h: f64| (psi_pair(s, xi + h).1 - psi_pair(s, xi - h).1) / (2.0 * h);
    let (d1, d2) = (d(h), d(h / 2.0));
    (4.0 * d2 - d1) / 3.0
}

/// ODE residual ψ″ + ((1−2s)/ξ)ψ′ − ψ, absolute and divided by the natural
/// scale |ψ″| + |ψ′|/ξ + |ψ|.
pub fn ode_residual(s: f64, xi: f64) -> (f64, f64) {
    let (p, dp) = psi_pair(s, xi);
    let d2 = psi_second_derivative(s, xi);
    let drift = (1.0 - 2.0 * s) / xi * dp;
    let r = d2 + drift - p;
    (r.abs(), r.abs() / (d2.abs() + dp.abs() / xi + p.abs()))
}

/// −ξ^{1−2s} ψ′(ξ) extrapolated to ξ → 0 from ξ₀, ξ₀/2, ξ₀/4.
pub fn kappa_limit(s: f64, xi0: f64) -> Extrapolated {
    let f = |xi: f64| -xi.powf(1.0 - 2.0 * s) * psi_pair(s, xi).1;
    let samples = [f(xi0), f(xi0 / 2.0), f(xi0 / 4.0)];
    richardson(&samples, 2.0, &[2.0 - 2.0 * s, 2.0])
}

pub fn build_kernel(s: f64) -> Result<ExtensionKernel> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Usage(format!("kernel order {s} outside (0, 1)")));
    }
    let n = 400;
    let (lo, hi) = (1e-8f64.ln(), 40f64.ln());
    let table: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let xi = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            let (p, d) = psi_pair(s, xi);
            [xi, p, d]
        })
        .collect();
    let mut max_ode_residual = 0.0f64;
    let mut max_abs = 0.0f64;
    for row in &table[1..n - 1] {
        let (abs, rel) = ode_residual(s, row[0]);
        max_ode_residual = max_ode_residual.max(rel);
        if row[0] >= 1e-2 {
            max_abs = max_abs.max(abs);
        }
    }
    let k = kappa_limit(s, 1e-3);
    let k2 = kappa_limit(s, 5e-4);
    let kappa_oracle = kappa_gamma_formula(s);
    let kernel = ExtensionKernel {
        s,
        kappa: k.value,
        kappa_error: k.error.max((k.value - k2.value).abs()),
        kappa_oracle,
        kappa_discrepancy: (k.value - kappa_oracle).abs(),
        table,
        max_ode_residual,
        max_abs_ode_residual: max_abs,
    };
    if !(kernel.max_ode_residual < 1e-8) || !kernel.kappa.is_finite() || kernel.kappa <= 0.0 {
        return Err(Error::Numeric(format!(
            "kernel for s = {s} fails its checks (ODE residual {:e}, κ = {})",
            kernel.max_ode_residual, kernel.kappa
        )));
    }
    Ok(kernel)
}

impl ExtensionKernel {
    pub fn psi(&self, xi: f64) -> f64 {
        psi_pair(self.s, xi).0
    }

    pub fn dpsi(&self, xi: f64) -> f64 {
        psi_pair(self.s, xi).1
    }

    /// Weighted energy ∫_0^T ξ^{1−2s}(ψ_δ′² + ψ_δ²) of ψ_δ = ψ(1 + δ sin(πξ/T)).
    pub fn perturbed_energy(&self, delta: f64, t_max: f64) -> f64 {
        let s = self.s;
        let w = PI / t_max;
        let eval = |xi: f64| {
            let (p, dp) = psi_pair(s, xi);
            let bump = 1.0 + delta * (w * xi).sin();
            let v = p * bump;
            // ξ^{1−2s} ψ_δ′, bounded near 0
            let flux = xi.powf(1.0 - 2.0 * s) * (dp * bump + p * delta * w * (w * xi).cos());
            (v, flux)
        };
        // split at ξ = 1: singular weights near 0, smooth panels beyond
        let a = 1.0 - 2.0 * s;
        let head_val = jacobi_left_power(40, 0.0, 1.0, a);
        let head_flux = jacobi_left_power(40, 0.0, 1.0, -a);
        let mut e = 0.0;
        for (&x, &wt) in head_val.nodes.iter().zip(&head_val.weights) {
            e += wt * eval(x).0.powi(2);
        }
        for (&x, &wt) in head_flux.nodes.iter().zip(&head_flux.weights) {
            e += wt * eval(x).1.powi(2);
        }
        let panels = (t_max.ceil() as usize).max(1) * 2;
        let h = (t_max - 1.0) / panels as f64;
        for p in 0..panels {
            let r = legendre_on(16, 1.0 + p as f64 * h, 1.0 + (p + 1) as f64 * h);
            for (&x, &wt) in r.nodes.iter().zip(&r.weights) {
                let (v, flux) = eval(x);
                e += wt * (x.powf(a) * v * v + x.powf(-a) * flux * flux);
            }
        }
        e
    }
}

/// Evaluator of U = Σ c_k φ_k(x) ψ_s(√μ_k t) and its gradient.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    pub u: SpectralFunction,
    pub kernel: Arc<ExtensionKernel>,
    active: Vec<(DirichletEigenpair, f64, f64)>,
    next_eigenvalue: f64,
}

/// Value, x-gradient and t-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionSample {
    pub value: f64,
    pub grad_x: [f64; 2],
    pub dt: f64,
}

pub fn extend(u: &SpectralFunction, kernel: Arc<ExtensionKernel>) -> Result<ExtensionField> {
    let active = u
        .modes
        .iter()
        .zip(&u.coeffs)
        .filter(|(_, c)| **c != 0.0)
        .map(|(m, &c)| (m.clone(), c, m.eigenvalue.sqrt()))
        .collect();
    let lmax = u.modes.iter().map(|m| m.eigenvalue).fold(0.0, f64::max);
    let k = u.len() + 1;
    let next_eigenvalue = dirichlet_eigenpairs(&u.domain, k)?
        .into_iter()
        .map(|m| m.eigenvalue)
        .find(|&e| e > lmax)
        .unwrap_or(lmax);
    Ok(ExtensionField {
        u: u.clone(),
        kernel,
        active,
        next_eigenvalue,
    })
}

impl ExtensionField {
    pub fn s(&self) -> f64 {
        self.kernel.s
    }

    pub fn eval(&self, x: &[f64], t: f64) -> ExtensionSample {
        let s = self.kernel.s;
        let mut out = ExtensionSample {
            value: 0.0,
            grad_x: [0.0; 2],
            dt: 0.0,
        };
        for (m, c, sq) in &self.active {
            let (p, dp) = psi_pair(s, sq * t);
            let (f, g) = m.eval_grad(x);
            out.value += c * f * p;
            out.grad_x[0] += c * g[0] * p;
            out.grad_x[1] += c * g[1] * p;
            out.dt += c * f * sq * dp;
        }
        out
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        self.eval(x, t).value
    }

    /// Bound on the omitted modes: ‖u − Σ c_k φ_k‖_{L²} ψ_s(√μ_{K+1} t).
    pub fn tail_bound(&self, t: f64) -> f64 {
        self.u.truncation_residual * psi_pair(self.s(), self.next_eigenvalue.sqrt() * t).0
    }

    /// −t^{1−2s} ∂_t U(x, t) extrapolated to t → 0 from t₀, t₀/2, t₀/4.
    pub fn neumann_trace(&self, x: &[f64], t0: f64) -> NeumannTrace {
        let s = self.s();
        let f = |t: f64| -t.powf(1.0 - 2.0 * s) * self.eval(x, t).dt;
        let samples = [f(t0), f(t0 / 2.0), f(t0 / 4.0)];
        let e = richardson(&samples, 2.0, &[2.0 - 2.0 * s, 2.0]);
        let scale = e.value.abs().max(1e-300);
        NeumannTrace {
            value: e.value,
            error: e.error,
            flagged: !(e.value.is_finite() && e.error <= 1e-6 * scale.max(1.0)),
        }
    }

    /// |div(t^{1−2s}∇U)| / (t^{1−2s}(|ΔU| + |∂_tU|/t + 1)), with Δ_x U from the
    /// eigen-relation and ∂²_t U from differences of the analytic ∂_t U.
    pub fn divergence_residual(&self, x: &[f64], t: f64) -> f64 {
        let s = self.s();
        let lap: f64 = self
            .active
            .iter()
            .map(|(m, c, sq)| -c * m.eigenvalue * m.eval(x) * psi_pair(s, sq * t).0)
            .sum();
        let h = 1e-3 * t;
        let d = |h: f64| (self.eval(x, t + h).dt - self.eval(x, t - h).dt) / (2.0 * h);
        let utt = (4.0 * d(h / 2.0) - d(h)) / 3.0;
        let ut = self.eval(x, t).dt;
        let w = t.powf(1.0 - 2.0 * s);
        let div = w * (lap + utt + (1.0 - 2.0 * s) / t * ut);
        div.abs() / (w * (lap.abs() + utt.abs() + ut.abs() / t + 1.0))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct NeumannTrace {
    pub value: f64,
    pub error: f64,
    pub flagged: bool,
}
