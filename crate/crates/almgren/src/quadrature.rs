//! Gauss rules: Jacobi on an interval, and the product rules built on it for
//! the weighted half-sphere, half-ball, equator and flat ball.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::special::ln_gamma;
use crate::Point;

/// One-dimensional rule.
#[derive(Debug, Clone)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1D {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Jacobi polynomial P_n^{(α,β)}(x) and its derivative.
fn jacobi_p(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    fn p(n: usize, a: f64, b: f64, x: f64) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let mut p0 = 1.0;
        let mut p1 = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
        for k in 1..n {
            let k = k as f64;
            let c = 2.0 * k + a + b;
            let a1 = 2.0 * (k + 1.0) * (k + a + b + 1.0) * c;
            let a2 = (c + 1.0) * (a * a - b * b);
            let a3 = c * (c + 1.0) * (c + 2.0);
            let a4 = 2.0 * (k + a) * (k + b) * (c + 2.0);
            let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
            p0 = p1;
            p1 = p2;
        }
        p1
    }
    let v = p(n, a, b, x);
    let d = if n == 0 {
        0.0
    } else {
        0.5 * (n as f64 + a + b + 1.0) * p(n - 1, a + 1.0, b + 1.0, x)
    };
    (v, d)
}

/// Gauss–Jacobi rule on [-1, 1] for the weight (1−x)^α (1+x)^β.
///
/// Golub–Welsch for the starting nodes, Newton polish, then the closed-form
/// Christoffel weights.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Rule1D {
    assert!(n >= 1);
    assert!(alpha > -1.0 && beta > -1.0);
    let ab = alpha + beta;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        jm[(k, k)] = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        if k + 1 < n {
            let j = kf + 1.0;
            let b2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + alpha) * (j + beta) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            jm[(k, k + 1)] = b2.sqrt();
            jm[(k + 1, k)] = b2.sqrt();
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let lnc = ln_gamma(n as f64 + alpha + 1.0) + ln_gamma(n as f64 + beta + 1.0)
        - ln_gamma(n as f64 + ab + 1.0)
        - ln_gamma(n as f64 + 1.0)
        + (ab + 1.0) * 2f64.ln();
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (v, d) = jacobi_p(n, alpha, beta, *x);
            let step = v / d;
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = jacobi_p(n, alpha, beta, *x);
        weights.push((lnc - ((1.0 - *x) * (1.0 + *x) * d * d).ln()).exp());
    }
    Rule1D { nodes, weights }
}

pub fn gauss_legendre(n: usize) -> Rule1D {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Legendre rule mapped to [a, b].
pub fn legendre_on(n: usize, a: f64, b: f64) -> Rule1D {
    let base = gauss_legendre(n);
    let h = 0.5 * (b - a);
    Rule1D {
        nodes: base.nodes.iter().map(|x| a + h * (x + 1.0)).collect(),
        weights: base.weights.iter().map(|w| w * h).collect(),
    }
}

/// Rule on [a, b] for the weight (x − a)^p.
pub fn jacobi_left_power(n: usize, a: f64, b: f64, p: f64) -> Rule1D {
    let base = gauss_jacobi(n, 0.0, p);
    let h = 0.5 * (b - a);
    let scale = h.powf(p + 1.0);
    Rule1D {
        nodes: base.nodes.iter().map(|x| a + h * (x + 1.0)).collect(),
        weights: base.weights.iter().map(|w| w * scale).collect(),
    }
}

/// Node counts for the geometric rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOrders {
    /// Polar (N = 1) or elevation (N = 2) nodes per half.
    pub polar: usize,
    /// Azimuth nodes per half-turn (N = 2 only).
    pub azimuth: usize,
    /// Radial nodes for half-ball integrals.
    pub radial: usize,
    /// Radial (N = 2) or per-half (N = 1) nodes for the flat ball.
    pub flat: usize,
}

impl QuadratureOrders {
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            QuadratureOrders {
                polar: 64,
                azimuth: 1,
                radial: 48,
                flat: 48,
            }
        } else {
            QuadratureOrders {
                polar: 48,
                azimuth: 32,
                radial: 32,
                flat: 32,
            }
        }
    }

    /// Every count multiplied by `f` (at least one node).
    pub fn scaled(&self, f: f64) -> Self {
        let sc = |n: usize| ((n as f64 * f).round() as usize).max(1);
        QuadratureOrders {
            polar: sc(self.polar),
            azimuth: sc(self.azimuth),
            radial: sc(self.radial),
            flat: sc(self.flat),
        }
    }
}

/// Rule for ∫_{S⁺} θ_{N+1}^{1−2s} f(θ) dS on the unit upper half-sphere in
/// ℝ^{N+1}. Both pieces are split along the seam θ_N = 0 so that fields with
/// a kink there are integrated piecewise-smoothly.
#[derive(Debug, Clone)]
pub struct HalfSphereRule {
    pub dim: usize,
    pub s: f64,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl HalfSphereRule {
    pub fn new(dim: usize, s: f64, orders: &QuadratureOrders) -> Self {
        let a = 1.0 - 2.0 * s;
        // angle from the equator with the weight angle^a absorbed
        let elev = jacobi_left_power(orders.polar, 0.0, PI / 2.0, a);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match dim {
            1 => {
                for side in [1.0, -1.0] {
                    for (&e, &w) in elev.nodes.iter().zip(&elev.weights) {
                        let f = (e.sin() / e).powf(a);
                        points.push([side * e.cos(), e.sin(), 0.0]);
                        weights.push(w * f);
                    }
                }
            }
            2 => {
                let az = [legendre_on(orders.azimuth, 0.0, PI), legendre_on(orders.azimuth, PI, 2.0 * PI)];
                for (&e, &w) in elev.nodes.iter().zip(&elev.weights) {
                    let f = (e.sin() / e).powf(a) * e.cos();
                    for rule in &az {
                        for (&om, &wa) in rule.nodes.iter().zip(&rule.weights) {
                            points.push([e.cos() * om.cos(), e.cos() * om.sin(), e.sin()]);
                            weights.push(w * f * wa);
                        }
                    }
                }
            }
            _ => panic!("dimension must be 1 or 2"),
        }
        HalfSphereRule { dim, s, points, weights }
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, &w)| w * f(p)).sum()
    }

    /// Closed form of ∫_{S⁺} θ_{N+1}^{1−2s} dS = |S^{N−1}| · B((a+1)/2, N/2) / 2.
    pub fn exact_measure(dim: usize, s: f64) -> f64 {
        let a = 1.0 - 2.0 * s;
        let n = dim as f64;
        let ln_b = ln_gamma((a + 1.0) / 2.0) + ln_gamma(n / 2.0) - ln_gamma((a + 1.0 + n) / 2.0);
        let sphere = if dim == 1 { 2.0 } else { 2.0 * PI };
        0.5 * sphere * ln_b.exp()
    }
}

/// Rule on [0, 1] for ∫ ρ^p f(ρ) dρ; scaled copies serve any radius.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub power: f64,
    pub base: Rule1D,
}

impl RadialRule {
    pub fn new(n: usize, power: f64) -> Self {
        RadialRule {
            power,
            base: jacobi_left_power(n, 0.0, 1.0, power),
        }
    }

    /// Nodes and weights for ∫_0^r ρ^p f(ρ) dρ.
    pub fn scaled(&self, r: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let sc = r.powf(self.power + 1.0);
        self.base.nodes.iter().zip(&self.base.weights).map(move |(&x, &w)| (r * x, w * sc))
    }
}

/// Rule on the unit sphere S′ = ∂B′_1 of the flat boundary ℝ^N (two points
/// for N = 1, a circle split at the seam for N = 2).
#[derive(Debug, Clone)]
pub struct EquatorRule {
    pub dim: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl EquatorRule {
    pub fn new(dim: usize, orders: &QuadratureOrders) -> Self {
        match dim {
            1 => EquatorRule {
                dim,
                points: vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
                weights: vec![1.0, 1.0],
            },
            2 => {
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (a, b) in [(0.0, PI), (PI, 2.0 * PI)] {
                    let r = legendre_on(orders.azimuth, a, b);
                    for (&om, &w) in r.nodes.iter().zip(&r.weights) {
                        points.push([om.cos(), om.sin(), 0.0]);
                        weights.push(w);
                    }
                }
                EquatorRule { dim, points, weights }
            }
            _ => panic!("dimension must be 1 or 2"),
        }
    }

    /// ∫_{S′_r} f dS′.
    pub fn integrate(&self, r: f64, f: impl Fn(&Point) -> f64) -> f64 {
        let sc = r.powi(self.dim as i32 - 1);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| w * sc * f(&[r * p[0], r * p[1], 0.0]))
            .sum()
    }
}

/// Rule on the unit flat ball B′_1 ⊂ ℝ^N (t = 0), split along y_N = 0.
#[derive(Debug, Clone)]
pub struct FlatBallRule {
    pub dim: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl FlatBallRule {
    pub fn new(dim: usize, orders: &QuadratureOrders) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match dim {
            1 => {
                for (a, b) in [(-1.0, 0.0), (0.0, 1.0)] {
                    let r = legendre_on(orders.flat, a, b);
                    for (&y, &w) in r.nodes.iter().zip(&r.weights) {
                        points.push([y, 0.0, 0.0]);
                        weights.push(w);
                    }
                }
            }
            2 => {
                let rad = jacobi_left_power(orders.flat, 0.0, 1.0, 1.0);
                for (a, b) in [(0.0, PI), (PI, 2.0 * PI)] {
                    let az = legendre_on(orders.azimuth, a, b);
                    for (&rho, &wr) in rad.nodes.iter().zip(&rad.weights) {
                        for (&om, &wa) in az.nodes.iter().zip(&az.weights) {
                            points.push([rho * om.cos(), rho * om.sin(), 0.0]);
                            weights.push(wr * wa);
                        }
                    }
                }
            }
            _ => panic!("dimension must be 1 or 2"),
        }
        FlatBallRule { dim, points, weights }
    }

    /// ∫_{B′_r} f dy.
    pub fn integrate(&self, r: f64, f: impl Fn(&Point) -> f64) -> f64 {
        let sc = r.powi(self.dim as i32);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| w * sc * f(&[r * p[0], r * p[1], 0.0]))
            .sum()
    }
}

/// All geometric rules needed at one (N, s).
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub dim: usize,
    pub s: f64,
    pub orders: QuadratureOrders,
    pub sphere: HalfSphereRule,
    pub equator: EquatorRule,
    pub flat: FlatBallRule,
    radial_n: usize,
}

impl Quadrature {
    pub fn new(dim: usize, s: f64, orders: QuadratureOrders) -> Self {
        Quadrature {
            dim,
            s,
            orders,
            sphere: HalfSphereRule::new(dim, s, &orders),
            equator: EquatorRule::new(dim, &orders),
            flat: FlatBallRule::new(dim, &orders),
            radial_n: orders.radial,
        }
    }

    pub fn radial(&self, extra_power: f64) -> RadialRule {
        RadialRule::new(self.radial_n, self.dim as f64 + 1.0 - 2.0 * self.s + extra_power)
    }

    /// ∫_{S⁺} θ_{N+1}^{1−2s} f(rθ) dS (unit-sphere measure, argument scaled).
    pub fn sphere_at(&self, r: f64, f: impl Fn(&Point) -> f64) -> f64 {
        self.sphere.integrate(|p| f(&[r * p[0], r * p[1], r * p[2]]))
    }

    /// ∫_{B_r⁺} t^{1−2s} |z|^{extra} g(z) dz with the integrand handed the
    /// point z and its direction θ = z/|z|.
    pub fn ball(&self, r: f64, extra_power: f64, g: impl Fn(&Point, &Point) -> f64) -> f64 {
        let rad = self.radial(extra_power);
        let mut total = 0.0;
        for (rho, wr) in rad.scaled(r) {
            let inner: f64 = self
                .sphere
                .points
                .iter()
                .zip(&self.sphere.weights)
                .map(|(th, &w)| w * g(&[rho * th[0], rho * th[1], rho * th[2]], th))
                .sum();
            total += wr * inner;
        }
        total
    }
}
