//! Dirichlet eigenpairs of the Laplacian on intervals and rectangles, and
//! functions on Ω stored as eigen-coefficients.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::legendre_on;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainKind {
    Interval { a: f64, b: f64 },
    Rectangle { lower: [f64; 2], upper: [f64; 2] },
}

/// Separable domain with a boundary point on a flat edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub boundary_point: Vec<f64>,
    pub chart_radius: f64,
}

/// Rigid motion x = x₀ + R y taking local coordinates, in which Ω lies on
/// the side y_N < 0, to the physical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub origin: [f64; 2],
    /// Columns are the images of the local axes; the last one is the outward normal.
    pub rotation: [[f64; 2]; 2],
    pub dim: usize,
}

impl Chart {
    pub fn to_global(&self, y: &[f64]) -> [f64; 2] {
        let mut x = self.origin;
        for i in 0..self.dim {
            for j in 0..self.dim {
                x[i] += self.rotation[i][j] * y[j];
            }
        }
        x
    }

    /// Local components of a global vector (Rᵀv).
    pub fn to_local_vec(&self, v: &[f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for j in 0..self.dim {
            for i in 0..self.dim {
                out[j] += self.rotation[i][j] * v[i];
            }
        }
        out
    }
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64, x0: f64, r0: f64) -> Self {
        DomainSpec {
            kind: DomainKind::Interval { a, b },
            boundary_point: vec![x0],
            chart_radius: r0,
        }
    }

    pub fn rectangle(lower: [f64; 2], upper: [f64; 2], x0: [f64; 2], r0: f64) -> Self {
        DomainSpec {
            kind: DomainKind::Rectangle { lower, upper },
            boundary_point: x0.to_vec(),
            chart_radius: r0,
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Rectangle { .. } => 2,
        }
    }

    /// Side lengths.
    pub fn lengths(&self) -> Vec<f64> {
        match self.kind {
            DomainKind::Interval { a, b } => vec![b - a],
            DomainKind::Rectangle { lower, upper } => vec![upper[0] - lower[0], upper[1] - lower[1]],
        }
    }

    pub fn lower(&self) -> Vec<f64> {
        match self.kind {
            DomainKind::Interval { a, .. } => vec![a],
            DomainKind::Rectangle { lower, .. } => lower.to_vec(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let lo = self.lower();
        let len = self.lengths();
        (0..self.dim()).all(|i| x[i] > lo[i] && x[i] < lo[i] + len[i])
    }

    /// Checks the boundary point and builds the chart whose last axis is the
    /// outward normal.
    pub fn chart(&self) -> Result<Chart> {
        let tol = 1e-12;
        if self.chart_radius <= 0.0 || !self.chart_radius.is_finite() {
            return Err(Error::Config("chart radius must be positive".into()));
        }
        match self.kind {
            DomainKind::Interval { a, b } => {
                if !(a < b) {
                    return Err(Error::Config("interval needs a < b".into()));
                }
                if self.boundary_point.len() != 1 {
                    return Err(Error::Config("boundary point must have one coordinate".into()));
                }
                let x0 = self.boundary_point[0];
                let normal = if (x0 - b).abs() < tol {
                    1.0
                } else if (x0 - a).abs() < tol {
                    -1.0
                } else {
                    return Err(Error::Config(format!("{x0} is not an endpoint of ({a}, {b})")));
                };
                if self.chart_radius > b - a {
                    return Err(Error::Config("chart radius exceeds the interval length".into()));
                }
                Ok(Chart {
                    origin: [x0, 0.0],
                    rotation: [[normal, 0.0], [0.0, 1.0]],
                    dim: 1,
                })
            }
            DomainKind::Rectangle { lower, upper } => {
                if !(lower[0] < upper[0] && lower[1] < upper[1]) {
                    return Err(Error::Config("rectangle needs lower < upper".into()));
                }
                if self.boundary_point.len() != 2 {
                    return Err(Error::Config("boundary point must have two coordinates".into()));
                }
                let x = [self.boundary_point[0], self.boundary_point[1]];
                let inside = |i: usize| x[i] >= lower[i] - tol && x[i] <= upper[i] + tol;
                if !(inside(0) && inside(1)) {
                    return Err(Error::Config("boundary point outside the rectangle".into()));
                }
                let normal = if (x[1] - lower[1]).abs() < tol {
                    [0.0, -1.0]
                } else if (x[1] - upper[1]).abs() < tol {
                    [0.0, 1.0]
                } else if (x[0] - lower[0]).abs() < tol {
                    [-1.0, 0.0]
                } else if (x[0] - upper[0]).abs() < tol {
                    [1.0, 0.0]
                } else {
                    return Err(Error::Config("boundary point is not on ∂Ω".into()));
                };
                let corners = [
                    [lower[0], lower[1]],
                    [upper[0], lower[1]],
                    [lower[0], upper[1]],
                    [upper[0], upper[1]],
                ];
                for c in corners {
                    let d = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
                    if d < self.chart_radius - tol {
                        return Err(Error::Config(format!(
                            "boundary point is {d} from a corner, less than the chart radius {}",
                            self.chart_radius
                        )));
                    }
                }
                let width = if normal[0] == 0.0 { upper[1] - lower[1] } else { upper[0] - lower[0] };
                if self.chart_radius > width {
                    return Err(Error::Config("chart radius exceeds the rectangle width".into()));
                }
                // tangent τ with det[τ, n] = 1
                let tangent = [normal[1], -normal[0]];
                Ok(Chart {
                    origin: x,
                    rotation: [[tangent[0], normal[0]], [tangent[1], normal[1]]],
                    dim: 2,
                })
            }
        }
    }
}

/// Eigenpair with multi-index `index` (one entry per axis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletEigenpair {
    pub index: Vec<usize>,
    pub eigenvalue: f64,
    lower: Vec<f64>,
    lengths: Vec<f64>,
}

impl DirichletEigenpair {
    /// Eigenpair of the given multi-index on `domain`.
    pub fn new(domain: &DomainSpec, index: &[usize]) -> Result<Self> {
        let lengths = domain.lengths();
        if index.len() != lengths.len() || index.iter().any(|&k| k == 0) {
            return Err(Error::Usage(format!("invalid eigen multi-index {index:?}")));
        }
        let eigenvalue = index
            .iter()
            .zip(&lengths)
            .map(|(&k, &l)| (k as f64 * PI / l).powi(2))
            .sum();
        Ok(DirichletEigenpair {
            index: index.to_vec(),
            eigenvalue,
            lower: domain.lower(),
            lengths,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for i in 0..self.index.len() {
            let l = self.lengths[i];
            v *= (2.0 / l).sqrt() * (self.index[i] as f64 * PI * (x[i] - self.lower[i]) / l).sin();
        }
        v
    }

    /// Value and gradient.
    pub fn eval_grad(&self, x: &[f64]) -> (f64, [f64; 2]) {
        let n = self.index.len();
        let mut f = [0.0; 2];
        let mut df = [0.0; 2];
        for i in 0..n {
            let l = self.lengths[i];
            let k = self.index[i] as f64 * PI / l;
            let c = (2.0 / l).sqrt();
            let arg = k * (x[i] - self.lower[i]);
            f[i] = c * arg.sin();
            df[i] = c * k * arg.cos();
        }
        if n == 1 {
            (f[0], [df[0], 0.0])
        } else {
            (f[0] * f[1], [df[0] * f[1], f[0] * df[1]])
        }
    }
}

/// The K smallest eigenpairs, sorted by eigenvalue with ties broken by the
/// lexicographic multi-index.
pub fn dirichlet_eigenpairs(domain: &DomainSpec, k: usize) -> Result<Vec<DirichletEigenpair>> {
    if k == 0 {
        return Err(Error::Usage("need at least one eigenpair".into()));
    }
    match domain.kind {
        DomainKind::Interval { a, b } => {
            if !(a < b) {
                return Err(Error::Config("interval needs a < b".into()));
            }
            (1..=k).map(|i| DirichletEigenpair::new(domain, &[i])).collect()
        }
        DomainKind::Rectangle { .. } => {
            let mut all = Vec::with_capacity(k * k);
            for i in 1..=k {
                for j in 1..=k {
                    all.push(DirichletEigenpair::new(domain, &[i, j])?);
                }
            }
            all.sort_by(|p, q| p.eigenvalue.total_cmp(&q.eigenvalue).then_with(|| p.index.cmp(&q.index)));
            all.truncate(k);
            Ok(all)
        }
    }
}

/// Default truncation by dimension.
pub fn default_truncation(dim: usize) -> usize {
    if dim == 1 {
        64
    } else {
        256
    }
}

/// Whether coefficients live in the primal space or represent a dual element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientRole {
    Primal,
    Dual,
}

/// Function on Ω as Σ c_k φ_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    pub domain: DomainSpec,
    pub modes: Vec<DirichletEigenpair>,
    pub coeffs: Vec<f64>,
    pub role: CoefficientRole,
    /// L² distance to the function this was projected from (0 if exact).
    pub truncation_residual: f64,
}

impl SpectralFunction {
    pub fn new(domain: &DomainSpec, modes: Vec<DirichletEigenpair>, coeffs: Vec<f64>) -> Result<Self> {
        if modes.len() != coeffs.len() {
            return Err(Error::Usage("coefficient count does not match the basis".into()));
        }
        Ok(SpectralFunction {
            domain: domain.clone(),
            modes,
            coeffs,
            role: CoefficientRole::Primal,
            truncation_residual: 0.0,
        })
    }

    /// Σ c_k φ_k over the K smallest modes.
    pub fn from_coefficients(domain: &DomainSpec, coeffs: &[f64]) -> Result<Self> {
        let modes = dirichlet_eigenpairs(domain, coeffs.len())?;
        Self::new(domain, modes, coeffs.to_vec())
    }

    /// Sum over explicitly indexed modes, e.g. `[([2, 1], 0.5)]`.
    pub fn from_indexed(domain: &DomainSpec, terms: &[(Vec<usize>, f64)]) -> Result<Self> {
        let mut modes = Vec::new();
        let mut coeffs = Vec::new();
        for (idx, c) in terms {
            modes.push(DirichletEigenpair::new(domain, idx)?);
            coeffs.push(*c);
        }
        Self::new(domain, modes, coeffs)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.modes.iter().zip(&self.coeffs).filter(|(_, c)| **c != 0.0).map(|(m, c)| c * m.eval(x)).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub(crate) fn check_compatible(&self, other: &SpectralFunction) -> Result<()> {
        if self.domain != other.domain || self.modes.len() != other.modes.len() {
            return Err(Error::Usage("functions live on different domains or truncations".into()));
        }
        if self.modes.iter().zip(&other.modes).any(|(a, b)| a.index != b.index) {
            return Err(Error::Usage("functions use different eigenbases".into()));
        }
        Ok(())
    }

    /// Membership proxy Σ μ_k^s c_k².
    pub fn hs_energy(&self, s: f64) -> f64 {
        self.modes.iter().zip(&self.coeffs).map(|(m, c)| m.eigenvalue.powf(s) * c * c).sum()
    }
}

/// Tensor Gauss–Legendre rule over Ω.
#[derive(Debug, Clone)]
pub struct DomainQuadrature {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl DomainQuadrature {
    pub fn new(domain: &DomainSpec, n: usize) -> Self {
        let lo = domain.lower();
        let len = domain.lengths();
        let axes: Vec<_> = (0..domain.dim()).map(|i| legendre_on(n, lo[i], lo[i] + len[i])).collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        if axes.len() == 1 {
            for (&x, &w) in axes[0].nodes.iter().zip(&axes[0].weights) {
                points.push([x, 0.0]);
                weights.push(w);
            }
        } else {
            for (&x, &wx) in axes[0].nodes.iter().zip(&axes[0].weights) {
                for (&y, &wy) in axes[1].nodes.iter().zip(&axes[1].weights) {
                    points.push([x, y]);
                    weights.push(wx * wy);
                }
            }
        }
        DomainQuadrature { points, weights }
    }

    /// Node count per axis able to resolve every mode in `modes`.
    pub fn nodes_for(modes: &[DirichletEigenpair]) -> usize {
        let kmax = modes.iter().flat_map(|m| m.index.iter().copied()).max().unwrap_or(1);
        64.max(2 * kmax + 8)
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, &w)| w * f(p)).sum()
    }
}

/// Result of projecting a pointwise function.
#[derive(Debug, Clone)]
pub struct Projection {
    pub function: SpectralFunction,
    /// ‖f − Σ c_k φ_k‖_{L²(Ω)}.
    pub l2_residual: f64,
    /// Largest coefficient change under a 1.5× refined rule.
    pub quadrature_error: f64,
    /// Set when the quadrature error exceeds 1e−10 relative.
    pub flagged: bool,
}

pub fn project(f: impl Fn(&[f64]) -> f64, domain: &DomainSpec, k: usize) -> Result<Projection> {
    let modes = dirichlet_eigenpairs(domain, k)?;
    let n = DomainQuadrature::nodes_for(&modes);
    let coeffs_with = |q: &DomainQuadrature| -> Vec<f64> {
        let fv: Vec<f64> = q.points.iter().map(|p| f(&p[..])).collect();
        modes
            .iter()
            .map(|m| q.points.iter().zip(&q.weights).zip(&fv).map(|((p, w), fx)| w * fx * m.eval(p)).sum())
            .collect()
    };
    let q = DomainQuadrature::new(domain, n);
    let coeffs = coeffs_with(&q);
    let fine = coeffs_with(&DomainQuadrature::new(domain, n + n / 2));
    let quadrature_error = coeffs.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut function = SpectralFunction::new(domain, modes, coeffs)?;
    let l2_residual = q
        .integrate(|p| {
            let d = f(&p[..]) - function.eval(p);
            d * d
        })
        .max(0.0)
        .sqrt();
    function.truncation_residual = l2_residual;
    let scale = function.l2_norm().max(1.0);
    Ok(Projection {
        function,
        l2_residual,
        quadrature_error,
        flagged: quadrature_error > 1e-10 * scale,
    })
}

/// Σ μ_k^s c¹_k c²_k.
pub fn hs_scalar_product(v1: &SpectralFunction, v2: &SpectralFunction, s: f64) -> Result<f64> {
    v1.check_compatible(v2)?;
    Ok(v1
        .modes
        .iter()
        .zip(v1.coeffs.iter().zip(&v2.coeffs))
        .map(|(m, (a, b))| m.eigenvalue.powf(s) * a * b)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> DomainSpec {
        DomainSpec::interval(0.0, 1.0, 1.0, 0.5)
    }

    #[test]
    fn interval_first_eigenpairs() {
        let e = dirichlet_eigenpairs(&unit(), 3).unwrap();
        let pi2 = PI * PI;
        for (k, p) in e.iter().enumerate() {
            let kk = (k + 1) as f64;
            assert!((p.eigenvalue - kk * kk * pi2).abs() < 1e-12);
        }
        assert!((e[0].eval(&[0.3]) - 2f64.sqrt() * (0.3 * PI).sin()).abs() < 1e-15);
    }

    #[test]
    fn rectangle_ordering_and_ties() {
        let d = DomainSpec::rectangle([0.0, 0.0], [1.0, 1.0], [0.5, 0.0], 0.4);
        let e = dirichlet_eigenpairs(&d, 4).unwrap();
        assert!((e[0].eigenvalue - 2.0 * PI * PI).abs() < 1e-12);
        assert_eq!(e[1].index, vec![1, 2]);
        assert_eq!(e[2].index, vec![2, 1]);
        assert_eq!(e[3].index, vec![2, 2]);
    }

    #[test]
    fn orthonormal_under_quadrature() {
        for d in [unit(), DomainSpec::rectangle([0.0, 0.0], [1.0, 2.0], [0.5, 0.0], 0.4)] {
            let e = dirichlet_eigenpairs(&d, 12).unwrap();
            let q = DomainQuadrature::new(&d, DomainQuadrature::nodes_for(&e));
            for a in &e {
                for b in &e {
                    let g = q.integrate(|p| a.eval(p) * b.eval(p));
                    let delta = if a.index == b.index { 1.0 } else { 0.0 };
                    assert!((g - delta).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        let d = unit();
        let p = project(|x| 2f64.sqrt() * (2.0 * PI * x[0]).sin(), &d, 5).unwrap();
        for (k, c) in p.function.coeffs.iter().enumerate() {
            let want = if k == 1 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-10);
        }
        // ∫_0^1 x(1−x)√2 sin(πx) dx by an independent midpoint sum
        let n = 200_000;
        let h = 1.0 / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                h * x * (1.0 - x) * 2f64.sqrt() * (PI * x).sin()
            })
            .sum();
        let p = project(|x| x[0] * (1.0 - x[0]), &d, 1).unwrap();
        assert!((p.function.coeffs[0] - oracle).abs() < 1e-9);
        assert!(!p.flagged);
        let z = project(|_| 0.0, &d, 4).unwrap();
        assert!(z.function.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn hs_product_examples() {
        let d = unit();
        let v = SpectralFunction::from_coefficients(&d, &[1.0, 1.0]).unwrap();
        let w = SpectralFunction::from_coefficients(&d, &[1.0, -1.0]).unwrap();
        let want = (PI * PI).powf(0.3) - (4.0 * PI * PI).powf(0.3);
        assert!((hs_scalar_product(&v, &w, 0.3).unwrap() - want).abs() < 1e-12);
        let phi1 = SpectralFunction::from_coefficients(&d, &[1.0, 0.0]).unwrap();
        assert!((hs_scalar_product(&phi1, &phi1, 0.5).unwrap() - PI).abs() < 1e-12);
        let other = SpectralFunction::from_coefficients(&DomainSpec::interval(0.0, 2.0, 2.0, 0.5), &[1.0, 0.0]).unwrap();
        assert!(hs_scalar_product(&phi1, &other, 0.5).is_err());
    }

    #[test]
    fn chart_orientation() {
        let d = DomainSpec::rectangle([0.0, 0.0], [1.0, 1.0], [0.5, 0.0], 0.4);
        let c = d.chart().unwrap();
        // outward normal is −e_2; local y_N < 0 is inside
        let x = c.to_global(&[0.0, -0.1]);
        assert!(d.contains(&x));
        let r = c.rotation;
        assert!((r[0][0] * r[1][1] - r[0][1] * r[1][0] - 1.0).abs() < 1e-15);
        let near_corner = DomainSpec::rectangle([0.0, 0.0], [1.0, 1.0], [0.1, 0.0], 0.4);
        assert!(near_corner.chart().is_err());
        let left = DomainSpec::interval(-1.0, 0.0, -1.0, 0.5).chart().unwrap();
        assert!(DomainSpec::interval(-1.0, 0.0, -1.0, 0.5).contains(&left.to_global(&[-0.2])));
    }
}
