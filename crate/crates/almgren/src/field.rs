//! Scalar fields on the half-ball in straightened coordinates z = (y, t).
//!
//! Points use the layout [y₁, t, 0] for N = 1 and [y₁, y₂, t] for N = 2.

use std::sync::Arc;

use crate::polynomial::{HomogeneousPolynomial, Polynomial};
use crate::Point;

pub trait Field: Send + Sync {
    fn dim(&self) -> usize;

    /// Value and gradient at z.
    fn eval(&self, z: &Point) -> (f64, Point);

    fn value(&self, z: &Point) -> f64 {
        self.eval(z).0
    }
}

/// Index of the t variable in the point layout.
pub fn t_index(dim: usize) -> usize {
    dim
}

/// Index of the normal variable y_N.
pub fn normal_index(dim: usize) -> usize {
    dim - 1
}

pub fn norm(z: &Point) -> f64 {
    (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt()
}

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Debug, Clone)]
pub struct PolyField {
    pub dim: usize,
    pub poly: Polynomial,
}

impl PolyField {
    pub fn new(dim: usize, poly: Polynomial) -> Self {
        PolyField { dim, poly }
    }

    pub fn homogeneous(p: &HomogeneousPolynomial) -> Self {
        PolyField {
            dim: p.dim,
            poly: p.poly.clone(),
        }
    }

    /// The constant function c.
    pub fn constant(dim: usize, c: f64) -> Self {
        PolyField {
            dim,
            poly: Polynomial::from_terms(dim + 1, vec![([0, 0, 0], c)]),
        }
    }
}

impl Field for PolyField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, z: &Point) -> (f64, Point) {
        self.poly.eval_grad(z)
    }
}

/// |z|^a P(z/|z|) for a homogeneous P of degree d.
#[derive(Debug, Clone)]
pub struct RadialPowerField {
    pub exponent: f64,
    pub poly: HomogeneousPolynomial,
}

impl Field for RadialPowerField {
    fn dim(&self) -> usize {
        self.poly.dim
    }

    fn eval(&self, z: &Point) -> (f64, Point) {
        let r = norm(z);
        if r == 0.0 {
            return (0.0, [0.0; 3]);
        }
        let d = self.poly.degree as f64;
        let k = self.exponent - d;
        let (p, g) = self.poly.eval_grad(z);
        let f = r.powf(k);
        let df = k * r.powf(k - 2.0);
        (f * p, [f * g[0] + df * z[0] * p, f * g[1] + df * z[1] * p, f * g[2] + df * z[2] * p])
    }
}

/// Linear combination Σ c_i F_i.
#[derive(Clone)]
pub struct SumField {
    pub dim: usize,
    pub parts: Vec<(f64, Arc<dyn Field>)>,
}

impl Field for SumField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, z: &Point) -> (f64, Point) {
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for (c, f) in &self.parts {
            let (a, b) = f.eval(z);
            v += c * a;
            for i in 0..3 {
                g[i] += c * b[i];
            }
        }
        (v, g)
    }
}

/// z ↦ F(λz) with gradient λ∇F(λz), times a constant.
#[derive(Clone)]
pub struct ScaledField {
    pub inner: Arc<dyn Field>,
    pub lambda: f64,
    pub factor: f64,
}

impl Field for ScaledField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, z: &Point) -> (f64, Point) {
        let l = self.lambda;
        let (v, g) = self.inner.eval(&[l * z[0], l * z[1], l * z[2]]);
        let c = self.factor * l;
        (self.factor * v, [c * g[0], c * g[1], c * g[2]])
    }
}
