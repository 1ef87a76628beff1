//! Sparse polynomials in (y_1, .., y_N, t) with N ≤ 2.

use serde::{Deserialize, Serialize};

use crate::Point;

pub type Exponents = [u32; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    /// Number of variables, N + 1.
    pub nvars: usize,
    pub terms: Vec<(Exponents, f64)>,
}

fn ipow(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: Vec::new() }
    }

    pub fn from_terms(nvars: usize, terms: Vec<(Exponents, f64)>) -> Self {
        let mut p = Polynomial { nvars, terms };
        p.normalize_terms();
        p
    }

    /// Merges equal monomials, drops zeros and sorts in graded order.
    pub fn normalize_terms(&mut self) {
        let mut out: Vec<(Exponents, f64)> = Vec::new();
        let mut terms = std::mem::take(&mut self.terms);
        terms.sort_by(|a, b| graded_cmp(&a.0, &b.0));
        for (e, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == e => last.1 += c,
                _ => out.push((e, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn coefficient(&self, e: &Exponents) -> f64 {
        self.terms.iter().find(|(x, _)| x == e).map(|t| t.1).unwrap_or(0.0)
    }

    pub fn eval(&self, z: &Point) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * ipow(z[0], e[0]) * ipow(z[1], e[1]) * ipow(z[2], e[2]))
            .sum()
    }

    pub fn eval_grad(&self, z: &Point) -> (f64, Point) {
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for (e, c) in &self.terms {
            let p = [ipow(z[0], e[0]), ipow(z[1], e[1]), ipow(z[2], e[2])];
            v += c * p[0] * p[1] * p[2];
            for i in 0..self.nvars {
                if e[i] > 0 {
                    let mut d = c * e[i] as f64 * ipow(z[i], e[i] - 1);
                    for (j, pj) in p.iter().enumerate() {
                        if j != i {
                            d *= pj;
                        }
                    }
                    g[i] += d;
                }
            }
        }
        (v, g)
    }

    pub fn scaled(&self, f: f64) -> Self {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (*e, c * f)).collect(),
        }
    }

    pub fn add(&self, other: &Polynomial) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Polynomial::from_terms(self.nvars, terms)
    }

    /// Δ P + ((1−2s)/t) ∂_t P, with t the last variable; P must be even in t.
    pub fn weighted_laplacian(&self, s: f64) -> Polynomial {
        let tv = self.nvars - 1;
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            for i in 0..self.nvars {
                let k = e[i];
                let factor = if i == tv {
                    // t^k ↦ k(k−1)t^{k−2} + (1−2s)k t^{k−2}
                    k as f64 * (k as f64 - 2.0 * s)
                } else {
                    (k * k.saturating_sub(1)) as f64
                };
                assert!(i != tv || k % 2 == 0, "weighted Laplacian needs even powers of t");
                if k >= 2 && factor != 0.0 {
                    let mut f = *e;
                    f[i] -= 2;
                    terms.push((f, c * factor));
                }
            }
        }
        Polynomial::from_terms(self.nvars, terms)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max)
    }
}

/// Graded order: higher total degree first, then lexicographically
/// descending exponents.
pub fn graded_cmp(a: &Exponents, b: &Exponents) -> std::cmp::Ordering {
    let da: u64 = a.iter().map(|&x| x as u64).sum();
    let db: u64 = b.iter().map(|&x| x as u64).sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

/// Degree-m monomials in N + 1 variables that are odd in y_N and even in t,
/// in graded order.
pub fn parity_monomials(dim: usize, degree: u32) -> Vec<Exponents> {
    let mut out = Vec::new();
    match dim {
        1 => {
            for a in (0..=degree).rev() {
                let c = degree - a;
                if a % 2 == 1 && c % 2 == 0 {
                    out.push([a, c, 0]);
                }
            }
        }
        2 => {
            for a in (0..=degree).rev() {
                for b in (0..=degree - a).rev() {
                    let c = degree - a - b;
                    if b % 2 == 1 && c % 2 == 0 {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        _ => panic!("dimension must be 1 or 2"),
    }
    out
}

/// Homogeneous polynomial odd in y_N and even in t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPolynomial {
    pub dim: usize,
    pub degree: u32,
    pub poly: Polynomial,
}

impl HomogeneousPolynomial {
    pub fn new(dim: usize, degree: u32, poly: Polynomial) -> Self {
        HomogeneousPolynomial { dim, degree, poly }
    }

    /// Dense coefficients in the order of `parity_monomials`.
    pub fn dense(&self) -> Vec<f64> {
        parity_monomials(self.dim, self.degree).iter().map(|e| self.poly.coefficient(e)).collect()
    }

    pub fn from_dense(dim: usize, degree: u32, coeffs: &[f64]) -> Self {
        let terms = parity_monomials(dim, degree).into_iter().zip(coeffs.iter().copied()).collect();
        HomogeneousPolynomial::new(dim, degree, Polynomial::from_terms(dim + 1, terms))
    }

    pub fn is_homogeneous(&self) -> bool {
        self.poly.terms.iter().all(|(e, _)| e.iter().sum::<u32>() == self.degree)
    }

    pub fn odd_in_normal(&self) -> bool {
        self.poly.terms.iter().all(|(e, _)| e[self.dim - 1] % 2 == 1)
    }

    pub fn even_in_t(&self) -> bool {
        self.poly.terms.iter().all(|(e, _)| e[self.dim] % 2 == 0)
    }

    /// Largest coefficient of the weighted Laplacian (0 for exact solutions).
    pub fn residual(&self, s: f64) -> f64 {
        self.poly.weighted_laplacian(s).max_abs_coeff()
    }

    pub fn eval(&self, z: &Point) -> f64 {
        self.poly.eval(z)
    }

    pub fn eval_grad(&self, z: &Point) -> (f64, Point) {
        self.poly.eval_grad(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_differences() {
        let p = Polynomial::from_terms(3, vec![([2, 1, 0], 1.5), ([0, 1, 2], -0.7), ([1, 3, 0], 0.2)]);
        let z = [0.3, -0.4, 0.8];
        let (_, g) = p.eval_grad(&z);
        for i in 0..3 {
            let h = 1e-6;
            let mut a = z;
            let mut b = z;
            a[i] += h;
            b[i] -= h;
            assert!(((p.eval(&a) - p.eval(&b)) / (2.0 * h) - g[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn weighted_laplacian_of_monomials() {
        // L(y t²) = y · 2(2 − 2s)
        let s = 0.3;
        let p = Polynomial::from_terms(2, vec![([1, 2, 0], 1.0)]);
        let l = p.weighted_laplacian(s);
        assert_eq!(l.terms.len(), 1);
        assert!((l.coefficient(&[1, 0, 0]) - 2.0 * (2.0 - 2.0 * s)).abs() < 1e-15);
        // L(y³) = 6y
        let q = Polynomial::from_terms(2, vec![([3, 0, 0], 1.0)]);
        assert_eq!(q.weighted_laplacian(s).coefficient(&[1, 0, 0]), 6.0);
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(parity_monomials(1, 3), vec![[3, 0, 0], [1, 2, 0]]);
        assert!(parity_monomials(1, 2).is_empty());
        assert_eq!(parity_monomials(2, 2), vec![[1, 1, 0]]);
        assert_eq!(parity_monomials(2, 3).len(), 3);
    }
}
