//! Forward-mode dual numbers with three partials, enough for first
//! derivatives with respect to a point of ℝ^{N+1}, N ≤ 2.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual {
    pub const fn cst(v: f64) -> Self {
        Dual { v, d: [0.0; 3] }
    }

    /// Independent variable number `i` with value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; 3];
        d[i] = 1.0;
        Dual { v, d }
    }

    /// Seeds a point: component i gets unit derivative slot i for i < n.
    pub fn seed(p: &[f64; 3], n: usize) -> [Dual; 3] {
        let mut out = [Dual::cst(0.0); 3];
        for i in 0..3 {
            out[i] = if i < n { Dual::var(p[i], i) } else { Dual::cst(p[i]) };
        }
        out
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        let f = 0.5 / r;
        Dual {
            v: r,
            d: [self.d[0] * f, self.d[1] * f, self.d[2] * f],
        }
    }

    pub fn scale(self, c: f64) -> Self {
        Dual {
            v: self.v * c,
            d: [self.d[0] * c, self.d[1] * c, self.d[2] * c],
        }
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Dual::cst(v)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Dual {
            v: q,
            d: [
                (self.d[0] - q * o.d[0]) * inv,
                (self.d[1] - q * o.d[1]) * inv,
                (self.d[2] - q * o.d[2]) * inv,
            ],
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: [-self.d[0], -self.d[1], -self.d[2]],
        }
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, o: f64) -> Dual {
        Dual { v: self.v + o, d: self.d }
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(self, o: f64) -> Dual {
        Dual { v: self.v - o, d: self.d }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        self.scale(o)
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        o.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::var(1.5, 0);
        let y = Dual::var(-0.5, 1);
        let f = (x * x * y + 3.0) / (x - y * 2.0);
        // f = (x²y + 3)/(x − 2y)
        let (xv, yv) = (1.5, -0.5);
        let den = xv - 2.0 * yv;
        let num = xv * xv * yv + 3.0;
        let fx = (2.0 * xv * yv * den - num) / (den * den);
        let fy = (xv * xv * den + 2.0 * num) / (den * den);
        assert!((f.v - num / den).abs() < 1e-15);
        assert!((f.d[0] - fx).abs() < 1e-14);
        assert!((f.d[1] - fy).abs() < 1e-14);
        assert_eq!(f.d[2], 0.0);
        let r = (x * x).sqrt();
        assert!((r.d[0] - 1.0).abs() < 1e-15);
    }
}
