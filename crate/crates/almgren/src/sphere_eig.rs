//! Eigenfunctions of the weighted Laplace–Beltrami problem on the upper
//! half-sphere, odd in θ_N, realized as homogeneous polynomial solutions of
//! div(t^{1−2s}∇P) = 0.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{parity_monomials, HomogeneousPolynomial, Polynomial};
use crate::quadrature::{EquatorRule, HalfSphereRule, QuadratureOrders};
use crate::Point;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::Usage(format!("dimension {dim} not supported")))
    }
}

/// Degree of the m-th eigenvalue: 2m − 1 for N = 1, m otherwise.
pub fn degree_of_index(m: usize, dim: usize) -> usize {
    if dim == 1 {
        2 * m - 1
    } else {
        m
    }
}

/// d² + d(N − 2s) for a homogeneous degree d.
pub fn eigenvalue_for_degree(d: usize, dim: usize, s: f64) -> f64 {
    let d = d as f64;
    d * d + d * (dim as f64 - 2.0 * s)
}

/// The m-th eigenvalue (m ≥ 1).
pub fn eigenvalue(m: usize, dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    if m == 0 {
        return Err(Error::Usage("0 is not an eigenvalue index".into()));
    }
    Ok(eigenvalue_for_degree(degree_of_index(m, dim), dim, s))
}

/// Degree recovered from an eigenvalue: −(N−2s)/2 + √(((N−2s)/2)² + μ).
pub fn degree_of_eigenvalue(mu: f64, dim: usize, s: f64) -> f64 {
    let h = (dim as f64 - 2.0 * s) / 2.0;
    -h + (h * h + mu).sqrt()
}

/// U_{1,m} = Σ_{k<m} a_k y^{2k+1} t^{2m−2k−2}, degree 2m − 1, in variables (y, t).
pub fn family_n1(m: usize, s: f64) -> Result<HomogeneousPolynomial> {
    if m == 0 {
        return Err(Error::Usage("family index starts at 1".into()));
    }
    let mut terms = Vec::with_capacity(m);
    let mut a = 1.0;
    for k in 0..m {
        if k > 0 {
            let j = (m - k) as f64;
            let kf = k as f64;
            a *= -2.0 * (j * j - s * j) / (kf * (2.0 * kf + 1.0));
        }
        terms.push(([(2 * k + 1) as u32, (2 * m - 2 * k - 2) as u32, 0], a));
    }
    Ok(HomogeneousPolynomial::new(1, (2 * m - 1) as u32, Polynomial::from_terms(2, terms)))
}

/// The explicit N = 2 solution of degree m: U_{1,(m+1)/2}(y_2, t) for odd m,
/// U₃ = Σ a_k y_1^{2k+1} y_2^{2n−2k−1} for m = 2n.
pub fn family_n2(m: usize, s: f64) -> Result<HomogeneousPolynomial> {
    if m == 0 {
        return Err(Error::Usage("degree starts at 1".into()));
    }
    if m % 2 == 1 {
        let base = family_n1(m.div_ceil(2), s)?;
        let terms = base.poly.terms.iter().map(|(e, c)| ([0, e[0], e[1]], *c)).collect();
        Ok(HomogeneousPolynomial::new(2, m as u32, Polynomial::from_terms(3, terms)))
    } else {
        let n = m / 2;
        let mut terms = Vec::with_capacity(n);
        let mut a = 1.0;
        for k in 0..n {
            terms.push(([(2 * k + 1) as u32, (2 * n - 2 * k - 1) as u32, 0], a));
            let (nf, kf) = (n as f64, k as f64);
            a *= -(2.0 * (nf - kf).powi(2) - 3.0 * nf + 3.0 * kf + 1.0) / (2.0 * kf * kf + 5.0 * kf + 3.0);
        }
        Ok(HomogeneousPolynomial::new(2, m as u32, Polynomial::from_terms(3, terms)))
    }
}

/// Explicit family member of the given degree, if the degree has one.
pub fn family_for_degree(d: usize, dim: usize, s: f64) -> Option<HomogeneousPolynomial> {
    match dim {
        1 if d % 2 == 1 => family_n1(d.div_ceil(2), s).ok(),
        2 if d >= 1 => family_n2(d, s).ok(),
        _ => None,
    }
}

/// Matrix of P ↦ ΔP + ((1−2s)/t)∂_tP from degree d to degree d − 2 in the
/// parity-restricted monomial bases.
pub fn operator_matrix(d: usize, dim: usize, s: f64) -> DMatrix<f64> {
    let cols = parity_monomials(dim, d as u32);
    let rows = if d >= 2 { parity_monomials(dim, d as u32 - 2) } else { Vec::new() };
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (j, e) in cols.iter().enumerate() {
        let image = Polynomial::from_terms(dim + 1, vec![(*e, 1.0)]).weighted_laplacian(s);
        for (f, c) in &image.terms {
            let i = rows.iter().position(|r| r == f).expect("image stays in the parity class");
            m[(i, j)] = *c;
        }
    }
    m
}

/// Nullspace basis (rows) of the operator and an ambiguity flag.
pub fn operator_nullspace(d: usize, dim: usize, s: f64) -> (Vec<Vec<f64>>, bool) {
    let m = operator_matrix(d, dim, s);
    let n = m.ncols();
    if n == 0 {
        return (Vec::new(), false);
    }
    if m.nrows() == 0 {
        let id = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        return (id, false);
    }
    let mut sq = DMatrix::zeros(n, n);
    sq.view_mut((0, 0), (m.nrows(), n)).copy_from(&m);
    let svd = SVD::new(sq, false, true);
    let vt = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let thr = 1e-10 * smax;
    let mut ambiguous = false;
    let mut rows = Vec::new();
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv > 1e-2 * thr && sv < 1e2 * thr {
            ambiguous = true;
        }
        if sv <= thr {
            rows.push(vt.row(i).iter().copied().collect());
        }
    }
    (rref(rows), ambiguous)
}

/// Reduced row echelon form with column-order pivots.
fn rref(mut rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return rows;
    }
    let n = rows[0].len();
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == rows.len() {
            break;
        }
        let (best, val) = (pivot_row..rows.len())
            .map(|r| (r, rows[r][col].abs()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val < 1e-9 {
            continue;
        }
        rows.swap(pivot_row, best);
        let p = rows[pivot_row][col];
        for v in rows[pivot_row].iter_mut() {
            *v /= p;
        }
        let pr = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != pivot_row {
                let f = row[col];
                if f != 0.0 {
                    for (x, y) in row.iter_mut().zip(&pr) {
                        *x -= f * y;
                    }
                }
            }
        }
        pivot_row += 1;
    }
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            if v.abs() < 1e-13 {
                *v = 0.0;
            }
        }
    }
    rows
}

/// Orthonormal eigenfunction with its checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphericalEigenfunction {
    pub poly: HomogeneousPolynomial,
    pub degree: usize,
    pub eigenvalue: f64,
    pub rayleigh: f64,
    pub residual: f64,
    pub unit_norm: bool,
    /// max over equator samples of |Y|.
    pub equator_max: f64,
    pub from_family: bool,
}

impl SphericalEigenfunction {
    pub fn eval(&self, theta: &Point) -> f64 {
        self.poly.eval(theta)
    }

    /// Value and tangential gradient ∇P − d P θ at a unit vector θ.
    pub fn eval_tangential(&self, theta: &Point) -> (f64, Point) {
        let (v, g) = self.poly.eval_grad(theta);
        let d = self.degree as f64;
        (v, [g[0] - d * v * theta[0], g[1] - d * v * theta[1], g[2] - d * v * theta[2]])
    }
}

/// Weighted Rayleigh quotient ∫θ^{1−2s}|∇_S P|² / ∫θ^{1−2s}P².
pub fn rayleigh_quotient(p: &HomogeneousPolynomial, rule: &HalfSphereRule) -> Result<f64> {
    let d = p.degree as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (th, &w) in rule.points.iter().zip(&rule.weights) {
        let (v, g) = p.eval_grad(th);
        let tg = [g[0] - d * v * th[0], g[1] - d * v * th[1], g[2] - d * v * th[2]];
        num += w * (tg[0] * tg[0] + tg[1] * tg[1] + tg[2] * tg[2]);
        den += w * v * v;
    }
    if den <= 0.0 {
        return Err(Error::Usage("zero function has no Rayleigh quotient".into()));
    }
    Ok(num / den)
}

/// Orthonormal basis of one eigenspace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Eigenspace {
    pub degree: usize,
    pub eigenvalue: f64,
    pub nullity: usize,
    pub ambiguous: bool,
    pub functions: Vec<SphericalEigenfunction>,
}

/// Gram matrix of the parity monomials of degree d under the weighted inner product.
fn monomial_gram(d: usize, dim: usize, rule: &HalfSphereRule) -> DMatrix<f64> {
    let monos = parity_monomials(dim, d as u32);
    let n = monos.len();
    let vals: Vec<Vec<f64>> = rule
        .points
        .iter()
        .map(|th| monos.iter().map(|e| th[0].powi(e[0] as i32) * th[1].powi(e[1] as i32) * th[2].powi(e[2] as i32)).collect())
        .collect();
    let mut g = DMatrix::zeros(n, n);
    for (row, &w) in vals.iter().zip(&rule.weights) {
        for i in 0..n {
            for j in 0..=i {
                g[(i, j)] += w * row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}

fn inner(a: &[f64], b: &[f64], g: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..b.len() {
            s += a[i] * g[(i, j)] * b[j];
        }
    }
    s
}

/// Eigenspace of homogeneous degree d; for N = 1 only odd d are eigenvalues.
pub fn eigenspace_for_degree(d: usize, dim: usize, s: f64, rule: &HalfSphereRule, equator: &EquatorRule) -> Result<Eigenspace> {
    check_dim(dim)?;
    if d == 0 {
        return Err(Error::Usage("degree 0 is not an eigenvalue".into()));
    }
    if dim == 1 && d % 2 == 0 {
        return Err(Error::Usage(format!("degree {d} is not an eigenvalue for N = 1 (even order)")));
    }
    let (null, ambiguous) = operator_nullspace(d, dim, s);
    let nullity = null.len();
    let g = monomial_gram(d, dim, rule);
    let mut candidates: Vec<(Vec<f64>, bool)> = Vec::new();
    if let Some(f) = family_for_degree(d, dim, s) {
        candidates.push((f.dense(), true));
    }
    candidates.extend(null.into_iter().map(|v| (v, false)));
    let mut basis: Vec<(Vec<f64>, bool)> = Vec::new();
    for (v, fam) in candidates {
        if basis.len() == nullity {
            break;
        }
        let vnorm = inner(&v, &v, &g).sqrt();
        let mut w = v.clone();
        for _ in 0..2 {
            for (e, _) in &basis {
                let c = inner(&w, e, &g);
                for (x, y) in w.iter_mut().zip(e) {
                    *x -= c * y;
                }
            }
        }
        let wn = inner(&w, &w, &g).sqrt();
        if wn > 1e-8 * vnorm {
            basis.push((w.iter().map(|x| x / wn).collect(), fam));
        }
    }
    let eigenvalue = eigenvalue_for_degree(d, dim, s);
    let functions = basis
        .into_iter()
        .map(|(v, fam)| {
            let poly = HomogeneousPolynomial::from_dense(dim, d as u32, &v);
            let rayleigh = rayleigh_quotient(&poly, rule).unwrap_or(f64::NAN);
            let norm = rule.integrate(|th| poly.eval(th).powi(2));
            let equator_max = equator.points.iter().map(|p| poly.eval(p).abs()).fold(0.0, f64::max);
            SphericalEigenfunction {
                residual: poly.residual(s),
                poly,
                degree: d,
                eigenvalue,
                rayleigh,
                unit_norm: (norm - 1.0).abs() < 1e-10,
                equator_max,
                from_family: fam,
            }
        })
        .collect();
    Ok(Eigenspace {
        degree: d,
        eigenvalue,
        nullity,
        ambiguous,
        functions,
    })
}

/// The m-th eigenspace with the default half-sphere rule.
pub fn eigenspace_basis(m: usize, dim: usize, s: f64) -> Result<Eigenspace> {
    check_dim(dim)?;
    if m == 0 {
        return Err(Error::Usage("0 is not an eigenvalue index".into()));
    }
    let orders = sphere_orders(dim);
    let rule = HalfSphereRule::new(dim, s, &orders);
    let eq = EquatorRule::new(dim, &orders);
    eigenspace_for_degree(degree_of_index(m, dim), dim, s, &rule, &eq)
}

/// Rule sizes used for the eigenbasis: 128 polar nodes for N = 1 and a
/// 64 × 64 product for N = 2.
pub fn sphere_orders(dim: usize) -> QuadratureOrders {
    QuadratureOrders {
        polar: 64,
        azimuth: 32,
        radial: 32,
        flat: 32,
    }
    .with_dim(dim)
}

impl QuadratureOrders {
    fn with_dim(mut self, dim: usize) -> Self {
        if dim == 1 {
            self.azimuth = 1;
        }
        self
    }
}

/// All eigenspaces up to a maximal degree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereBasis {
    pub dim: usize,
    pub s: f64,
    pub spaces: Vec<Eigenspace>,
}

impl SphereBasis {
    pub fn new(dim: usize, s: f64, max_degree: usize) -> Result<Self> {
        let orders = sphere_orders(dim);
        let rule = HalfSphereRule::new(dim, s, &orders);
        let eq = EquatorRule::new(dim, &orders);
        let spaces = (1..=max_degree)
            .filter(|d| dim == 2 || d % 2 == 1)
            .map(|d| eigenspace_for_degree(d, dim, s, &rule, &eq))
            .collect::<Result<Vec<_>>>()?;
        Ok(SphereBasis { dim, s, spaces })
    }

    pub fn space(&self, degree: usize) -> Option<&Eigenspace> {
        self.spaces.iter().find(|e| e.degree == degree)
    }

    pub fn iter_functions(&self) -> impl Iterator<Item = &SphericalEigenfunction> {
        self.spaces.iter().flat_map(|e| e.functions.iter())
    }
}
