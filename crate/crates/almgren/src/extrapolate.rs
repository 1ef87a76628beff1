//! Limit extrapolation on geometric sequences.

/// Result of an extrapolation with a crude error estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Extrapolated {
    pub value: f64,
    pub error: f64,
}

/// Richardson elimination for samples `a[i] = A(h q^{-i})` (so `q > 1`
/// shrinks the step) with known correction exponents, leading first.
///
/// Uses `exponents.len() + 1` samples at most; the error estimate is the
/// change produced by the last elimination.
pub fn richardson(samples: &[f64], q: f64, exponents: &[f64]) -> Extrapolated {
    assert!(!samples.is_empty());
    let mut row: Vec<f64> = samples.to_vec();
    let mut last_change = f64::INFINITY;
    for &p in exponents.iter().take(samples.len() - 1) {
        let f = q.powf(p);
        let next: Vec<f64> = row.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        last_change = (next[next.len() - 1] - row[row.len() - 1]).abs();
        row = next;
    }
    Extrapolated {
        value: row[row.len() - 1],
        error: last_change,
    }
}

/// Aitken Δ² on the last three entries of a convergent sequence.
/// Returns `None` when the second difference vanishes.
pub fn aitken(x: &[f64]) -> Option<f64> {
    if x.len() < 3 {
        return None;
    }
    let n = x.len();
    let (a, b, c) = (x[n - 3], x[n - 2], x[n - 1]);
    let d2 = c - 2.0 * b + a;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
    if d2.abs() <= 1e-14 * scale {
        // Already constant to rounding
        if (c - b).abs() <= 1e-13 * scale {
            return Some(c);
        }
        return None;
    }
    Some(c - (c - b) * (c - b) / d2)
}

/// Empirical convergence rate p of `x_i ≈ L + C λ_i^p` on a geometric grid
/// with ratio `q < 1`, from the last three entries.
pub fn empirical_rate(x: &[f64], q: f64) -> Option<f64> {
    let n = x.len();
    if n < 3 {
        return None;
    }
    let d1 = x[n - 2] - x[n - 3];
    let d2 = x[n - 1] - x[n - 2];
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return None;
    }
    let p = (d2 / d1).ln() / q.ln();
    if p.is_finite() && p > 0.0 {
        Some(p)
    } else {
        None
    }
}

/// Least-squares line `y ≈ a + b x`; returns (a, b, rms residual).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - a - b * xi).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (a, b, rms)
}

/// Slope of log|y| against log x; zero entries are skipped.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, v)| v.abs() > 0.0)
        .map(|(a, b)| (a.ln(), b.abs().ln()))
        .unzip();
    if lx.len() < 2 {
        return None;
    }
    Some(linear_fit(&lx, &ly).1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_two_powers() {
        // A(h) = 3 + 2 h^0.5 - h^2
        let f = |h: f64| 3.0 + 2.0 * h.sqrt() - h * h;
        let h = 1e-2;
        let s = [f(h), f(h / 2.0), f(h / 4.0)];
        let r = richardson(&s, 2.0, &[0.5, 2.0]);
        assert!((r.value - 3.0).abs() < 1e-13);
    }

    #[test]
    fn aitken_geometric_sequence_exact() {
        let x: Vec<f64> = (0..6).map(|i| 1.5 + 0.7 * 0.6f64.powi(i)).collect();
        assert!((aitken(&x).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(aitken(&[2.0, 2.0, 2.0]), Some(2.0));
    }

    #[test]
    fn rate_recovered() {
        let q: f64 = 0.5;
        let x: Vec<f64> = (0..5).map(|i| 1.0 + 3.0 * q.powi(i).powf(1.7)).collect();
        assert!((empirical_rate(&x, q).unwrap() - 1.7).abs() < 1e-10);
    }

    #[test]
    fn fit_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (a, b, r) = linear_fit(&x, &y);
        assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14 && r < 1e-14);
    }
}
