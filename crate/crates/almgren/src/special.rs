//! Gamma and modified Bessel functions of the second kind.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos, g = 7) with reflection below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let t = x + LANCZOS_G + 0.5;
        let sum = lanczos_sum(x);
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * sum
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma needs a positive argument");
    if x < 0.5 {
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let t = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + lanczos_sum(x).ln()
    }
}

fn lanczos_sum(x: f64) -> f64 {
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    sum
}

// Taylor coefficients of 1/Γ(1+x).
const RGAMMA: [f64; 16] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
];

/// Temme's auxiliary functions for |ν| ≤ 1/2:
/// g1 = (1/Γ(1−ν) − 1/Γ(1+ν)) / (2ν), g2 = (1/Γ(1−ν) + 1/Γ(1+ν)) / 2,
/// plus 1/Γ(1+ν) and 1/Γ(1−ν).
fn temme_gammas(nu: f64) -> (f64, f64, f64, f64) {
    let gampl = 1.0 / gamma(1.0 + nu);
    let gammi = 1.0 / gamma(1.0 - nu);
    if nu.abs() < 0.1 {
        let n2 = nu * nu;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        let mut p = 1.0;
        for j in 0..8 {
            g2 += RGAMMA[2 * j] * p;
            g1 -= RGAMMA[2 * j + 1] * p;
            p *= n2;
        }
        (g1, g2, gampl, gammi)
    } else {
        ((gammi - gampl) / (2.0 * nu), 0.5 * (gammi + gampl), gampl, gammi)
    }
}

/// Returns (K_ν(x), K_{ν+1}(x)) for |ν| ≤ 1/2 and x > 0.
///
/// Temme's series below x = 2, Steed's continued fraction above.
pub fn bessel_k_pair(nu: f64, x: f64) -> (f64, f64) {
    assert!(nu.abs() <= 0.5 + 1e-15, "order must be in [-1/2, 1/2]");
    assert!(x > 0.0, "argument must be positive");
    const EPS: f64 = 1e-16;
    if x <= 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * nu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = nu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (g1, g2, gampl, gammi) = temme_gammas(nu);
        let mut ff = fact * (g1 * e.cosh() + g2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..500 {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - nu * nu);
            c *= dd / fi;
            p /= fi - nu;
            q /= fi + nu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum, sum1 * 2.0 / x)
    } else {
        let a1 = 0.25 - nu * nu;
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 1..10_000 {
            let fi = i as f64;
            a -= 2.0 * fi;
            c = -a * c / (fi + 1.0);
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        let k = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
        let k1 = k * (nu + x + 0.5 - h) / x;
        (k, k1)
    }
}

/// K_ν(x) for real ν by upward recurrence from |ν| ≤ 1/2.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (mut k0, mut k1) = bessel_k_pair(mu, x);
    let mut order = mu;
    for _ in 0..(n as usize) {
        let k2 = k1 * 2.0 * (order + 1.0) / x + k0;
        k0 = k1;
        k1 = k2;
        order += 1.0;
    }
    k0
}

/// (K_s(x), K_{1−s}(x)) for s ∈ (0, 1), both from one Temme/Steed call.
pub fn bessel_k_complementary(s: f64, x: f64) -> (f64, f64) {
    if s <= 0.5 {
        // K_{-s} = K_s and K_{1-s} = K_{-s+1}
        bessel_k_pair(-s, x)
    } else {
        let (k1ms, ks) = bessel_k_pair(s - 1.0, x);
        (ks, k1ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma(0.25), 3.625_609_908_221_908_3) < 1e-13);
        assert!(rel(gamma(0.75), 1.225_416_702_465_177_6) < 1e-13);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(5.0), 24.0) < 1e-13);
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-13);
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &x in &[0.1, 0.3, 0.9, 1.7, 4.2, 11.5, 30.0] {
            assert!((ln_gamma(x) - gamma(x).ln()).abs() < 1e-12 * gamma(x).ln().abs().max(1.0));
        }
        // ln Γ(101) = ln(100!)
        let lnfact: f64 = (1..=100).map(|k| (k as f64).ln()).sum();
        assert!((ln_gamma(101.0) - lnfact).abs() < 1e-10);
    }

    #[test]
    fn temme_gammas_near_zero_order() {
        // reference values from 30-digit arithmetic
        let (g1, g2, _, _) = temme_gammas(0.0999999);
        assert!((g1 + 0.576_791_426_851_413_2).abs() < 1e-14);
        assert!((g2 - 0.993_457_876_563_322_6).abs() < 1e-14);
        let (g1, g2, _, _) = temme_gammas(0.1000001);
        assert!((g1 + 0.576_791_425_137_636_2).abs() < 1e-14);
        assert!((g2 - 0.993_457_850_461_315_0).abs() < 1e-14);
    }

    #[test]
    fn bessel_half_order_closed_form() {
        // K_{1/2}(x) = sqrt(π/(2x)) e^{-x}
        for &x in &[1e-6, 0.01, 0.5, 1.9, 2.0, 2.1, 7.0, 35.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let (k, k1) = bessel_k_pair(0.5, x);
            assert!(rel(k, exact) < 1e-13, "x={x}");
            // K_{3/2}(x) = K_{1/2}(x)(1 + 1/x)
            assert!(rel(k1, exact * (1.0 + 1.0 / x)) < 1e-13, "x={x}");
            let (km, _) = bessel_k_pair(-0.5, x);
            assert!(rel(km, exact) < 1e-13);
        }
    }

    #[test]
    fn bessel_reference_values() {
        assert!(rel(bessel_k(0.3, 0.5), 0.976_474_124_381_787_9) < 1e-13);
        assert!(rel(bessel_k(0.3, 5.0), 0.003_721_669_328_873_425_5) < 1e-12);
        assert!(rel(bessel_k(0.7, 30.0), 2.149_680_731_791_946e-14) < 1e-12);
    }

    #[test]
    fn order_symmetry_and_recurrence() {
        for &nu in &[0.1, 0.3, 0.45] {
            for &x in &[0.3, 1.0, 2.5, 9.0] {
                let (a, _) = bessel_k_pair(nu, x);
                let (b, _) = bessel_k_pair(-nu, x);
                assert!(rel(a, b) < 1e-13, "nu={nu} x={x}");
            }
        }
        // K_{3/2} − K_{−1/2} = (1/x) K_{1/2}, from two separate calls
        for &x in &[0.3, 1.0, 2.5, 9.0] {
            let (km, ka) = bessel_k_pair(-0.5, x);
            let (kb, kp) = bessel_k_pair(0.5, x);
            assert!(rel(ka, kb) < 1e-13);
            assert!(rel(kp - km, kb / x) < 1e-12);
        }
        assert!(rel(bessel_k(1.3, 0.8), 1.138_001_985_325_999_7) < 1e-12);
    }
}
