use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use almgren::blowup::{fourier_coefficients, scaling_covariance_error};
use almgren::diagnostics::{hardy_check, poincare_check, random_polynomial};
use almgren::eigenbasis::{dirichlet_eigenpairs, project, Chart, DomainQuadrature, DomainSpec, SpectralFunction};
use almgren::extension::{build_kernel, extend, ExtensionKernel};
use almgren::field::{Field, PolyField};
use almgren::fractional_op::{apply_fractional_laplacian, riesz_pairing};
use almgren::frequency::{default_grid, frequency_profile, ProfileSettings};
use almgren::polynomial::Polynomial;
use almgren::quadrature::{Quadrature, QuadratureOrders};
use almgren::sphere_eig::{degree_of_eigenvalue, eigenvalue, SphereBasis};
use almgren::straightening::{audit_coefficients, build_map, coefficient_field, reflect_solution, BoundaryGraph, CoefficientField, Potential};

fn flat_field(dim: usize, s: f64) -> CoefficientField {
    let map = build_map(BoundaryGraph::flat(), dim, 1.0).unwrap();
    let chart = Chart {
        origin: [0.0; 2],
        rotation: [[1.0, 0.0], [0.0, 1.0]],
        dim,
    };
    coefficient_field(map, chart, Potential::constant(0.0), s, 1.0).unwrap()
}

fn kernel(s: f64) -> Arc<ExtensionKernel> {
    Arc::new(build_kernel(s).unwrap())
}

fn order() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.25), Just(0.5), Just(0.75)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenpairs_are_orthonormal(a in 0.3f64..2.0, b in 0.3f64..2.0) {
        let d = DomainSpec::rectangle([0.0, 0.0], [a, b], [a / 2.0, 0.0], 0.1);
        let modes = dirichlet_eigenpairs(&d, 12).unwrap();
        let q = DomainQuadrature::new(&d, DomainQuadrature::nodes_for(&modes));
        for (i, m) in modes.iter().enumerate() {
            for (j, n) in modes.iter().enumerate() {
                let g = q.integrate(|x| m.eval(x) * n.eval(x));
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenpairs_solve_laplace(k in 1usize..12, fx in 0.05f64..0.95, fy in 0.05f64..0.95) {
        let d = DomainSpec::rectangle([0.0, 0.0], [1.0, 1.5], [0.5, 0.0], 0.1);
        let m = &dirichlet_eigenpairs(&d, 12).unwrap()[k - 1];
        let x = [fx, 1.5 * fy];
        let h = 1e-4;
        let lap = (m.eval(&[x[0] + h, x[1]]) + m.eval(&[x[0] - h, x[1]]) + m.eval(&[x[0], x[1] + h]) + m.eval(&[x[0], x[1] - h])
            - 4.0 * m.eval(&x)) / (h * h);
        prop_assert!((lap + m.eigenvalue * m.eval(&x)).abs() / m.eigenvalue < 1e-6);
    }

    #[test]
    fn projection_round_trip(c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let d = DomainSpec::interval(-1.0, 0.0, 0.0, 0.5);
        let u = SpectralFunction::from_coefficients(&d, &c).unwrap();
        let p = project(|x| u.eval(x), &d, 6).unwrap();
        for (a, b) in p.function.coeffs.iter().zip(&c) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn fractional_semigroup(c in prop::collection::vec(-1.0f64..1.0, 8), s1 in 0.05f64..0.5, s2 in 0.05f64..0.5) {
        let d = DomainSpec::interval(0.0, 2.0, 0.0, 0.5);
        let u = SpectralFunction::from_coefficients(&d, &c).unwrap();
        let mut two = apply_fractional_laplacian(&u, s1).unwrap();
        two.role = u.role;
        let two = apply_fractional_laplacian(&two, s2).unwrap();
        let one = apply_fractional_laplacian(&u, s1 + s2).unwrap();
        for (a, b) in two.coeffs.iter().zip(&one.coeffs) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn fractional_positivity(c in prop::collection::vec(-1.0f64..1.0, 8), s in 0.05f64..1.0) {
        let d = DomainSpec::interval(0.0, 1.0, 0.0, 0.5);
        let u = SpectralFunction::from_coefficients(&d, &c).unwrap();
        let pairing = riesz_pairing(&u, &u, s).unwrap();
        let norm2: f64 = c.iter().map(|x| x * x).sum();
        prop_assert!(pairing >= (PI * PI).powf(s) * norm2 * (1.0 - 1e-12));
    }

    #[test]
    fn extension_is_weighted_harmonic(s in order(), fx in 0.05f64..0.95, fy in 0.05f64..0.95, t in 0.01f64..1.0) {
        let d = DomainSpec::rectangle([0.0, 0.0], [1.0, 1.0], [0.5, 0.0], 0.4);
        let u = SpectralFunction::from_indexed(&d, &[(vec![1, 1], 1.0), (vec![2, 3], -0.3)]).unwrap();
        let f = extend(&u, kernel(s)).unwrap();
        prop_assert!(f.divergence_residual(&[fx, fy], t) < 1e-6);
    }

    #[test]
    fn neumann_trace_matches_operator(c in prop::collection::vec(-1.0f64..1.0, 3), s in order(), fx in 0.05f64..0.95) {
        let d = DomainSpec::interval(0.0, 1.0, 0.0, 0.5);
        let u = SpectralFunction::from_coefficients(&d, &c).unwrap();
        let k = kernel(s);
        let kappa = k.kappa;
        let f = extend(&u, k).unwrap();
        let want = kappa * apply_fractional_laplacian(&u, s).unwrap().eval(&[fx]);
        prop_assume!(want.abs() > 1e-3);
        let got = f.neumann_trace(&[fx], 1e-3).value;
        prop_assert!(((got - want) / want).abs() < 1e-4);
    }

    #[test]
    fn reflected_field_is_odd(s in order(), y in -0.3f64..0.3, t in 0.0f64..0.3) {
        let d = DomainSpec::interval(-1.0, 0.0, 0.0, 0.5);
        let u = SpectralFunction::from_indexed(&d, &[(vec![1], 1.0), (vec![2], 0.4)]).unwrap();
        let k = kernel(s);
        let kappa = k.kappa;
        let ext = Arc::new(extend(&u, k).unwrap());
        let map = build_map(BoundaryGraph::flat(), 1, 0.5).unwrap();
        let cf = coefficient_field(map, d.chart().unwrap(), Potential::constant(0.0), s, kappa).unwrap();
        let w = reflect_solution(ext, &cf).unwrap();
        prop_assert!((w.value(&[y, t, 0.0]) + w.value(&[-y, t, 0.0])).abs() < 1e-14);
    }

    #[test]
    fn parabola_coefficients_are_admissible(c in 0.05f64..0.5, seed in any::<u64>()) {
        let map = build_map(BoundaryGraph::parabola(c), 2, 0.25).unwrap();
        let chart = Chart { origin: [0.0; 2], rotation: [[1.0, 0.0], [0.0, 1.0]], dim: 2 };
        let cf = coefficient_field(map, chart, Potential::constant(1.0), 0.5, 1.0).unwrap();
        let a = audit_coefficients(&cf, 200, seed);
        prop_assert!(a.pass, "{a:?}");
    }

    #[test]
    fn degree_map_inverts_eigenvalue(m in 1usize..9, s in 0.01f64..0.99, dim in 1usize..3) {
        let mu = eigenvalue(m, dim, s).unwrap();
        let d = if dim == 1 { 2 * m - 1 } else { m };
        prop_assert!((degree_of_eigenvalue(mu, dim, s) - d as f64).abs() < 1e-12);
    }

    #[test]
    fn frequency_stays_above_floor(seed in any::<u64>(), s in order()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = SphereBasis::new(2, s, 3).unwrap();
        let mut terms = Vec::new();
        for y in basis.iter_functions() {
            let c: f64 = rand::Rng::random_range(&mut rng, -1.0..1.0);
            terms.extend(y.poly.poly.terms.iter().map(|(e, v)| (*e, c * v)));
        }
        let w = PolyField::new(2, Polynomial::from_terms(3, terms));
        let cf = flat_field(2, s);
        let q = Quadrature::new(2, s, QuadratureOrders::default_for(2).scaled(0.5));
        let p = frequency_profile(&w, &cf, &q, &default_grid(1.0), &ProfileSettings::default()).unwrap();
        prop_assert!(p.frequency.iter().all(|v| *v > -(2.0 - 2.0 * s) / 2.0));
    }

    #[test]
    fn bessel_inequality(seed in any::<u64>(), s in order(), lambda in 0.05f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = random_polynomial(&mut rng, 2, 4);
        let w = PolyField::new(2, poly);
        let basis = SphereBasis::new(2, s, 3).unwrap();
        let q = Quadrature::new(2, s, QuadratureOrders::default_for(2));
        let c = fourier_coefficients(&w, lambda, &basis, 3, &q).unwrap();
        let sum: f64 = c.iter().map(|x| x.value * x.value).sum();
        let total = q.sphere_at(lambda, |z| w.value(z).powi(2));
        prop_assert!(sum <= total * (1.0 + 1e-10) + 1e-300);
    }

    #[test]
    fn rescaling_is_covariant(seed in any::<u64>(), lambda in 0.05f64..0.5, mu in 0.2f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Arc<dyn Field> = Arc::new(PolyField::new(2, random_polynomial(&mut rng, 2, 3)));
        let cf = flat_field(2, 0.5);
        let q = Quadrature::new(2, 0.5, QuadratureOrders::default_for(2).scaled(0.5));
        let e = scaling_covariance_error(w, &cf, lambda, mu, &q).unwrap();
        prop_assert!(e < 1e-12);
    }

    #[test]
    fn hardy_and_poincare_hold(seed in any::<u64>(), s in order(), r in 0.25f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = PolyField::new(2, random_polynomial(&mut rng, 2, 4));
        let q = Quadrature::new(2, s, QuadratureOrders::default_for(2).scaled(0.5));
        prop_assert!(hardy_check(&w, r, &q).pass);
        prop_assert!(poincare_check(&w, r, &q).pass);
    }
}
