use num_complex::Complex64;
use proptest::prelude::*;

use rrf_green::case1d::{big_lambda, lambda_pv, normalization};
use rrf_green::evaluation::{direction, unit_vector};
use rrf_green::green_ganapol::{moments_direct, moments_with, MomentPath};
use rrf_green::quadrature::taper;
use rrf_green::specfun::{chandrasekhar, legendre_p_real};
use rrf_green::DispersionContext;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dispersion_is_even(w in 0.05f64..0.99, re in 1.2f64..5.0, im in -2.0f64..2.0) {
        let z = Complex64::new(re, im);
        let a = big_lambda(z, w).unwrap();
        let b = big_lambda(-z, w).unwrap();
        prop_assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn continuum_normalization_is_odd(w in 0.1f64..0.99, nu in 0.01f64..0.99) {
        let ctx = DispersionContext::new(w).unwrap();
        let a = normalization(nu, &ctx).unwrap().value;
        let b = normalization(-nu, &ctx).unwrap().value;
        prop_assert!((a + b).abs() < 1e-13 * a.abs().max(1e-300));
        prop_assert!((lambda_pv(nu, w).unwrap() - lambda_pv(-nu, w).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn chandrasekhar_three_term(w in 0.0f64..0.99, re in -2.0f64..2.0, im in 0.1f64..2.0) {
        let z = Complex64::new(re, im);
        let c = chandrasekhar(12, z, w);
        for l in 1..12 {
            let lf = l as f64;
            for v in [c[l - 1].g, c[l].g, c[l + 1].g] {
                prop_assert!(v.is_finite());
            }
            let lhs = (lf + 1.0) * c[l + 1].g + lf * c[l - 1].g;
            let rhs = z * (2.0 * lf + 1.0) * c[l].g;
            prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(rhs.norm()).max(1.0));
        }
    }

    #[test]
    fn moments_agree_with_direct_form(w in 0.1f64..0.95, k in 0.5f64..20.0, mu in -1.0f64..1.0) {
        let ctx = DispersionContext::new(w).unwrap();
        let a = moments_with(k, mu, &ctx, 10, MomentPath::DoubleDouble).unwrap();
        let b = moments_direct(k, mu, &ctx, 10).unwrap();
        for l in 0..=10 {
            let rel = (a.psi_tilde[l] - b.psi_tilde[l]).norm() / b.psi_tilde[l].norm();
            prop_assert!(rel < 1e-9, "l={} rel={}", l, rel);
        }
    }

    #[test]
    fn legendre_bounded(x in -1.0f64..1.0) {
        for p in legendre_p_real(40, x) {
            prop_assert!(p.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn directions_are_unit(t in 0.0f64..3.2, p in -7.0f64..7.0) {
        let d = direction(t, p);
        let u = unit_vector(d).unwrap();
        for i in 0..3 {
            prop_assert!((u[i] - d[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn taper_is_a_window(x in -1.0f64..3.0) {
        let t = taper(x);
        prop_assert!((0.0..=1.0).contains(&t));
        if x <= 1.0 { prop_assert_eq!(t, 1.0); }
        if x >= 2.0 { prop_assert_eq!(t, 0.0); }
    }
}
