use num_complex::Complex64;
use proptest::prelude::*;
use statrs::distribution::{Continuous, FisherSnedecor, LogNormal, Weibull};

use tworv::approx_family::{
    approx_pdf, linear_grid, map_f, map_generalized_gamma, map_lognormal, map_weibull, verify_mapping, weight_sum,
    ApproxParams,
};
use tworv::compound::{
    exponential_cdf, geometric_exponential_moments, ks_statistic, random_sum_moments, RandomSumSpec,
    SupportConvention,
};
use tworv::rmm::{total_mass, RmmShape, Standardization};
use tworv::specfun::{gamma_fn, upper_incomplete_gamma};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gamma_recurrence(s in 0.05f64..30.0) {
        let lhs = gamma_fn(s + 1.0).unwrap();
        let rhs = s * gamma_fn(s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs());
    }

    #[test]
    fn upper_incomplete_gamma_recurrence(s in 0.1f64..8.0, x in 0.01f64..30.0) {
        // Γ(s+1, x) = s Γ(s, x) + x^s e^{-x}
        let c = |v: f64| Complex64::new(v, 0.0);
        let lhs = upper_incomplete_gamma(c(s + 1.0), c(x)).unwrap();
        let rhs = c(s) * upper_incomplete_gamma(c(s), c(x)).unwrap() + c(x.powf(s) * (-x).exp());
        prop_assert!((lhs - rhs).norm() <= 1e-11 * lhs.norm().max(1e-300), "{lhs} vs {rhs}");
    }

    #[test]
    fn standardization_round_trip(mode in -1e3f64..1e3, sigma in 1e-3f64..1e3, x in -1e4f64..1e4) {
        let s = Standardization::new(mode, sigma).unwrap();
        let back = s.destandardize(s.standardize(x));
        prop_assert!((back - x).abs() <= 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn generalized_gamma_weights_sum_to_one(c in 0.05f64..20.0, k in 0.05f64..4.0) {
        // (1 - kc) + kc can miss 1 by rounding for arbitrary reals.
        let w = map_generalized_gamma(0.0, 1.0, c, k).unwrap().weight_sum();
        prop_assert!((w - 1.0).abs() <= 4.0 * f64::EPSILON * (k * c).max(1.0));
    }

    #[test]
    fn f_weight_sum(m in 0.1f64..50.0, n in 0.1f64..50.0) {
        let w = map_f(m, n).unwrap().weight_sum();
        prop_assert!((w - (1.0 + n / 2.0)).abs() <= 1e-12 * w);
    }

    #[test]
    fn random_sum_identity(p in 0.01f64..0.99, rate in 0.01f64..100.0) {
        for conv in [SupportConvention::FromZero, SupportConvention::FromOne] {
            let spec = RandomSumSpec::new(p, rate, conv).unwrap();
            let (en, vn) = spec.count_moments();
            let (m, v) = random_sum_moments(1.0 / rate, 1.0 / (rate * rate), en, vn).unwrap();
            let (cm, cv) = geometric_exponential_moments(&spec).unwrap();
            prop_assert!((m - cm).abs() <= 1e-12 * cm);
            prop_assert!((v - cv).abs() <= 1e-12 * cv);
        }
    }

    #[test]
    fn ks_statistic_in_unit_interval(xs in prop::collection::vec(-5.0f64..20.0, 1..200)) {
        let d = ks_statistic(&xs, |x| exponential_cdf(x, 0.7)).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / xs.len() as f64 - 1e-15);
    }

    #[test]
    fn ks_of_exact_quantiles(n in 1usize..2000, rate in 0.1f64..10.0) {
        let xs: Vec<f64> = (1..=n).map(|i| -(1.0 - (i as f64 - 0.5) / n as f64).ln() / rate).collect();
        let d = ks_statistic(&xs, |x| exponential_cdf(x, rate)).unwrap();
        prop_assert!((d - 0.5 / n as f64).abs() <= 1e-9);
    }

    #[test]
    fn log_limit_continuity(alpha1 in 0.1f64..2.0, alpha2 in 0.1f64..2.0, lambda2 in 0.0f64..3.0, z in 0.5f64..2.0) {
        let near = ApproxParams::new(1e-6, lambda2, alpha1, alpha2, 0.0, 1.0).unwrap();
        let at = ApproxParams::new(0.0, lambda2, alpha1, alpha2, 0.0, 1.0).unwrap();
        let (a, b) = (approx_pdf(z, &near).unwrap(), approx_pdf(z, &at).unwrap());
        prop_assert!((a - b).abs() <= 1e-6 * b, "{a} vs {b}");
    }

    #[test]
    fn weight_sum_is_alpha_sum(a1 in -5.0f64..5.0, a2 in -5.0f64..5.0) {
        let p = ApproxParams::new(1.0, 1.0, a1, a2, 0.0, 1.0).unwrap();
        prop_assert_eq!(weight_sum(&p), a1 + a2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rmm_density_integrates_to_one(alpha in 0.3f64..3.0, lambda in 0.5f64..3.0, l in 0.0f64..10.0) {
        let params = RmmShape::new(alpha, lambda, l).unwrap().params().unwrap();
        let mass = total_mass(&params).unwrap();
        prop_assert!((mass - 1.0).abs() <= 1e-8, "mass {mass}");
    }

    #[test]
    fn closed_form_variance_is_positive(alpha in 0.3f64..3.0, lambda in 0.5f64..3.0, l in 0.0f64..10.0) {
        let shape = RmmShape::new(alpha, lambda, l).unwrap();
        prop_assert!(shape.variance_closed_form().unwrap() > 0.0);
    }

    #[test]
    fn unimodal_when_beta0_is_zero(
        lambda1 in 1.0f64..2.0,
        lambda2 in 1.0f64..2.0,
        alpha1 in -2.0f64..2.0,
        alpha2 in 0.1f64..3.0,
        beta1 in 0.2f64..3.0,
    ) {
        prop_assume!((lambda2 - lambda1).abs() > 1e-3);
        let p = ApproxParams::new(lambda1, lambda2, alpha1, alpha2, 0.0, beta1).unwrap();
        let zs = linear_grid(0.0, 5.0, 1000);
        let fs: Vec<f64> = zs.iter().map(|&z| approx_pdf(z, &p).unwrap()).collect();
        let max = fs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let argmax: Vec<usize> = (0..fs.len()).filter(|&i| fs[i] == max).collect();
        prop_assert_eq!(argmax.len(), 1);
        // A negative first weight with λ2 > λ1 gives an interior stationary point.
        if alpha1 < 0.0 && lambda2 > lambda1 {
            let z_star = (-alpha1 / (alpha2 * beta1.powf(lambda2))).powf(1.0 / (lambda2 - lambda1));
            if z_star < 5.0 {
                let h = zs[1] - zs[0];
                prop_assert!((zs[argmax[0]] - z_star).abs() <= h, "grid {} vs {}", zs[argmax[0]], z_star);
            }
        }
    }

    #[test]
    fn weibull_mapping_verifies(b in 0.2f64..5.0, c in 0.3f64..=4.0) {
        let m = map_weibull(b, c).unwrap();
        let r = Weibull::new(c, b).unwrap();
        let d = verify_mapping(&m, |x| r.ln_pdf(x), &linear_grid(0.01 * b, 4.0 * b, 200)).unwrap();
        prop_assert!(d <= 1e-9, "{d:e}");
    }

    #[test]
    fn f_mapping_verifies(m in 0.5f64..30.0, n in 0.5f64..30.0) {
        let f = map_f(m, n).unwrap();
        let r = FisherSnedecor::new(m, n).unwrap();
        let d = verify_mapping(&f, |x| r.ln_pdf(x), &linear_grid(0.01, 10.0, 200)).unwrap();
        prop_assert!(d <= 1e-9, "{d:e}");
    }

    #[test]
    fn lognormal_mapping_verifies(mu in -2.0f64..2.0, sigma in 0.2f64..3.0) {
        let f = map_lognormal(mu, sigma).unwrap();
        let r = LogNormal::new(mu, sigma).unwrap();
        let d = verify_mapping(&f, |x| r.ln_pdf(x), &linear_grid(0.01, 10.0, 200)).unwrap();
        prop_assert!(d <= 1e-9, "{d:e}");
    }
}
