use proptest::prelude::*;

use swipt_core::distributions::{make_flash, Cscg, MixtureBase};
use swipt_core::entropy::{entropy_H, mutual_information, output_density};
use swipt_core::powermodel::{
    delivered_power, delivered_power_zero_mean, gaussian_moments, MomentSet,
};
use swipt_core::quadrature::integrate;
use swipt_core::rpregion::{PdGrid, SweepConfig};
use swipt_core::solver::gaussian_rate;
use swipt_core::specfun::{
    bessel_i0, bessel_i0_bound_loose, bessel_i0_bound_simple, bessel_i0_upper_bound, kernel,
};
use swipt_core::{
    AmplitudeConvention, AmplitudeDistribution, MixtureSpec, PowerPolynomial, PowerSpec,
    QuadratureSpec, RectennaModel,
};

fn rect() -> impl Strategy<Value = RectennaModel> {
    (1e-3..1.0f64, 0.0..0.1f64).prop_map(|(k2, k4)| RectennaModel::new(k2, k4).unwrap())
}

/// Increasing supports with normalized weights.
fn distribution(max_points: usize) -> impl Strategy<Value = AmplitudeDistribution> {
    prop::collection::vec((0.05..2.0f64, 0.05..1.0f64), 1..=max_points).prop_map(|raw| {
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        let mut r = 0.0;
        let points: Vec<(f64, f64)> = raw
            .iter()
            .enumerate()
            .map(|(i, &(gap, w))| {
                if i > 0 {
                    r += gap;
                }
                (r, w / total)
            })
            .collect();
        AmplitudeDistribution::normalized(points, r + 1.0, 1e-9).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bessel_bounds_hold(x in 1e-3..50.0f64, a in 0.05..0.95f64) {
        let i0 = bessel_i0(x).unwrap();
        prop_assert!(i0 < bessel_i0_upper_bound(x, a).unwrap());
        prop_assert!(i0 < bessel_i0_bound_loose(x).unwrap());
        prop_assert!(i0 < bessel_i0_bound_simple(x).unwrap());
    }

    #[test]
    fn kernel_is_a_bounded_density(big_r in 0.0..20.0f64, r in 0.0..20.0f64) {
        let k = kernel(big_r, r).unwrap();
        prop_assert!((0.0..1.0).contains(&k));
        if r > 0.0 {
            let envelope = (big_r / r).sqrt() * (-(big_r - r).powi(2) / 2.0).exp();
            prop_assert!(k <= envelope, "{k} > {envelope}");
        }
    }

    #[test]
    fn delivered_power_is_symmetric_in_real_and_imaginary(
        mu_r in -3.0..3.0f64, mu_i in -3.0..3.0f64,
        var_r in 0.0..4.0f64, var_i in 0.0..4.0f64,
        rect in rect(),
    ) {
        let m = gaussian_moments(mu_r, mu_i, var_r, var_i).unwrap();
        let a = delivered_power(&m, &rect).unwrap();
        let b = delivered_power(&m.swapped(), &rect).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        let p = MomentSet::point(mu_r, mu_i);
        let a = delivered_power(&p, &rect).unwrap();
        let b = delivered_power(&p.swapped(), &rect).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn zero_mean_path_is_bitwise_equal(var_r in 0.0..4.0f64, var_i in 0.0..4.0f64, rect in rect()) {
        let m = gaussian_moments(0.0, 0.0, var_r, var_i).unwrap();
        let general = delivered_power(&m, &rect).unwrap();
        let special = delivered_power_zero_mean(&m, &rect).unwrap();
        prop_assert_eq!(general.to_bits(), special.to_bits());
    }

    #[test]
    fn complex_gaussian_power_grows_with_variance(v in 0.0..4.0f64, dv in 1e-3..1.0f64, rect in rect()) {
        let low = delivered_power(&gaussian_moments(0.0, 0.0, v, v).unwrap(), &rect).unwrap();
        let high = delivered_power(&gaussian_moments(0.0, 0.0, v + dv, v + dv).unwrap(), &rect).unwrap();
        prop_assert!(high > low);
    }

    #[test]
    fn flash_meets_the_power_budget(l in 2u32..200, p_a in 0.1..50.0f64) {
        let d = make_flash(l, p_a).unwrap();
        prop_assert!((d.mean_power() - p_a).abs() <= 1e-12 * p_a.max(1.0));
    }

    #[test]
    fn mixture_moments_are_affine_in_tau(tau in 0.01..0.99f64, l in 2u32..40, p_a in 0.5..20.0f64) {
        let g = PowerPolynomial::new(vec![0.01, 0.01, 0.01]).unwrap();
        let cscg = Cscg::new(p_a, AmplitudeConvention::PowerConsistent).unwrap();
        let spike = make_flash(l, p_a).unwrap();
        let mix = MixtureSpec::new(tau, MixtureBase::Cscg(cscg), spike.clone()).unwrap();
        let power = (1.0 - tau) * cscg.even_moment(1) + tau * spike.mean_power();
        let delivered = (1.0 - tau) * cscg.expected_g(&g) + tau * spike.expect(|r| g.eval(r));
        prop_assert!((mix.mean_power() - power).abs() <= 1e-12 * power);
        prop_assert!((mix.expected_g(&g) - delivered).abs() <= 1e-10 * delivered);
    }

    #[test]
    fn distribution_json_round_trips(d in distribution(8)) {
        let back = AmplitudeDistribution::from_json(&d.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn gaussian_rates_stay_between_the_endpoints(p_i in 0.0..2.5f64) {
        let rate = gaussian_rate(5.0, p_i).unwrap();
        prop_assert!(rate <= 3.5f64.ln() + 1e-15);
        prop_assert!(rate >= 0.5 * 6f64.ln() - 1e-15);
    }

    #[test]
    fn sweep_config_round_trips_through_toml(
        p_a in 0.5..20.0f64,
        peaks in prop::collection::vec(prop_oneof![Just(f64::INFINITY), 1.0..10.0f64], 1..4),
        points in 2usize..60,
    ) {
        let mut cfg = SweepConfig::new(p_a, PowerSpec::Raw(PowerPolynomial::new(vec![0.01, 0.02]).unwrap()), peaks);
        cfg.grid = PdGrid::Auto { points };
        let text = toml::to_string(&cfg).unwrap();
        let back: SweepConfig = toml::from_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    // Each case integrates several output densities; keep the count small.
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mutual_information_is_concave_in_the_weights(
        support in prop::collection::vec(0.1..1.5f64, 3..=5),
        p in prop::collection::vec(0.05..1.0f64, 5),
        q in prop::collection::vec(0.05..1.0f64, 5),
    ) {
        let quad = QuadratureSpec::default();
        let m = support.len();
        let mut r = 0.0;
        let positions: Vec<f64> = support.iter().map(|gap| { r += gap; r }).collect();
        let law = |w: &[f64]| {
            let total: f64 = w[..m].iter().sum();
            let pts = positions.iter().zip(w).map(|(&r, &w)| (r, w / total)).collect();
            AmplitudeDistribution::normalized(pts, r + 1.0, 1e-9).unwrap()
        };
        let (a, b) = (law(&p), law(&q));
        let mid_w: Vec<f64> = a.probabilities().iter().zip(b.probabilities()).map(|(x, y)| 0.5 * (x + y)).collect();
        let mid = law(&mid_w);
        let ia = mutual_information(&a, &quad).unwrap();
        let ib = mutual_information(&b, &quad).unwrap();
        let im = mutual_information(&mid, &quad).unwrap();
        prop_assert!(im >= 0.5 * (ia + ib) - 1e-9, "{im} < ({ia} + {ib})/2");
    }

    #[test]
    fn output_density_integrates_to_one(d in distribution(6)) {
        let q = QuadratureSpec::default();
        let upper = d.max_amplitude() + q.tail_margin;
        let mut breaks: Vec<f64> = vec![0.0];
        breaks.extend(d.support().into_iter().filter(|&r| r > 0.0));
        breaks.push(upper);
        let total = integrate(|big_r| output_density(&d, big_r), &breaks, &q).unwrap().value;
        prop_assert!((total - 1.0).abs() <= 1e-8, "{total}");
    }

    #[test]
    fn doubling_the_tail_margin_leaves_entropy_unchanged(d in distribution(6)) {
        let q = QuadratureSpec::default();
        let wide = QuadratureSpec { tail_margin: 2.0 * q.tail_margin, ..q };
        let h = entropy_H(&d, &q).unwrap();
        let h_wide = entropy_H(&d, &wide).unwrap();
        prop_assert!((h - h_wide).abs() < q.abs_tol, "{h} vs {h_wide}");
    }
}
