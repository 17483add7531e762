use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swipt_core::entropy::mutual_information;
use swipt_core::solver::{solve, solve_warm};
use swipt_core::{AmplitudeDistribution, ChannelSpec, PowerPolynomial, QuadratureSpec, SolveResult};

const P_A: f64 = 5.0;

fn spec(p_d: f64, r_p: f64) -> ChannelSpec {
    ChannelSpec::new(P_A, p_d, r_p, PowerPolynomial::new(vec![0.01, 0.01, 0.01]).unwrap())
}

fn certified(p_d: f64, r_p: f64) -> SolveResult {
    let res = solve(&spec(p_d, r_p)).unwrap();
    assert!(res.verified, "P_d {p_d} r_p {r_p}: {:?}", res.flags);
    res
}

#[test]
fn certified_solutions_are_feasible_and_below_the_ceiling() {
    let q = QuadratureSpec::default();
    for (p_d, r_p) in [(0.3, 4.0), (0.7, 4.0), (1.2, 5.0)] {
        let s = spec(p_d, r_p);
        let res = certified(p_d, r_p);
        let d = &res.distribution;
        assert!(d.mean_power() <= P_A + 1e-8);
        assert!(d.expect(|r| s.g.eval(r)) >= p_d - 1e-8);
        assert!(d.max_amplitude() <= r_p);
        assert!(res.rate <= (1.0 + P_A / 2.0).ln() + 1e-9);
        let mi = mutual_information(d, &q).unwrap();
        assert!((mi - res.rate).abs() < 1e-8, "{mi} vs {}", res.rate);
        assert!(res.kkt.grid_violation <= res.kkt.tolerance);
    }
}

#[test]
fn feasible_reweighting_never_beats_a_certified_law() {
    let q = QuadratureSpec::default();
    let (p_d, r_p) = (0.7, 4.0);
    let s = spec(p_d, r_p);
    let res = certified(p_d, r_p);
    let d = &res.distribution;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tried = 0;
    while tried < 20 {
        let eps = 10f64.powf(rng.random_range(-4.0..-2.0));
        let mut w: Vec<f64> = d.probabilities().iter().map(|p| p * (1.0 + eps * rng.random_range(-1.0..1.0))).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|p| *p /= total);
        let moved = AmplitudeDistribution::new(d.support().into_iter().zip(w).collect(), r_p).unwrap();
        if moved.mean_power() > P_A || moved.expect(|r| s.g.eval(r)) < p_d {
            continue;
        }
        tried += 1;
        let mi = mutual_information(&moved, &q).unwrap();
        assert!(mi <= res.rate + 1e-9, "reweighting gained {}", mi - res.rate);
    }
}

#[test]
fn results_are_reproducible_and_round_trip_through_json() {
    let a = certified(0.5, 4.0);
    let b = certified(0.5, 4.0);
    let text = a.to_json().unwrap();
    assert_eq!(text, b.to_json().unwrap());
    assert_eq!(SolveResult::from_json(&text).unwrap(), a);
}

#[test]
fn warm_start_reaches_the_cold_optimum() {
    let cold = certified(0.6, 5.0);
    let neighbour = certified(0.55, 5.0);
    let warm = solve_warm(&spec(0.6, 5.0), Some(&neighbour)).unwrap();
    assert!(warm.verified);
    assert!((warm.rate - cold.rate).abs() < 1e-7, "{} vs {}", warm.rate, cold.rate);
}

#[test]
fn infeasible_floor_is_an_error() {
    assert!(solve(&spec(0.9, 4.0)).is_err());
}
