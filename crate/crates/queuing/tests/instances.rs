use cscgd_core::montecarlo::monte_carlo_mean;
use cscgd_core::{CompositionalProblem, Distribution, RngStream};
use cscgd_queuing::ergodic::{rate, rate_dp};
use cscgd_queuing::presets::{ex5_placeholder, paper_ex1, paper_ex2, paper_ex3, paper_ex4};
use cscgd_queuing::safeguard::{safe_inverse, safe_log, sigmoid, DEFAULT_DEN_EPS};
use cscgd_queuing::{mm1_optimal_mu, mm1_utility, InstanceConfig, Mm1Problem, ReportsConstants, PRESET_NAMES};
use proptest::prelude::*;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn wired_length_moments_match_direct_integration() {
    let p = paper_ex1().build().unwrap();
    let inst = p.instance();
    for i in 0..3 {
        let (m, lmax) = (inst.mean_lengths[i], inst.max_lengths[i]);
        let dens = |x: f64| (-x / m).exp();
        let z = simpson(dens, 0.0, lmax, 20_000);
        for (k, got) in [(1, p.moments().first[i]), (2, p.moments().second[i]), (4, p.moments().fourth[i])] {
            let want = simpson(|x| x.powi(k) * dens(x), 0.0, lmax, 20_000) / z;
            assert!((got - want).abs() <= 1e-9 * want, "queue {i}, moment {k}: {got} vs {want}");
        }
    }
}

#[test]
fn wired_objective_is_the_pk_formula() {
    let p = paper_ex1().build().unwrap();
    let inst = p.instance().clone();
    let x = [2.0, 3.0, 4.0];
    let (y, z) = p.exact_expectations(&x).unwrap();
    let mut want = 0.0;
    for i in 0..3 {
        let c = inst.capacities[i];
        let a = x[i] * p.moments().first[i];
        let b = x[i] * p.moments().second[i];
        want += inst.weights.phi[i] * b / (2.0 * c * (c - a)) - inst.weights.psi[i] * a.ln();
    }
    assert!((p.outer_f(&y) - want).abs() < 1e-12 * want.abs());
    let delays = p.delays(&z);
    let worst = delays.iter().cloned().fold(f64::MIN, f64::max);
    assert!((p.outer_q(&z)[0] - (worst - inst.d_max)).abs() < 1e-15);
}

#[test]
fn wired_exact_expectations_agree_with_sampling() {
    let p = paper_ex1().build().unwrap();
    let x = [3.0, 5.0, 7.0];
    let (y, _) = p.exact_expectations(&x).unwrap();
    let mut rng = RngStream::new(3, 0);
    let est = monte_carlo_mean(|r| p.sample(r), |s| p.inner_g(&x, s), 200_000, &mut rng).unwrap();
    for k in 0..y.len() {
        assert!((est.mean[k] - y[k]).abs() < 5.0 * est.std_err[k], "component {k}");
    }
}

#[test]
fn wired_composite_objective_is_convex_on_segments() {
    let p = paper_ex1().build().unwrap();
    let set = p.feasible_set();
    let (lo, hi) = set.bounds();
    let mut rng = RngStream::new(5, 0);
    let obj = |x: &[f64]| p.outer_f(&p.exact_expectations(x).unwrap().0);
    for _ in 0..200 {
        let a: Vec<f64> = (0..3).map(|i| lo[i] + rng.uniform() * (hi[i] - lo[i])).collect();
        let b: Vec<f64> = (0..3).map(|i| lo[i] + rng.uniform() * (hi[i] - lo[i])).collect();
        let t = rng.uniform();
        let m: Vec<f64> = a.iter().zip(&b).map(|(u, v)| (1.0 - t) * u + t * v).collect();
        let chord = (1.0 - t) * obj(&a) + t * obj(&b);
        assert!(obj(&m) <= chord + 1e-10 * chord.abs().max(1.0));
    }
}

#[test]
fn ergodic_rate_at_lower_corner() {
    assert!((rate(10.0, 14.0, 0.25) - 10.0 * 4.5f64.ln()).abs() < 1e-12);
}

#[test]
fn ergodic_constants() {
    let p = paper_ex2(5).build().unwrap();
    let r = p.constant_report().unwrap();
    assert!((r.c_h - 10.0 / 4.5f64.powi(2)).abs() < 1e-12);
    assert_eq!((r.c_q, r.l_q), (1.0, 0.0));
}

#[test]
fn ergodic_min_rate_agrees_with_sampling() {
    for k in [5, 10] {
        let p = paper_ex2(k).build().unwrap();
        let x = [5.0, 5.0, 5.0, 20.0, 40.0, 60.0];
        let want = p.expected_min_rate(&x[3..]).unwrap();
        let (_, z) = p.exact_expectations(&x).unwrap();
        assert!((z[0] + want).abs() < 1e-6 * want, "K = {k}: {} vs {want}", -z[0]);
        let mut rng = RngStream::new(8, k as u64);
        let est = monte_carlo_mean(|r| p.sample(r), |s| p.inner_h(&x, s), 100_000, &mut rng).unwrap();
        assert!((est.mean[0] + want).abs() < 5.0 * est.std_err[0], "K = {k}");
        let (y, _) = p.exact_expectations(&x).unwrap();
        let est = monte_carlo_mean(|r| p.sample(r), |s| p.inner_g(&x, s), 100_000, &mut rng).unwrap();
        for c in 0..y.len() {
            assert!((est.mean[c] - y[c]).abs() <= 5.0 * est.std_err[c] + 1e-12, "K = {k}, component {c}");
        }
    }
}

#[test]
fn outage_constants_and_saturation() {
    let p = paper_ex3().build().unwrap();
    let r = p.constant_report().unwrap();
    let want = 3.0 + 3.0 * 0.5 * (1.0 + (100.0 * 0.25 / 3.5f64).powi(2));
    assert!((r.c_g - want).abs() < 1e-9);
    // Every channel state supports more than the target rate, so the
    // smoothed outage is essentially zero.
    let x = [5.0, 5.0, 5.0, 10.0, 10.0, 10.0];
    let (y, _) = p.exact_expectations(&x).unwrap_or_else(|| {
        let mut rng = RngStream::new(0, 0);
        let e = monte_carlo_mean(|r| p.sample(r), |s| p.inner_g(&x, s), 1000, &mut rng).unwrap();
        (e.mean, Vec::new())
    });
    assert!(y[..3].iter().all(|v| *v < 1e-30));
}

#[test]
fn effective_capacity_constants_and_limits() {
    let p = paper_ex4().build().unwrap();
    let r = p.constant_report().unwrap();
    let base = (1.0 + 4.0 * 1e4) * 1e4;
    assert!((r.c_g - base * 0.81).abs() < 1e-6 * r.c_g);
    assert!((r.v_g - base * 0.9f64.powi(4)).abs() < 1e-6 * r.v_g);
    // Service mean equal to the arrival mean: zero exponent, capacity m^a.
    let (theta, alpha) = p.exponent_and_capacity(0, 10.0, 150.0);
    assert_eq!(theta, 0.0);
    assert!((alpha - 10.0).abs() < 1e-12);
    // Unsafeguarded exponent `(u - m^a) / (σ² + v - u²)` on the safe region.
    let (u, v): (f64, f64) = (14.0, 200.0);
    let (theta, alpha) = p.exponent_and_capacity(1, u, v);
    let want = (u - 10.0) / (25.0 + v - u * u);
    assert!((theta - want).abs() < 1e-12);
    assert!((alpha - (10.0 + 12.5 * want)).abs() < 1e-12);
}

fn one_class_cloud(sharpness: Option<f64>) -> cscgd_queuing::Cloud {
    let mut inst = ex5_placeholder();
    inst.prices.truncate(1);
    inst.subscribers.truncate(1);
    inst.loads = vec![Distribution::Empirical { support: vec![0.0, 1.0, 2.0] }];
    inst.first_resource = [0.5, 2.0];
    inst.capacity = [0.5, 1000.0];
    inst.sharpness = sharpness;
    inst.build().unwrap()
}

#[test]
fn cloud_blocking_by_enumeration() {
    let p = one_class_cloud(None);
    let (y, _) = p.exact_expectations(&[1.0, 1.0]).unwrap();
    assert!((p.blocking(&y)[0] - 0.5).abs() < 1e-15);
    let (y, _) = p.exact_expectations(&[1.0, 500.0]).unwrap();
    assert_eq!(p.blocking(&y)[0], 0.0);
}

#[test]
fn cloud_smoothing_approaches_hard_indicators() {
    let hard = one_class_cloud(None);
    let (yh, _) = hard.exact_expectations(&[1.0, 1.5]).unwrap();
    let mut last = f64::INFINITY;
    for eta in [1.0, 10.0, 100.0] {
        let soft = one_class_cloud(Some(eta));
        let (ys, _) = soft.exact_expectations(&[1.0, 1.5]).unwrap();
        let err = yh.iter().zip(&ys).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-12);
}

#[test]
fn cloud_parametrization_round_trips() {
    let p = ex5_placeholder().build().unwrap();
    let r = [2.0, 3.0, 5.5];
    let x = p.design(&r, 30.0);
    assert_eq!(p.resources(&x), r.to_vec());
    assert_eq!(x[3], 30.0);
}

#[test]
fn mm1_optimum_beats_a_fine_grid() {
    for (lambda, r, h) in [(1.0, 1.0, 0.1), (5.0, 2.0, 1.0), (0.5, 3.0, 2.0)] {
        let p = Mm1Problem::new(lambda, r, h).unwrap();
        let star = mm1_optimal_mu(lambda, r, h).unwrap();
        assert_eq!(p.optimum(), star);
        let (lo, hi) = (lambda + 1e-3, lambda + 10.0);
        let best = (0..=100_000)
            .map(|k| lo + (hi - lo) * k as f64 / 1e5)
            .map(|mu| (mu, mm1_utility(mu, lambda, r, h).unwrap()))
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert!((best.0 - star).abs() <= (hi - lo) / 1e5);
        assert!(mm1_utility(star, lambda, r, h).unwrap() >= best.1);
    }
}

#[test]
fn presets_round_trip_through_toml() {
    for name in PRESET_NAMES {
        let cfg = InstanceConfig::preset(name).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back: InstanceConfig = toml::from_str(&text).unwrap();
        assert_eq!(serde_json::to_value(&cfg).unwrap(), serde_json::to_value(&back).unwrap(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn rate_is_increasing_in_power(b in 1.0..100.0f64, p in 0.01..100.0f64, dp in 1e-6..10.0f64, z in 0.01..50.0f64) {
        prop_assert!(rate(b, p + dp, z) > rate(b, p, z));
        prop_assert!(rate_dp(b, p, z) > 0.0);
    }

    #[test]
    fn safeguards_agree_with_plain_formulas_on_the_safe_region(s in 1e-6..1e6f64) {
        let eps = DEFAULT_DEN_EPS;
        let (v, d) = safe_inverse(s, eps);
        prop_assert!((v - 1.0 / s).abs() <= 1e-15 * v);
        prop_assert!((d + 1.0 / (s * s)).abs() <= 1e-15 * d.abs());
        let (v, d) = safe_log(s, eps);
        prop_assert_eq!(v, s.ln());
        prop_assert!((d - 1.0 / s).abs() <= 1e-15 * d);
    }

    #[test]
    fn safeguards_are_finite_and_continuous_everywhere(s in -1e6..1e6f64) {
        let eps = 1e-3;
        for f in [safe_inverse, safe_log] {
            let (v, d) = f(s, eps);
            prop_assert!(v.is_finite() && d.is_finite());
            let (vl, _) = f(eps - 1e-12, eps);
            let (vr, _) = f(eps + 1e-12, eps);
            prop_assert!((vl - vr).abs() < 1e-6 * vr.abs().max(1.0));
        }
    }

    #[test]
    fn sigmoid_tends_to_the_indicator(t in prop_oneof![-10.0..-0.01f64, 0.01..10.0f64]) {
        let ind = if t > 0.0 { 1.0 } else { 0.0 };
        let far = sigmoid(1e4 * t).0;
        prop_assert!((far - ind).abs() < 1e-40);
        prop_assert!((sigmoid(t).0 + sigmoid(-t).0 - 1.0).abs() < 1e-15);
    }
}
