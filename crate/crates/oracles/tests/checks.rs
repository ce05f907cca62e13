use cscgd_core::penalty::{kink_distance, penalty_gradient, penalty_value};
use cscgd_core::{CompositionalProblem, Matrix, PenaltyParams};
use cscgd_oracles::hessian::ErgodicSummand;
use cscgd_oracles::{
    check_problem, finite_difference_check, hessian_psd_scan, saa_local_minimum, AxisSpec, ErrorNorm, Grid2d,
    LocalOptions,
};
use cscgd_queuing::{mm1_optimal_mu, InstanceConfig, Mm1Problem, PRESET_NAMES};

#[test]
fn every_preset_passes_the_gradient_suite() {
    for name in PRESET_NAMES {
        let p = InstanceConfig::preset(name).unwrap().build().unwrap();
        let r = check_problem(&*p, 100, 1e-6, 2024).unwrap();
        assert!(r.passes(1e-5, 90), "{name}: {r:?}");
    }
}

#[test]
fn penalty_near_its_kink_is_skipped() {
    let params = PenaltyParams::new(0.0, 2.0).unwrap();
    let w = [1e-9];
    let j = Matrix::from_rows(&[penalty_gradient(&w, &params).unwrap()]);
    let map = |v: &[f64]| vec![penalty_value(v, &params).unwrap()];
    let out = finite_difference_check(&map, &j, &w, 1e-6, ErrorNorm::PerOutput, kink_distance(&w, &params));
    assert_eq!(out.to_string(), "skipped: kink proximity");
    let w = [0.7];
    let j = Matrix::from_rows(&[penalty_gradient(&w, &params).unwrap()]);
    let out = finite_difference_check(&map, &j, &w, 1e-6, ErrorNorm::PerOutput, kink_distance(&w, &params));
    assert!(out.error().unwrap() < 1e-8);
}

#[test]
fn ergodic_summand_is_convex_on_a_coarse_grid() {
    let f = ErgodicSummand::new(5, 10.0, 0.25, 0.1);
    let grid = Grid2d {
        x: AxisSpec::new(0.1, 15.0, 6).unwrap(),
        y: AxisSpec::new(14.0, 100.0, 6).unwrap(),
    };
    let s = hessian_psd_scan(|l, p| f.value(l, p), &grid).unwrap();
    assert!(s.is_psd(), "min eigenvalue {} at {:?}", s.min_eigenvalue, s.argmin);
    assert!(f.value(1e3, 14.0).is_err());
}

#[test]
fn sample_average_descent_finds_the_mm1_optimum() {
    let p = Mm1Problem::new(2.0, 1.0, 0.5).unwrap();
    let start = p.feasible_set().box_midpoint();
    let r = saa_local_minimum(&p, &start, &LocalOptions { samples: 2, ..Default::default() }).unwrap();
    assert!(r.converged);
    assert!((r.x[0] - mm1_optimal_mu(2.0, 1.0, 0.5).unwrap()).abs() < 1e-6);
}

#[test]
fn sample_average_descent_improves_nonconvex_instances() {
    for name in ["paper-ex3", "paper-ex4"] {
        let p = InstanceConfig::preset(name).unwrap().build().unwrap();
        let start = p.feasible_set().box_midpoint();
        let opts = LocalOptions {
            samples: 2000,
            max_iter: 5000,
            ..Default::default()
        };
        let r = saa_local_minimum(&*p, &start, &opts).unwrap();
        let at_start = saa_local_minimum(&*p, &start, &LocalOptions { max_iter: 0, ..opts }).unwrap();
        assert!(r.value <= at_start.value, "{name}");
        assert!(r.gradient_map_norm < 1e-4 || r.converged, "{name}: {r:?}");
    }
}

mod projections {
    use cscgd_core::FeasibleSet;
    use cscgd_oracles::projection::project;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn breakpoint_and_bisection_projections_agree(
            v in prop::collection::vec(-20.0..20.0f64, 4),
            widths in prop::collection::vec(0.0..5.0f64, 4),
            cap_frac in 0.0..1.5f64,
        ) {
            let lower = vec![-1.0; 4];
            let upper: Vec<f64> = widths.iter().map(|w| -1.0 + w).collect();
            let cap = -4.0 + cap_frac * widths.iter().sum::<f64>();
            let set = FeasibleSet::box_with_sum_cap(lower, upper, cap).unwrap();
            let a = project(&set, &v).unwrap();
            let b = set.project(&v).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-8, "{:?} vs {:?}", a, b);
            }
        }
    }
}
