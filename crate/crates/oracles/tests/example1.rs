use cscgd_oracles::{example1_fstar, Example1Program, QuadratureMoments};
use cscgd_queuing::presets::paper_ex1;
use cscgd_queuing::{Mg1WiredInstance, UtilityWeights};
use cscgd_core::Distribution;

#[test]
fn truncated_exponential_moments_match_closed_form() {
    for (m, u) in [(15.0, 20.0), (20.0, 30.0), (35.0, 60.0)] {
        let q = QuadratureMoments::compute(
            &Distribution::TruncatedExponential {
                mean: m,
                lower: 0.0,
                upper: Some(u),
            },
            &[1, 2],
        )
        .unwrap();
        let e = (-u / m).exp();
        let first = m - u * e / (1.0 - e);
        // E L² = 2m E L - u² e / (1 - e), by parts.
        let second = 2.0 * m * first - u * u * e / (1.0 - e);
        assert!((q.get(1).unwrap() - first).abs() < 1e-10 * first);
        assert!((q.get(2).unwrap() - second).abs() < 1e-10 * second);
    }
}

#[test]
fn paper_instance_optimum_is_feasible_and_satisfies_kkt() {
    let opt = example1_fstar(&paper_ex1()).unwrap();
    let prog = Example1Program::new(&paper_ex1()).unwrap();
    assert!(opt.f_star.is_finite());
    assert!(opt.constraint <= 1e-9);
    assert!(opt.gradient_map_norm < 1e-10);
    // The sum cap binds and no coordinate sits at a bound, so the partial
    // derivatives share one negative value (the cap multiplier).
    let sum: f64 = opt.x_star.iter().sum();
    assert!((sum - 15.0).abs() < 1e-9);
    for (i, x) in opt.x_star.iter().enumerate() {
        assert!(*x > prog.lower + 1e-6 && *x < prog.upper[i] - 1e-6);
    }
    let g = prog.gradient(&opt.x_star);
    assert!(g[0] < 0.0);
    for gi in &g {
        assert!((gi - g[0]).abs() < 1e-8, "{g:?}");
    }
    assert!(opt.grid.best_value >= opt.f_star - 1e-12);
}

#[test]
fn grid_refinement_is_stable_and_monotone() {
    let prog = Example1Program::new(&paper_ex1()).unwrap();
    let coarse = prog.grid(100).unwrap();
    let fine = prog.grid(1000).unwrap();
    assert!((coarse.best_value - fine.best_value).abs() < 1e-4 * fine.best_value.abs());
    let mut last = f64::INFINITY;
    for points in [26, 51, 101, 201, 401] {
        let r = prog.grid(points).unwrap();
        assert!(r.best_value <= last);
        assert!(r.best_value <= coarse.best_value.max(r.best_value));
        last = r.best_value;
    }
}

fn single_queue(lambda_max: f64) -> Mg1WiredInstance {
    Mg1WiredInstance {
        capacities: vec![100.0],
        lambda_min: 0.1,
        lambda_max: vec![lambda_max],
        lambda_lim: 15.0,
        d_max: 0.05,
        mean_lengths: vec![15.0],
        max_lengths: vec![20.0],
        weights: UtilityWeights {
            psi: vec![1.0],
            phi: vec![10.0],
        },
        load_margin: 0.95,
        enforce_peak_load: false,
        den_eps: 1e-9,
    }
}

#[test]
fn tight_box_returns_the_corner() {
    let opt = example1_fstar(&single_queue(0.2)).unwrap();
    assert!((opt.x_star[0] - 0.2).abs() < 1e-12);
}

#[test]
fn unattainable_delay_is_infeasible() {
    let mut inst = single_queue(5.0);
    inst.d_max = 1e-9;
    assert!(example1_fstar(&inst).is_err());
}
