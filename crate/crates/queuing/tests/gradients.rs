//! Analytic Jacobians and gradients against centered finite differences
//! for every instance, at random interior points.

use cscgd_core::{CompositionalProblem, Matrix, RngStream};
use cscgd_queuing::constants::sample_designs;
use cscgd_queuing::presets::InstanceConfig;
use cscgd_queuing::PRESET_NAMES;

const H: f64 = 1e-6;
const TOL: f64 = 1e-5;

/// Worst per-output relative error between an analytic Jacobian
/// (`[J]_{kj} = ∂F_j/∂v_k`) and centered differences of `map` at `v`.
fn fd_error(map: &dyn Fn(&[f64]) -> Vec<f64>, jac: &Matrix, v: &[f64]) -> f64 {
    let base = map(v);
    let outputs = base.len();
    let mut fd = Matrix::zeros(v.len(), outputs);
    for k in 0..v.len() {
        let h = H * v[k].abs().max(1.0);
        let mut up = v.to_vec();
        let mut dn = v.to_vec();
        up[k] += h;
        dn[k] -= h;
        let (fu, fdn) = (map(&up), map(&dn));
        for j in 0..outputs {
            fd.set(k, j, (fu[j] - fdn[j]) / (2.0 * h));
        }
    }
    let mut worst: f64 = 0.0;
    for j in 0..outputs {
        // Gradients far below the output's own magnitude are compared on an
        // absolute footing; differencing cannot resolve them relatively.
        let floor = 1e-4 * base[j].abs().max(1.0);
        let scale = (0..v.len())
            .map(|k| jac.get(k, j).abs().max(fd.get(k, j).abs()))
            .fold(floor, f64::max);
        for k in 0..v.len() {
            worst = worst.max((jac.get(k, j) - fd.get(k, j)).abs() / scale);
        }
    }
    worst
}

fn column(v: Vec<f64>) -> Matrix {
    let rows: Vec<Vec<f64>> = v.into_iter().map(|x| vec![x]).collect();
    Matrix::from_rows(&rows)
}

/// Shrinks a feasible design toward the box midpoint so every probe stays
/// inside the domain.
fn interior(problem: &dyn CompositionalProblem, x: &[f64]) -> Vec<f64> {
    let mid = problem.feasible_set().box_midpoint();
    x.iter().zip(&mid).map(|(a, m)| m + 0.95 * (a - m)).collect()
}

fn check_problem(name: &str, problem: &dyn CompositionalProblem) {
    let mut rng = RngStream::new(17, 0);
    let designs = sample_designs(problem.feasible_set(), 100, 99).unwrap();
    let dims = problem.dims();
    let mut checked = 0;
    let mut skipped = 0;
    for x in designs.iter().rev().take(100) {
        let x = interior(problem, x);
        let zeta = problem.sample(&mut rng);
        if problem.inner_kink_distance(&x, &zeta) <= 10.0 * H * (1.0 + x.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
            skipped += 1;
            continue;
        }
        let e = fd_error(&|v: &[f64]| problem.inner_g(v, &zeta), &problem.inner_g_jacobian(&x, &zeta), &x);
        assert!(e < TOL, "{name}: g Jacobian error {e} at {x:?}, sample {zeta:?}");
        if dims.j > 0 {
            let e = fd_error(&|v: &[f64]| problem.inner_h(v, &zeta), &problem.inner_h_jacobian(&x, &zeta), &x);
            assert!(e < TOL, "{name}: h Jacobian error {e} at {x:?}");
        }
        let (y, z) = problem.exact_expectations(&x).unwrap_or_else(|| {
            (problem.inner_g(&x, &zeta), problem.inner_h(&x, &zeta))
        });
        let ymax = y.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if problem.outer_f_kink_distance(&y) > 10.0 * H * ymax {
            let e = fd_error(
                &|v: &[f64]| vec![problem.outer_f(v)],
                &column(problem.outer_f_gradient(&y)),
                &y,
            );
            assert!(e < TOL, "{name}: f gradient error {e} at {y:?}");
        } else {
            skipped += 1;
        }
        if dims.j > 0 {
            let zmax = z.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            if problem.outer_q_kink_distance(&z) > 10.0 * H * zmax {
                let e = fd_error(&|v: &[f64]| problem.outer_q(v), &problem.outer_q_jacobian(&z), &z);
                assert!(e < TOL, "{name}: q Jacobian error {e} at {z:?}");
            } else {
                skipped += 1;
            }
        }
        checked += 1;
    }
    assert!(checked >= 90, "{name}: only {checked} points checked ({skipped} skipped)");
}

#[test]
fn every_preset_matches_finite_differences() {
    for name in PRESET_NAMES {
        let p = InstanceConfig::preset(name).unwrap().build().unwrap();
        check_problem(name, &*p);
    }
}

#[test]
fn shapes_are_consistent() {
    let mut rng = RngStream::new(1, 0);
    for name in PRESET_NAMES {
        let p = InstanceConfig::preset(name).unwrap().build().unwrap();
        let x = p.feasible_set().box_midpoint();
        let s = p.sample(&mut rng);
        let y = p.inner_g(&x, &s);
        let z = p.inner_h(&x, &s);
        cscgd_core::problem::check_shapes(&*p, &x, &s, &y, &z).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
