use cscgd_core::{evaluate_at, LogPolicy, Regime, RngStream, UpdateMode};
use cscgd_harness::baseline::{compute_baseline, store_baseline};
use cscgd_harness::config::{ExperimentConfig, GammaSetting, OracleMode, SolverSection};
use cscgd_harness::metrics::{mann_kendall, mean_std};
use cscgd_harness::plot::plot_rows;
use cscgd_harness::problems::{resolve, InstanceSpec};
use cscgd_harness::run::{execute, run_experiment};
use cscgd_harness::HarnessError;

fn default_row(horizon: usize) -> SolverSection {
    SolverSection {
        a: 0.9167,
        b: 0.5,
        c: 0.75,
        regime: Regime::Constant,
        horizon,
        gamma: GammaSetting::Value(0.0),
        c_ell: None,
        mode: UpdateMode::Full,
        log: LogPolicy::Auto,
        initial_point: None,
    }
}

fn ex1_with_baseline(dir: &std::path::Path, horizon: usize, seeds: u64) -> ExperimentConfig {
    let spec = InstanceSpec::preset("paper-ex1");
    let cache = dir.join("cache.json");
    store_baseline(&cache, compute_baseline(&spec).unwrap()).unwrap();
    let mut cfg = ExperimentConfig::new(spec, default_row(horizon), (0..seeds).collect());
    cfg.oracle_cache = cache;
    cfg.output_dir = dir.join("out");
    cfg
}

#[test]
fn two_step_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(InstanceSpec::preset("paper-ex1"), default_row(2), vec![0]);
    cfg.oracle = OracleMode::Off;
    cfg.output_dir = dir.path().to_path_buf();
    let exp = run_experiment(&cfg).unwrap();
    assert_eq!(exp.runs.len(), 1);
    let traj = std::fs::read_to_string(dir.path().join("trajectory_seed0.csv")).unwrap();
    let lines: Vec<&str> = traj.lines().collect();
    assert_eq!(lines[0], "t,alpha,beta,delta,obj,viol_1,step_sq");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,"));
    assert!(!traj.contains('\r'));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.lines().nth(1).unwrap().starts_with("1,1,"));
    let cfg_back = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(cfg_back, cfg);
}

#[test]
fn trajectory_floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(InstanceSpec::preset("paper-ex3"), default_row(50), vec![4]);
    cfg.oracle = OracleMode::Off;
    cfg.eval_samples = 100;
    cfg.output_dir = dir.path().to_path_buf();
    let exp = run_experiment(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("trajectory_seed4.csv")).unwrap();
    let recs = &exp.runs[0].output.trajectory;
    for (line, rec) in text.lines().skip(1).zip(recs) {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[4], rec.objective_estimate);
        assert_eq!(*fields.last().unwrap(), rec.step_sq_norm);
    }
}

#[test]
fn gap_without_baseline_explains_the_fix() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(InstanceSpec::preset("paper-ex4"), default_row(10), vec![0]);
    cfg.oracle_cache = dir.path().join("none.json");
    match execute(&cfg) {
        Err(e @ HarnessError::MissingBaseline { .. }) => {
            assert!(e.to_string().contains("cscgd oracle --preset paper-ex4"))
        }
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("gap without baseline must fail"),
    }
}

#[test]
fn unknown_preset_is_rejected() {
    let cfg = ExperimentConfig::new(InstanceSpec::preset("paper-ex9"), default_row(10), vec![0]);
    assert!(matches!(execute(&cfg), Err(HarnessError::UnknownPreset(_))));
}

#[test]
fn example1_final_violation_is_nonpositive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ex1_with_baseline(dir.path(), 10_000, 10);
    run_experiment(&cfg).unwrap();
    let summary = std::fs::read_to_string(cfg.output_dir.join("summary.csv")).unwrap();
    let header: Vec<&str> = summary.lines().next().unwrap().split(',').collect();
    let last: Vec<f64> = summary
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    let mean = last[header.iter().position(|h| *h == "mean_viol_1").unwrap()];
    let sd = last[header.iter().position(|h| *h == "std_viol_1").unwrap()];
    assert!(mean - 3.0 * sd / 10f64.sqrt() <= 0.0, "violation {mean} ± {sd}");
}

#[test]
fn example1_tracked_objective_matches_last_iterate() {
    // f(y_T) estimates F at the last iterate x_T, not at the tail average.
    let dir = tempfile::tempdir().unwrap();
    let cfg = ex1_with_baseline(dir.path(), 10_000, 50);
    let exp = execute(&cfg).unwrap();
    let problem = resolve(&cfg.instance).unwrap().problem;
    let tracked: Vec<f64> = exp.runs.iter().map(|r| r.summary.tracked_objective).collect();
    let fresh: Vec<f64> = exp
        .runs
        .iter()
        .map(|r| {
            let mut rng = RngStream::new(r.summary.seed, 99);
            evaluate_at(problem.as_ref(), &r.output.final_state.x, 20_000, &mut rng)
                .unwrap()
                .objective
        })
        .collect();
    let (mt, st) = mean_std(&tracked);
    let (mf, sf) = mean_std(&fresh);
    let n = tracked.len() as f64;
    let pooled = (st * st / n + sf * sf / n).sqrt();
    eprintln!("tracked {mt} ± {st}, F(x_T) {mf} ± {sf}");
    assert!((mt - mf).abs() <= 3.0 * pooled, "tracked {mt} ± {st}, fresh {mf} ± {sf}");
}

#[test]
#[ignore = "f(y_T) tracks the last iterate; x_hat trails it by about 0.1 at T = 1e4"]
fn example1_tracked_objective_matches_tail_average() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ex1_with_baseline(dir.path(), 10_000, 50);
    let exp = execute(&cfg).unwrap();
    let tracked: Vec<f64> = exp.runs.iter().map(|r| r.summary.tracked_objective).collect();
    let fresh: Vec<f64> = exp.runs.iter().map(|r| r.summary.objective).collect();
    let (mt, st) = mean_std(&tracked);
    let (mf, sf) = mean_std(&fresh);
    let n = tracked.len() as f64;
    let pooled = (st * st / n + sf * sf / n).sqrt();
    assert!((mt - mf).abs() <= 3.0 * pooled, "tracked {mt} ± {st}, fresh {mf} ± {sf}");
}

#[test]
fn example1_gap_series_trends_down() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ex1_with_baseline(dir.path(), 10_000, 50);
    let exp = execute(&cfg).unwrap();
    let rows = plot_rows(&exp.traces(), Some(exp.baseline.as_ref().unwrap().f_star), cfg.plot_points);
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap.unwrap().0).collect();
    let mk = mann_kendall(&gaps);
    assert!(mk.s < 0, "{mk:?}");
    assert_eq!(rows.first().unwrap().t, 1);
    assert_eq!(rows.last().unwrap().t, 10_000);
}

#[test]
fn zero_violation_gamma_tightens_the_constraint() {
    let mut cfg = ExperimentConfig::new(InstanceSpec::preset("toy-constrained"), default_row(10_000), vec![0]);
    let plain = execute(&cfg).unwrap();
    cfg.solver.gamma = GammaSetting::Rule(cscgd_harness::GammaRule::ZeroViolation);
    let tight = execute(&cfg).unwrap();
    assert!(tight.penalty.gamma > 0.0);
    assert!(plain.runs[0].summary.max_violation.unwrap() > 0.0);
    assert!(tight.runs[0].summary.max_violation.unwrap() <= 0.0);
}

#[test]
fn runs_csv_excludes_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(InstanceSpec::preset("mm1"), default_row(100), vec![0, 1]);
    cfg.output_dir = dir.path().to_path_buf();
    let exp = run_experiment(&cfg).unwrap();
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert!(!runs.contains("wall"));
    assert_eq!(runs.lines().count(), 3);
    assert!(runs.lines().nth(1).unwrap().contains(&exp.hash));
    // No constraint: violation fields empty, plot violation columns empty.
    let plot = std::fs::read_to_string(dir.path().join("plot.csv")).unwrap();
    assert!(plot.lines().nth(1).unwrap().ends_with(",,"));
}
