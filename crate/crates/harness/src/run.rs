//! Multi-seed experiment execution and the files it writes.
//!
//! Seeds run in parallel; each produces its own trajectory file, and the
//! aggregates are written after all seeds finish. Nothing time-dependent
//! is written, so repeated runs give identical bytes.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use cscgd_core::montecarlo::default_penalty;
use cscgd_core::{evaluate_at, run, LogPolicy, PenaltyParams, RngStream, RunOutput, SolverConfig, TrajectoryRecord};
use cscgd_queuing::{ConstantReport, QueuingProblem};

use crate::baseline::{lookup_baseline, Baseline};
use crate::config::{ExperimentConfig, GammaRule, GammaSetting, OracleMode};
use crate::error::{io_err, HarnessError, Result};
use crate::metrics::mean_std;
use crate::plot::{emit_plot_data, subsample_positions, PlotTrace};
use crate::problems::resolve;

/// RNG stream for evaluating designs, distinct from the solver's stream.
pub const EVAL_STREAM: u64 = 0xe7a1;
/// RNG seed and stream for the corner scan behind the automatic `C_ℓ`.
pub const PENALTY_SEED: u64 = 0xc0_4e75;

/// `γ = sqrt(J T^{c-a} (ω + sqrt(C_f C_g) D_x) / 2^{c-a})` with `ω = 0`,
/// the margin that removes the constraint-violation term of the bound.
pub fn zero_violation_gamma(j: usize, k: &ConstantReport, a: f64, c: f64, horizon: usize) -> f64 {
    let e = c - a;
    (j as f64 * (horizon as f64).powf(e) * (k.c_f * k.c_g).sqrt() * k.d_x / 2f64.powf(e)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub x_hat: Vec<f64>,
    /// `F(x̂)`, exact or on a fresh Monte-Carlo batch.
    pub objective: f64,
    pub objective_std_err: f64,
    /// `max_j Q_j(x̂)`; absent without constraints.
    pub max_violation: Option<f64>,
    pub max_violation_std_err: Option<f64>,
    /// `F(x̂) - F*`.
    pub gap: Option<f64>,
    /// `F(x_1)` on the same batch as `F(x̂)`.
    pub initial_objective: f64,
    /// `f(y_T)` from the solver's tracking estimate.
    pub tracked_objective: f64,
    pub wall_time_secs: f64,
    pub config_hash: String,
}

pub struct SeedRun {
    pub output: RunOutput,
    pub summary: RunSummary,
    pub trace: PlotTrace,
}

pub struct Experiment {
    pub config: ExperimentConfig,
    pub hash: String,
    pub label: String,
    pub penalty: PenaltyParams,
    pub constants: ConstantReport,
    pub baseline: Option<Baseline>,
    pub runs: Vec<SeedRun>,
}

impl Experiment {
    pub fn summaries(&self) -> Vec<&RunSummary> {
        self.runs.iter().map(|r| &r.summary).collect()
    }

    pub fn trajectories(&self) -> Vec<Vec<TrajectoryRecord>> {
        self.runs.iter().map(|r| r.output.trajectory.clone()).collect()
    }

    pub fn traces(&self) -> Vec<PlotTrace> {
        self.runs.iter().map(|r| r.trace.clone()).collect()
    }
}

fn max_with_index(v: &[f64]) -> Option<(usize, f64)> {
    v.iter()
        .copied()
        .enumerate()
        .fold(None, |best, (k, x)| match best {
            Some((_, b)) if b >= x => best,
            _ => Some((k, x)),
        })
}

fn plot_trace(problem: &dyn QueuingProblem, records: &[TrajectoryRecord], points: usize) -> PlotTrace {
    let ts: Vec<usize> = records.iter().map(|r| r.t).collect();
    let constrained = problem.dims().j > 0;
    let mut trace = PlotTrace {
        t: Vec::new(),
        objective: Vec::new(),
        violation: Vec::new(),
    };
    for k in subsample_positions(&ts, points) {
        let r = &records[k];
        trace.t.push(r.t);
        match problem.exact_expectations(&r.x) {
            Some((y, z)) => {
                trace.objective.push(problem.outer_f(&y));
                if constrained {
                    trace.violation.push(max_with_index(&problem.outer_q(&z)).map_or(f64::NAN, |m| m.1));
                }
            }
            None => {
                trace.objective.push(r.objective_estimate);
                if constrained {
                    trace.violation.push(r.max_violation().unwrap_or(f64::NAN));
                }
            }
        }
    }
    trace
}

/// Runs every seed and evaluates the results, without writing files.
pub fn execute(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let hash = cfg.hash()?;
    let resolved = resolve(&cfg.instance)?;
    let problem = resolved.problem.as_ref();
    let baseline = match cfg.oracle {
        OracleMode::Off => None,
        OracleMode::Gap => Some(lookup_baseline(&cfg.instance, &cfg.oracle_cache)?),
    };
    let constants = problem.constant_report()?;
    let s = &cfg.solver;
    let schedule = s.schedule()?;
    let j = problem.dims().j;
    let gamma = match s.gamma {
        GammaSetting::Value(g) => g,
        GammaSetting::Rule(GammaRule::ZeroViolation) => zero_violation_gamma(j, &constants, s.a, s.c, s.horizon),
    };
    let penalty = match s.c_ell {
        Some(c_ell) => PenaltyParams::new(gamma, c_ell)?,
        None => default_penalty(
            problem,
            gamma,
            cfg.eval_samples,
            &mut RngStream::new(PENALTY_SEED, 0),
        )?,
    };
    let start = s.initial_point.clone().or(resolved.default_start.clone());
    let f_star = baseline.as_ref().map(|b| b.f_star);

    let runs = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<SeedRun> {
            let clock = Instant::now();
            let mut sc = SolverConfig::new(schedule, penalty, seed)
                .with_mode(s.mode)
                .with_log(s.log);
            if let Some(x) = &start {
                sc = sc.with_initial_point(x.clone());
            }
            let output = run(problem, &sc)?;
            let eval = evaluate_at(
                problem,
                &output.x_hat,
                cfg.eval_samples,
                &mut RngStream::new(seed, EVAL_STREAM),
            )?;
            let initial = evaluate_at(
                problem,
                &output.initial_point,
                cfg.eval_samples,
                &mut RngStream::new(seed, EVAL_STREAM),
            )?;
            let worst = max_with_index(&eval.constraints);
            let summary = RunSummary {
                seed,
                x_hat: output.x_hat.clone(),
                objective: eval.objective,
                objective_std_err: eval.objective_std_err,
                max_violation: worst.map(|w| w.1),
                max_violation_std_err: worst.map(|w| eval.constraints_std_err[w.0]),
                gap: f_star.map(|fs| eval.objective - fs),
                initial_objective: initial.objective,
                tracked_objective: problem.outer_f(&output.final_state.y),
                wall_time_secs: clock.elapsed().as_secs_f64(),
                config_hash: hash.clone(),
            };
            let trace = plot_trace(problem, &output.trajectory, cfg.plot_points);
            Ok(SeedRun { output, summary, trace })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Experiment {
        config: cfg.clone(),
        hash,
        label: resolved.label,
        penalty,
        constants,
        baseline,
        runs,
    })
}

/// Full-precision decimal that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn trajectory_csv(records: &[TrajectoryRecord], j: usize) -> String {
    let mut out = String::from("t,alpha,beta,delta,obj,");
    for k in 1..=j {
        let _ = write!(out, "viol_{k},");
    }
    out.push_str("step_sq\n");
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},",
            r.t,
            num(r.alpha),
            num(r.beta),
            num(r.delta),
            num(r.objective_estimate)
        );
        for v in &r.constraint_estimates {
            let _ = write!(out, "{},", num(*v));
        }
        let _ = writeln!(out, "{}", num(r.step_sq_norm));
    }
    out
}

/// Mean and standard deviation over seeds of every trajectory column at
/// each logged iteration.
pub fn summary_csv(trajectories: &[Vec<TrajectoryRecord>], j: usize) -> String {
    let mut out = String::from("t,seeds,mean_obj,std_obj,");
    for k in 1..=j {
        let _ = write!(out, "mean_viol_{k},std_viol_{k},");
    }
    out.push_str("mean_step_sq,std_step_sq\n");
    let len = trajectories.iter().map(Vec::len).min().unwrap_or(0);
    let col = |k: usize, f: &dyn Fn(&TrajectoryRecord) -> f64| {
        let v: Vec<f64> = trajectories.iter().map(|tr| f(&tr[k])).collect();
        let (m, s) = mean_std(&v);
        format!("{},{}", num(m), num(s))
    };
    for k in 0..len {
        let _ = write!(
            out,
            "{},{},{},",
            trajectories[0][k].t,
            trajectories.len(),
            col(k, &|r| r.objective_estimate)
        );
        for c in 0..j {
            let _ = write!(out, "{},", col(k, &|r| r.constraint_estimates[c]));
        }
        let _ = writeln!(out, "{}", col(k, &|r| r.step_sq_norm));
    }
    out
}

pub fn runs_csv(summaries: &[&RunSummary]) -> String {
    let n = summaries.first().map_or(0, |s| s.x_hat.len());
    let mut out = String::from(
        "seed,config_hash,objective,objective_std_err,max_violation,max_violation_std_err,gap,initial_objective,tracked_objective",
    );
    for k in 1..=n {
        let _ = write!(out, ",x_hat_{k}");
    }
    out.push('\n');
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for s in summaries {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.seed,
            s.config_hash,
            num(s.objective),
            num(s.objective_std_err),
            opt(s.max_violation),
            opt(s.max_violation_std_err),
            opt(s.gap),
            num(s.initial_objective),
            num(s.tracked_objective)
        );
        for v in &s.x_hat {
            let _ = write!(out, ",{}", num(*v));
        }
        out.push('\n');
    }
    out
}

/// Writes per-seed trajectories, the aggregates, the plot series and the
/// canonical configuration into `dir`.
pub fn write_outputs(exp: &Experiment, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(io_err(&path))
    };
    let j = exp.runs.first().map_or(0, |r| {
        r.output.trajectory.first().map_or(0, |t| t.constraint_estimates.len())
    });
    // Per-seed files are independent, so they are written in parallel.
    exp.runs.par_iter().try_for_each(|r| {
        write(
            format!("trajectory_seed{}.csv", r.summary.seed),
            trajectory_csv(&r.output.trajectory, j),
        )
    })?;
    write("summary.csv".into(), summary_csv(&exp.trajectories(), j))?;
    write("runs.csv".into(), runs_csv(&exp.summaries()))?;
    write(
        "plot.csv".into(),
        emit_plot_data(&exp.traces(), exp.baseline.as_ref().map(|b| b.f_star), exp.config.plot_points),
    )?;
    write("config.toml".into(), exp.config.canonical()?)?;
    Ok(())
}

/// Executes the experiment and writes its files to the configured
/// output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    let exp = execute(cfg)?;
    write_outputs(&exp, &cfg.output_dir)?;
    Ok(exp)
}

/// Quantity tracked across a horizon ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `|F(x̂) - F*|`.
    Gap,
    /// `max(max_j Q_j(x̂), 0)`.
    Violation,
}

/// Runs the configuration once per horizon, logging only a few points
/// since the fit needs the final designs alone.
pub fn run_ladder(cfg: &ExperimentConfig, horizons: &[usize]) -> Result<Vec<Experiment>> {
    horizons
        .iter()
        .map(|&t| {
            let mut c = cfg.clone();
            c.solver.horizon = t;
            c.solver.log = LogPolicy::LogSpaced(c.plot_points);
            execute(&c)
        })
        .collect()
}

/// Per-seed values of `q` for each experiment of a ladder.
pub fn ladder_values(exps: &[Experiment], q: Quantity) -> Result<Vec<Vec<f64>>> {
    exps.iter()
        .map(|e| {
            e.runs
                .iter()
                .map(|r| match q {
                    Quantity::Gap => r
                        .summary
                        .gap
                        .map(f64::abs)
                        .ok_or_else(|| HarnessError::Fit("gap requested without an oracle baseline".into())),
                    Quantity::Violation => r
                        .summary
                        .max_violation
                        .map(|v| v.max(0.0))
                        .ok_or_else(|| HarnessError::Fit("instance has no constraints".into())),
                })
                .collect()
        })
        .collect()
}
