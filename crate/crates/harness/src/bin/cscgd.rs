use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cscgd_core::Regime;
use cscgd_harness::baseline::{compute_baseline, store_baseline};
use cscgd_harness::checks::{penalty_convexity, penalty_derivative, projection_properties};
use cscgd_harness::config::{ExperimentConfig, GammaSetting, OracleMode, SolverSection};
use cscgd_harness::metrics::{mean_std, rate_fit};
use cscgd_harness::problems::{known_presets, resolve, InstanceSpec};
use cscgd_harness::run::{ladder_values, run_experiment, run_ladder, Quantity};
use cscgd_oracles::{check_problem, hessian_psd_scan, AxisSpec, ErgodicSummand, Grid2d};

#[derive(Parser)]
#[command(name = "cscgd", version, about = "Constrained stochastic compositional gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    /// TOML experiment file. Without it, `--preset` runs the default
    /// step row (0.9167, 0.5, 0.75) with constant steps.
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Seed list: `0..50` (half-open range) or `1,2,3`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    oracle: Option<OracleArg>,
    #[arg(long)]
    oracle_cache: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Off,
    Gap,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Gap,
    Violation,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment over several seeds and write CSV outputs.
    Run(ExperimentArgs),
    /// Compute and cache the reference optimum of presets.
    Oracle {
        #[arg(long, required_unless_present = "all")]
        preset: Vec<String>,
        /// Every preset that has an oracle.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value = "oracle_cache.json")]
        cache: PathBuf,
    },
    /// Fit the decay rate of the gap or violation over a horizon ladder.
    Ratefit {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated horizons, at least four.
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<usize>,
        #[arg(long, value_enum, default_value = "gap")]
        quantity: QuantityArg,
    },
    /// Scan the Hessian of the ergodic-capacity summand for convexity.
    ScanHessian {
        #[arg(long, default_value_t = 5)]
        antennas: u32,
        #[arg(long, default_value_t = 51)]
        points: usize,
        #[arg(long, default_value_t = 10.0)]
        bandwidth: f64,
        #[arg(long, default_value_t = 0.25)]
        channel_lower: f64,
        #[arg(long, default_value_t = 0.1)]
        log_weight: f64,
        /// Heatmap CSV of the smallest eigenvalue.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference gradient suite and randomized invariant checks.
    Check {
        /// Restrict the gradient suite to these presets.
        #[arg(long)]
        preset: Vec<String>,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().context("seed range start")?;
        let b: u64 = b.trim().parse().context("seed range end")?;
        if b <= a {
            bail!("empty seed range {s}");
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<u64>().with_context(|| format!("bad seed `{p}`")))
        .collect()
}

fn build_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::new(
            InstanceSpec::preset(name),
            SolverSection {
                a: 0.9167,
                b: 0.5,
                c: 0.75,
                regime: Regime::Constant,
                horizon: 10_000,
                gamma: GammaSetting::Value(0.0),
                c_ell: None,
                mode: Default::default(),
                log: Default::default(),
                initial_point: None,
            },
            (0..50).collect(),
        ),
        (None, None) => bail!("give a config file or --preset; presets: {}", known_presets().join(", ")),
    };
    if let (Some(_), Some(name)) = (&args.config, &args.preset) {
        cfg.instance = InstanceSpec::preset(name);
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(t) = args.horizon {
        cfg.solver.horizon = t;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(o) = args.oracle {
        cfg.oracle = match o {
            OracleArg::Off => OracleMode::Off,
            OracleArg::Gap => OracleMode::Gap,
        };
    }
    if let Some(c) = &args.oracle_cache {
        cfg.oracle_cache = c.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6e}"))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = build_config(&args)?;
            let exp = run_experiment(&cfg)?;
            println!(
                "{}: {} seeds, T = {}, gamma = {:.6}, C_ell = {:.6}, config {}",
                exp.label,
                cfg.seeds.len(),
                cfg.solver.horizon,
                exp.penalty.gamma,
                exp.penalty.c_ell,
                &exp.hash[..12]
            );
            println!("seed  F(x_hat)        +-se          max Q         +-se          gap           wall s");
            for s in exp.summaries() {
                println!(
                    "{:<5} {:<15.8e} {:<13.3e} {:<13} {:<13} {:<13} {:.2}",
                    s.seed,
                    s.objective,
                    s.objective_std_err,
                    fmt_opt(s.max_violation),
                    fmt_opt(s.max_violation_std_err),
                    fmt_opt(s.gap),
                    s.wall_time_secs
                );
            }
            let objs: Vec<f64> = exp.summaries().iter().map(|s| s.objective).collect();
            let (m, sd) = mean_std(&objs);
            println!("mean F(x_hat) = {m:.8e} (sd {sd:.3e}); outputs in {}", cfg.output_dir.display());
        }
        Command::Oracle { preset, all, cache } => {
            let names: Vec<String> = if all {
                known_presets()
                    .into_iter()
                    .filter(|n| *n != "ex5-placeholder")
                    .map(String::from)
                    .collect()
            } else {
                preset
            };
            for name in names {
                let b = compute_baseline(&InstanceSpec::preset(&name))?;
                println!("{name}: F* = {:.10e} ({:?}) at {:?}", b.f_star, b.kind, b.x_star);
                store_baseline(&cache, b)?;
            }
            println!("cached in {}", cache.display());
        }
        Command::Ratefit {
            exp,
            horizons,
            quantity,
        } => {
            let mut cfg = build_config(&exp)?;
            if exp.seeds.is_none() && exp.config.is_none() {
                cfg.seeds = (0..10).collect();
            }
            let exps = run_ladder(&cfg, &horizons)?;
            let q = match quantity {
                QuantityArg::Gap => Quantity::Gap,
                QuantityArg::Violation => Quantity::Violation,
            };
            let values = ladder_values(&exps, q)?;
            for (t, v) in horizons.iter().zip(&values) {
                let (m, sd) = mean_std(v);
                println!("T = {t:<10} mean {m:.6e}  sd {sd:.3e}");
            }
            let fit = rate_fit(&horizons, &values)?;
            println!(
                "slope {:.4} (95% CI [{:.4}, {:.4}]), intercept {:.4}, {} points{}",
                fit.slope,
                fit.ci_low,
                fit.ci_high,
                fit.intercept,
                fit.points,
                if fit.clamped { ", some values floored at 1e-12" } else { "" }
            );
        }
        Command::ScanHessian {
            antennas,
            points,
            bandwidth,
            channel_lower,
            log_weight,
            out,
        } => {
            let summand = ErgodicSummand::new(antennas, bandwidth, channel_lower, log_weight);
            let grid = Grid2d {
                x: AxisSpec::new(0.1, 15.0, points)?,
                y: AxisSpec::new(14.0, 100.0, points)?,
            };
            let scan = hessian_psd_scan(|l, p| summand.value(l, p), &grid)?;
            println!(
                "K = {antennas}: min eigenvalue {:.3e} at (lambda, p) = ({:.4}, {:.4}); {}",
                scan.min_eigenvalue,
                scan.argmin.0,
                scan.argmin.1,
                if scan.is_psd() { "PSD on the grid" } else { "NOT PSD" }
            );
            if let Some(path) = out {
                std::fs::write(&path, scan.heatmap_csv("lambda", "p"))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Check {
            preset,
            points,
            tol,
            trials,
            seed,
        } => {
            let names: Vec<String> = if preset.is_empty() {
                known_presets().into_iter().map(String::from).collect()
            } else {
                preset
            };
            let mut ok = true;
            for name in names {
                let r = resolve(&InstanceSpec::preset(&name))?;
                let rep = check_problem(r.problem.as_ref(), points, 1e-6, seed)?;
                let pass = rep.passes(tol, points * 9 / 10);
                ok &= pass;
                let maps: Vec<String> = rep
                    .maps
                    .iter()
                    .map(|m| format!("{} {:.1e} ({} skipped)", m.map, m.max_error, m.skipped))
                    .collect();
                println!("{} {name}: {}", if pass { "ok  " } else { "FAIL" }, maps.join(", "));
            }
            let mut reports = vec![penalty_convexity(trials, seed)?, penalty_derivative(trials, seed)?];
            reports.extend(projection_properties(trials, seed)?);
            for r in reports {
                ok &= r.passed();
                println!(
                    "{} {}: {} trials, {} failures",
                    if r.passed() { "ok  " } else { "FAIL" },
                    r.property,
                    r.trials,
                    r.failures
                );
            }
            if !ok {
                bail!("checks failed");
            }
        }
    }
    Ok(())
}
