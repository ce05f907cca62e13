//! Reference optima `F*` for the optimality gap, and their on-disk cache.
//!
//! Toys and the M/M/1 instance have closed forms and never touch the
//! cache. Everything else is computed by `cscgd oracle` and looked up by
//! name, with a hash of the instance parameters guarding against stale
//! entries.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cscgd_oracles::{example1_fstar, example2_fstar, saa_local_minimum, Example2GridSpec, LocalOptions};
use cscgd_queuing::{mm1_optimal_mu, mm1_utility, InstanceConfig};

use crate::error::{io_err, HarnessError, Result};
use crate::problems::{resolve, InstanceSpec, ToyConstrained};

/// Monte-Carlo batch of the Example 2 brute force.
pub const EX2_MC_SAMPLES: usize = 100_000;
pub const EX2_GRID_POINTS: usize = 41;
pub const ORACLE_SEED: u64 = 0x5eed_0f_0a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    ClosedForm,
    /// Global optimum of a deterministic reformulation.
    Deterministic,
    /// Best point of an exhaustive grid on a sample-average objective.
    GridSearch,
    /// Stationary point of a sample-average objective; not a global
    /// certificate.
    LocalMinimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub name: String,
    pub instance_hash: String,
    pub kind: BaselineKind,
    pub f_star: f64,
    /// Present when `f_star` is a Monte-Carlo estimate.
    pub f_star_std_err: Option<f64>,
    pub x_star: Vec<f64>,
}

/// Hash of the instance parameters a baseline was computed for.
pub fn instance_hash(spec: &InstanceSpec) -> Result<String> {
    let text = match spec.queuing_config()? {
        Some(cfg) => serde_json::to_string(&cfg).map_err(|e| HarnessError::Parse(e.to_string()))?,
        None => spec.label(),
    };
    Ok(Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
}

/// Closed-form baselines, available without the cache.
pub fn closed_form(spec: &InstanceSpec) -> Result<Option<Baseline>> {
    let (f_star, x_star) = match spec {
        InstanceSpec::Preset { preset } if preset == "toy-quadratic" => (0.0, vec![0.0; 2]),
        InstanceSpec::Preset { preset } if preset == "toy-constrained" => (ToyConstrained::F_STAR, vec![0.5]),
        _ => match spec.queuing_config()? {
            Some(InstanceConfig::Mm1 { lambda, r, h }) => {
                let mu = mm1_optimal_mu(lambda, r, h)?;
                (-mm1_utility(mu, lambda, r, h)?, vec![mu])
            }
            _ => return Ok(None),
        },
    };
    Ok(Some(Baseline {
        name: spec.label(),
        instance_hash: instance_hash(spec)?,
        kind: BaselineKind::ClosedForm,
        f_star,
        f_star_std_err: None,
        x_star,
    }))
}

/// Runs the oracle for one instance. Example 5 has none.
pub fn compute_baseline(spec: &InstanceSpec) -> Result<Baseline> {
    if let Some(b) = closed_form(spec)? {
        return Ok(b);
    }
    let name = spec.label();
    let cfg = spec.queuing_config()?.expect("toys have closed forms");
    let (kind, f_star, f_star_std_err, x_star) = match &cfg {
        InstanceConfig::Wired(inst) => {
            let opt = example1_fstar(inst)?;
            (BaselineKind::Deterministic, opt.f_star, None, opt.x_star)
        }
        InstanceConfig::Ergodic(inst) => {
            let grid = Example2GridSpec::covering(inst, EX2_GRID_POINTS, EX2_GRID_POINTS)?;
            let res = example2_fstar(inst, EX2_MC_SAMPLES, &grid, ORACLE_SEED)?;
            (BaselineKind::GridSearch, res.best_value, res.best_value_std_err, res.best_point)
        }
        InstanceConfig::Outage(_) | InstanceConfig::EffectiveCapacity(_) => {
            let problem = resolve(spec)?.problem;
            let start = problem.feasible_set().box_midpoint();
            let local = saa_local_minimum(problem.as_ref(), &start, &LocalOptions::default())?;
            if !local.converged {
                log::warn!(
                    "{name}: local search stopped after {} iterations, gradient map {:.3e}",
                    local.iterations,
                    local.gradient_map_norm
                );
            }
            (BaselineKind::LocalMinimum, local.value, None, local.x)
        }
        InstanceConfig::Cloud(_) => return Err(HarnessError::NoOracle(name)),
        InstanceConfig::Mm1 { .. } => unreachable!("closed form"),
    };
    Ok(Baseline {
        name,
        instance_hash: instance_hash(spec)?,
        kind,
        f_star,
        f_star_std_err,
        x_star,
    })
}

pub type BaselineCache = BTreeMap<String, Baseline>;

pub fn load_cache(path: &Path) -> Result<BaselineCache> {
    if !path.exists() {
        return Ok(BaselineCache::new());
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))
}

pub fn store_baseline(path: &Path, baseline: Baseline) -> Result<()> {
    let mut cache = load_cache(path)?;
    cache.insert(baseline.name.clone(), baseline);
    let text = serde_json::to_string_pretty(&cache).map_err(|e| HarnessError::Parse(e.to_string()))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// The baseline for `spec`: closed form when there is one, otherwise the
/// cached oracle result.
pub fn lookup_baseline(spec: &InstanceSpec, cache_path: &Path) -> Result<Baseline> {
    if let Some(b) = closed_form(spec)? {
        return Ok(b);
    }
    let name = spec.label();
    let cache = load_cache(cache_path)?;
    let b = cache.get(&name).ok_or_else(|| HarnessError::MissingBaseline {
        name: name.clone(),
        cache: cache_path.to_path_buf(),
    })?;
    if b.instance_hash != instance_hash(spec)? {
        return Err(HarnessError::StaleBaseline { name });
    }
    Ok(b.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mm1_closed_form_matches_formula() {
        let b = closed_form(&InstanceSpec::preset("mm1")).unwrap().unwrap();
        // λ = r = h = 1: u = 1, μ* = 2 + √2.
        assert!((b.x_star[0] - (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn missing_baseline_names_the_fix() {
        let dir = tempfile::tempdir().unwrap();
        let err = lookup_baseline(&InstanceSpec::preset("paper-ex3"), &dir.path().join("c.json")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cscgd oracle --preset paper-ex3"), "{msg}");
        assert!(msg.contains("oracle = \"off\""), "{msg}");
    }

    #[test]
    fn stale_entry_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let spec = InstanceSpec::preset("paper-ex1");
        let mut b = compute_baseline(&spec).unwrap();
        store_baseline(&path, b.clone()).unwrap();
        assert_eq!(lookup_baseline(&spec, &path).unwrap(), b);
        b.instance_hash = "0".into();
        store_baseline(&path, b).unwrap();
        assert!(matches!(
            lookup_baseline(&spec, &path),
            Err(HarnessError::StaleBaseline { .. })
        ));
    }

    #[test]
    fn cloud_has_no_oracle() {
        assert!(matches!(
            compute_baseline(&InstanceSpec::preset("ex5-placeholder")),
            Err(HarnessError::NoOracle(_))
        ));
    }
}
