//! Decay-rate fits across a ladder of horizons and a trend test for
//! series.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{HarnessError, Result};

/// Floor applied to non-positive quantities before taking logs.
pub const EPS_PLOT: f64 = 1e-12;
pub const MIN_HORIZONS: usize = 4;
pub const MIN_SEEDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_err: f64,
    /// 95% confidence interval of the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
    /// Some value was below `EPS_PLOT` and was raised to it.
    pub clamped: bool,
}

/// Least-squares fit of `log q` against `log T` over every (horizon,
/// seed) pair. `values[k]` holds the per-seed quantities at `horizons[k]`.
pub fn rate_fit(horizons: &[usize], values: &[Vec<f64>]) -> Result<RateFit> {
    if horizons.len() != values.len() {
        return Err(HarnessError::Fit(format!(
            "{} horizons but {} value sets",
            horizons.len(),
            values.len()
        )));
    }
    let mut distinct = horizons.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < MIN_HORIZONS {
        return Err(HarnessError::Fit(format!(
            "need at least {MIN_HORIZONS} distinct horizons, got {}",
            distinct.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| v.len() < MIN_SEEDS) {
        return Err(HarnessError::Fit(format!(
            "need at least {MIN_SEEDS} seeds per horizon, got {}",
            v.len()
        )));
    }
    let mut clamped = false;
    let mut pts = Vec::new();
    for (&t, vs) in horizons.iter().zip(values) {
        if t == 0 {
            return Err(HarnessError::Fit("horizon 0".into()));
        }
        for &q in vs {
            if q.is_nan() {
                return Err(HarnessError::Fit(format!("NaN quantity at T = {t}")));
            }
            let q = if q < EPS_PLOT {
                clamped = true;
                EPS_PLOT
            } else {
                q
            };
            pts.push(((t as f64).ln(), q.ln()));
        }
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let dof = n - 2.0;
    let slope_std_err = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| HarnessError::Fit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(RateFit {
        slope,
        intercept,
        slope_std_err,
        ci_low: slope - t * slope_std_err,
        ci_high: slope + t * slope_std_err,
        points: pts.len(),
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannKendall {
    /// `Σ_{i<j} sign(x_j - x_i)`; negative for a decreasing series.
    pub s: i64,
    pub z: f64,
    /// Two-sided p-value under the normal approximation.
    pub p_value: f64,
}

/// Mann-Kendall trend test with the tie-corrected variance.
pub fn mann_kendall(series: &[f64]) -> MannKendall {
    let n = series.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match series[j].partial_cmp(&series[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let mut sorted: Vec<f64> = series.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut ties = 0.0;
    let mut k = 0;
    while k < n {
        let mut m = k + 1;
        while m < n && sorted[m] == sorted[k] {
            m += 1;
        }
        let t = (m - k) as f64;
        ties += t * (t - 1.0) * (2.0 * t + 5.0);
        k = m;
    }
    let nf = n as f64;
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - ties) / 18.0;
    let z = if var <= 0.0 || s == 0 {
        0.0
    } else {
        (s as f64 - (s as f64).signum()) / var.sqrt()
    };
    let normal = Normal::standard();
    MannKendall {
        s,
        z,
        p_value: 2.0 * (1.0 - normal.cdf(z.abs())),
    }
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder() -> Vec<usize> {
        vec![1_000, 10_000, 100_000, 1_000_000]
    }

    #[test]
    fn exact_power_law() {
        let hs = ladder();
        let vals: Vec<Vec<f64>> = hs.iter().map(|&t| vec![(t as f64).powf(-0.25); 10]).collect();
        let fit = rate_fit(&hs, &vals).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-12);
        assert!(fit.ci_high - fit.ci_low < 1e-12);
        assert!(!fit.clamped);
    }

    #[test]
    fn constant_sequence_has_zero_slope() {
        let hs = ladder();
        let fit = rate_fit(&hs, &vec![vec![3.0; 10]; 4]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn nonpositive_values_are_floored_and_flagged() {
        let hs = ladder();
        let mut vals = vec![vec![1.0; 10]; 4];
        vals[3][0] = -1.0;
        assert!(rate_fit(&hs, &vals).unwrap().clamped);
    }

    #[test]
    fn too_few_horizons_or_seeds() {
        assert!(rate_fit(&[1, 2, 3], &vec![vec![1.0; 10]; 3]).is_err());
        assert!(rate_fit(&ladder(), &vec![vec![1.0; 9]; 4]).is_err());
        assert!(rate_fit(&[1, 1, 2, 3], &vec![vec![1.0; 10]; 4]).is_err());
    }

    #[test]
    fn mann_kendall_signs() {
        let down: Vec<f64> = (0..20).map(|k| 1.0 / (k + 1) as f64).collect();
        let mk = mann_kendall(&down);
        assert_eq!(mk.s, -190);
        assert!(mk.z < 0.0 && mk.p_value < 1e-6);
        let flat = mann_kendall(&[2.0; 8]);
        assert_eq!(flat.s, 0);
        assert_eq!(flat.z, 0.0);
    }
}
