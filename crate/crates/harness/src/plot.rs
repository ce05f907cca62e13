//! Seed-averaged optimality-gap and constraint-violation series for
//! external plotting.

use cscgd_core::solver::log_spaced_indices;

use crate::metrics::mean_std;

/// One seed's logged iterations with the objective and worst constraint
/// at each. The objective is the true `F(x_t)` when the instance has
/// closed-form expectations and the tracked `f(y_t)` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTrace {
    pub t: Vec<usize>,
    pub objective: Vec<f64>,
    /// Empty for unconstrained instances.
    pub violation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub t: usize,
    /// `|F - F*|`; absent without a baseline.
    pub gap: Option<(f64, f64)>,
    pub violation: Option<(f64, f64)>,
}

/// Positions into a sorted list of logged iterations, log-spaced by
/// iteration count, always including the first and the last.
pub fn subsample_positions(ts: &[usize], points: usize) -> Vec<usize> {
    let Some(&last) = ts.last() else {
        return Vec::new();
    };
    let mut picks = vec![0];
    for target in log_spaced_indices(last, points.max(2)) {
        let k = ts.partition_point(|&t| t < target).min(ts.len() - 1);
        if *picks.last().unwrap() < k {
            picks.push(k);
        }
    }
    picks
}

/// Aggregates traces over seeds at roughly `points` log-spaced logged
/// iterations, always keeping the first and the last. Traces must share
/// their logged iterations.
pub fn plot_rows(traces: &[PlotTrace], f_star: Option<f64>, points: usize) -> Vec<PlotRow> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let len = traces.iter().map(|tr| tr.t.len()).min().unwrap_or(0);
    if len == 0 {
        return Vec::new();
    }
    let picks = subsample_positions(&first.t[..len], points);
    picks
        .into_iter()
        .map(|k| {
            let gap = f_star.map(|fs| {
                let v: Vec<f64> = traces.iter().map(|tr| (tr.objective[k] - fs).abs()).collect();
                mean_std(&v)
            });
            let violation = (!first.violation.is_empty()).then(|| {
                let v: Vec<f64> = traces.iter().map(|tr| tr.violation[k]).collect();
                mean_std(&v)
            });
            PlotRow {
                t: first.t[k],
                gap,
                violation,
            }
        })
        .collect()
}

/// CSV text with header `t,mean_gap,std_gap,mean_violation,std_violation`.
/// Missing series leave their fields empty.
pub fn emit_plot_data(traces: &[PlotTrace], f_star: Option<f64>, points: usize) -> String {
    let mut out = String::from("t,mean_gap,std_gap,mean_violation,std_violation\n");
    let pair = |p: Option<(f64, f64)>| p.map_or_else(|| ",".to_string(), |(m, s)| format!("{m:?},{s:?}"));
    for row in plot_rows(traces, f_star, points) {
        out.push_str(&format!("{},{},{}\n", row.t, pair(row.gap), pair(row.violation)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(horizon: usize, offset: f64) -> PlotTrace {
        let t: Vec<usize> = (1..=horizon).collect();
        PlotTrace {
            objective: t.iter().map(|&k| offset + 1.0 / k as f64).collect(),
            violation: t.iter().map(|&k| -(k as f64)).collect(),
            t,
        }
    }

    #[test]
    fn one_seed_has_zero_spread() {
        let rows = plot_rows(&[trace(50, 0.0)], Some(0.0), 10);
        assert!(rows.iter().all(|r| r.gap.unwrap().1 == 0.0 && r.violation.unwrap().1 == 0.0));
    }

    #[test]
    fn subsampling_keeps_endpoints() {
        let rows = plot_rows(&[trace(10_000, 0.0), trace(10_000, 1.0)], Some(0.5), 30);
        assert_eq!(rows.first().unwrap().t, 1);
        assert_eq!(rows.last().unwrap().t, 10_000);
        assert!(rows.len() <= 31);
        assert!(rows.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn missing_baseline_leaves_gap_empty() {
        let csv = emit_plot_data(&[trace(3, 0.0)], None, 5);
        assert_eq!(csv.lines().nth(1).unwrap(), "1,,,-1.0,0.0");
    }
}
