//! Numerical convexity scan: central-difference Hessians of a smooth
//! function of two variables over a grid, reporting the smallest
//! eigenvalue per cell.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use cscgd_core::quadrature::FixedRule;
use cscgd_core::Distribution;

use crate::error::{OracleError, Result};
use crate::grid::AxisSpec;

/// Eigenvalues above this count as nonnegative.
pub const PSD_TOL: f64 = -1e-8;
/// Difference step per axis as a fraction of the axis range.
pub const STEP_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2d {
    pub x: AxisSpec,
    pub y: AxisSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianScan {
    pub grid: Grid2d,
    /// `(x, y, min eigenvalue)`, row-major with `x` outer.
    pub cells: Vec<(f64, f64, f64)>,
    pub min_eigenvalue: f64,
    pub argmin: (f64, f64),
}

impl HessianScan {
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= PSD_TOL
    }

    pub fn heatmap_csv(&self, x_name: &str, y_name: &str) -> String {
        let mut s = format!("{x_name},{y_name},min_eig\n");
        for (x, y, e) in &self.cells {
            let _ = writeln!(s, "{x:?},{y:?},{e:?}");
        }
        s
    }
}

/// Smaller eigenvalue of `[[a, b], [b, c]]`.
pub fn min_eigenvalue_2x2(a: f64, b: f64, c: f64) -> f64 {
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
    mean - rad
}

pub fn hessian_psd_scan<F>(f: F, grid: &Grid2d) -> Result<HessianScan>
where
    F: Fn(f64, f64) -> std::result::Result<f64, String> + Sync,
{
    let xs = grid.x.values();
    let ys = grid.y.values();
    let hx = STEP_FRACTION * (grid.x.upper - grid.x.lower).max(f64::MIN_POSITIVE);
    let hy = STEP_FRACTION * (grid.y.upper - grid.y.lower).max(f64::MIN_POSITIVE);
    let rows: Vec<Result<Vec<(f64, f64, f64)>>> = xs
        .par_iter()
        .enumerate()
        .map(|(row, &x)| {
            ys.iter()
                .enumerate()
                .map(|(col, &y)| {
                    let cell = |reason: String| OracleError::Cell { row, col, x, y, reason };
                    let ev = |a: f64, b: f64| -> Result<f64> {
                        let v = f(a, b).map_err(cell)?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(cell(format!("non-finite value at ({a}, {b})")))
                        }
                    };
                    let c = ev(x, y)?;
                    let fxx = (ev(x + hx, y)? - 2.0 * c + ev(x - hx, y)?) / (hx * hx);
                    let fyy = (ev(x, y + hy)? - 2.0 * c + ev(x, y - hy)?) / (hy * hy);
                    let fxy = (ev(x + hx, y + hy)? - ev(x + hx, y - hy)? - ev(x - hx, y + hy)? + ev(x - hx, y - hy)?)
                        / (4.0 * hx * hy);
                    Ok((x, y, min_eigenvalue_2x2(fxx, fxy, fyy)))
                })
                .collect()
        })
        .collect();
    let mut cells = Vec::with_capacity(xs.len() * ys.len());
    for r in rows {
        cells.extend(r?);
    }
    let (mut min_eigenvalue, mut argmin) = (f64::INFINITY, (f64::NAN, f64::NAN));
    for &(x, y, e) in &cells {
        if e < min_eigenvalue {
            min_eigenvalue = e;
            argmin = (x, y);
        }
    }
    Ok(HessianScan {
        grid: *grid,
        cells,
        min_eigenvalue,
        argmin,
    })
}

/// Per-queue delay-minus-log-rate summand of the ergodic-capacity model,
///
/// ```text
/// U(λ, p) = λ E[b⁻²] / (2 (1 - λ E[b⁻¹])) - w log λ,   b = B log(1 + p ζ),
/// ```
///
/// with `ζ` chi-squared on `2K` degrees of freedom restricted to
/// `[G, ∞)`. Expectations use one fixed Gauss–Legendre rule, so the
/// function is smooth in `(λ, p)` and differences are free of quadrature
/// noise.
pub struct ErgodicSummand {
    pub bandwidth: f64,
    pub log_weight: f64,
    rule: FixedRule,
}

impl ErgodicSummand {
    pub fn new(antennas: u32, bandwidth: f64, channel_lower: f64, log_weight: f64) -> Self {
        let dist = Distribution::TruncatedChiSquared {
            dof: 2 * antennas,
            lower: channel_lower,
        };
        Self {
            bandwidth,
            log_weight,
            rule: FixedRule::for_distribution(&dist, 30, 32),
        }
    }

    pub fn value(&self, lambda: f64, p: f64) -> std::result::Result<f64, String> {
        let b = |z: f64| self.bandwidth * (p * z).ln_1p();
        let m1 = self.rule.integrate(|z| 1.0 / b(z));
        let m2 = self.rule.integrate(|z| b(z).powi(-2));
        let s = 1.0 - lambda * m1;
        if !(s > 0.0 && lambda > 0.0) {
            return Err(format!("outside the stable region: 1 - λE[1/b] = {s}"));
        }
        Ok(lambda * m2 / (2.0 * s) - self.log_weight * lambda.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid2d {
        Grid2d {
            x: AxisSpec::new(-1.0, 1.0, 11).unwrap(),
            y: AxisSpec::new(-2.0, 2.0, 9).unwrap(),
        }
    }

    #[test]
    fn sum_of_squares_has_eigenvalue_two() {
        let s = hessian_psd_scan(|x, y| Ok(x * x + y * y), &grid()).unwrap();
        assert!(s.cells.iter().all(|c| (c.2 - 2.0).abs() < 1e-6));
        assert!(s.is_psd());
    }

    #[test]
    fn saddle_has_eigenvalue_minus_one() {
        let s = hessian_psd_scan(|x, y| Ok(x * y), &grid()).unwrap();
        assert!((s.min_eigenvalue + 1.0).abs() < 1e-6);
        assert!(!s.is_psd());
    }

    #[test]
    fn failures_name_the_cell() {
        let e = hessian_psd_scan(|x, _| if x > 0.5 { Err("boom".into()) } else { Ok(0.0) }, &grid()).unwrap_err();
        match e {
            OracleError::Cell { row, reason, .. } => {
                assert_eq!(row, 8);
                assert_eq!(reason, "boom");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn heatmap_is_row_major() {
        let s = hessian_psd_scan(|x, y| Ok(x * x + y * y), &grid()).unwrap();
        let csv = s.heatmap_csv("lambda", "p");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "lambda,p,min_eig");
        assert_eq!(lines.len(), 1 + 11 * 9);
        assert!(lines[1].starts_with("-1.0,-2.0,"));
        assert!(lines[2].starts_with("-1.0,-1.5,"));
    }
}
