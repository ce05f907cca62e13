//! Projectable convex sets: boxes, boxes intersected with a sum cap, and
//! Cartesian products of those over consecutive coordinate blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when testing membership after a projection.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

const BISECTION_MAX_ITER: usize = 200;
const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `{u : lower <= u <= upper, sum(u) <= cap}`.
    BoxWithSumCap {
        lower: Vec<f64>,
        upper: Vec<f64>,
        cap: f64,
    },
    /// Blocks occupy consecutive coordinates in declaration order.
    Product(Vec<FeasibleSet>),
}

impl FeasibleSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = FeasibleSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    pub fn box_with_sum_cap(lower: Vec<f64>, upper: Vec<f64>, cap: f64) -> Result<Self> {
        let set = FeasibleSet::BoxWithSumCap { lower, upper, cap };
        set.validate()?;
        Ok(set)
    }

    pub fn product(blocks: Vec<FeasibleSet>) -> Result<Self> {
        let set = FeasibleSet::Product(blocks);
        set.validate()?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } | FeasibleSet::BoxWithSumCap { lower, .. } => {
                lower.len()
            }
            FeasibleSet::Product(blocks) => blocks.iter().map(FeasibleSet::dim).sum(),
        }
    }

    /// Rejects empty or malformed sets.
    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::Box { lower, upper } => check_box(lower, upper),
            FeasibleSet::BoxWithSumCap { lower, upper, cap } => {
                check_box(lower, upper)?;
                if !cap.is_finite() {
                    return Err(Error::Config("sum cap must be finite".into()));
                }
                let floor: f64 = lower.iter().sum();
                if floor > *cap {
                    return Err(Error::Config(format!(
                        "empty set: sum of lower bounds {floor} exceeds cap {cap}"
                    )));
                }
                Ok(())
            }
            FeasibleSet::Product(blocks) => {
                if blocks.is_empty() {
                    return Err(Error::Config("product set without blocks".into()));
                }
                blocks.iter().try_for_each(FeasibleSet::validate)
            }
        }
    }

    /// Flattened bounding box `(lower, upper)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            FeasibleSet::Box { lower, upper } | FeasibleSet::BoxWithSumCap { lower, upper, .. } => {
                (lower.clone(), upper.clone())
            }
            FeasibleSet::Product(blocks) => {
                let mut lo = Vec::with_capacity(self.dim());
                let mut hi = Vec::with_capacity(self.dim());
                for b in blocks {
                    let (l, h) = b.bounds();
                    lo.extend(l);
                    hi.extend(h);
                }
                (lo, hi)
            }
        }
    }

    pub fn box_midpoint(&self) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Squared diameter of the bounding box, an upper bound on
    /// `sup ||x - x'||^2` over the set.
    pub fn squared_diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum()
    }

    /// All `2^n` corners of the bounding box.
    pub fn box_corners(&self) -> Vec<Vec<f64>> {
        let (lo, hi) = self.bounds();
        let n = lo.len();
        assert!(n < 24, "too many corners to enumerate");
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                    .collect()
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            FeasibleSet::Box { lower, upper } => in_box(x, lower, upper, tol),
            FeasibleSet::BoxWithSumCap { lower, upper, cap } => {
                in_box(x, lower, upper, tol) && x.iter().sum::<f64>() <= cap + tol
            }
            FeasibleSet::Product(blocks) => {
                let mut offset = 0;
                blocks.iter().all(|b| {
                    let d = b.dim();
                    let ok = b.contains(&x[offset..offset + d], tol);
                    offset += d;
                    ok
                })
            }
        }
    }

    /// Euclidean projection `argmin_{u in set} ||u - v||^2`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: v.len(),
                context: "projection input",
            });
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("projection of a non-finite vector".into()));
        }
        self.validate()?;
        let mut out = vec![0.0; v.len()];
        self.project_into(v, &mut out);
        Ok(out)
    }

    fn project_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            FeasibleSet::Box { lower, upper } => clamp_into(v, 0.0, lower, upper, out),
            FeasibleSet::BoxWithSumCap { lower, upper, cap } => {
                project_capped_box(v, lower, upper, *cap, out)
            }
            FeasibleSet::Product(blocks) => {
                let mut offset = 0;
                for b in blocks {
                    let d = b.dim();
                    b.project_into(&v[offset..offset + d], &mut out[offset..offset + d]);
                    offset += d;
                }
            }
        }
    }
}

fn check_box(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(Error::Dimension {
            expected: lower.len(),
            actual: upper.len(),
            context: "box upper bounds",
        });
    }
    if lower.is_empty() {
        return Err(Error::Config("zero-dimensional box".into()));
    }
    for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
        if !l.is_finite() || !u.is_finite() {
            return Err(Error::Config(format!("non-finite bound at coordinate {i}")));
        }
        if l > u {
            return Err(Error::Config(format!(
                "empty set: lower {l} > upper {u} at coordinate {i}"
            )));
        }
    }
    Ok(())
}

fn in_box(x: &[f64], lower: &[f64], upper: &[f64], tol: f64) -> bool {
    x.iter()
        .zip(lower.iter().zip(upper))
        .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
}

#[inline]
fn clamp_into(v: &[f64], shift: f64, lower: &[f64], upper: &[f64], out: &mut [f64]) {
    for i in 0..v.len() {
        out[i] = (v[i] - shift).clamp(lower[i], upper[i]);
    }
}

fn shifted_sum(v: &[f64], shift: f64, lower: &[f64], upper: &[f64]) -> f64 {
    v.iter()
        .zip(lower.iter().zip(upper))
        .map(|(x, (l, u))| (x - shift).clamp(*l, *u))
        .sum()
}

/// Projection onto `{lower <= u <= upper, sum(u) <= cap}`.
///
/// The solution is `clamp(v - nu, lower, upper)` where `nu >= 0` is the
/// multiplier of the sum constraint. `nu` is bracketed by bisection and then
/// polished by solving the linear equation on the free coordinates.
fn project_capped_box(v: &[f64], lower: &[f64], upper: &[f64], cap: f64, out: &mut [f64]) {
    if shifted_sum(v, 0.0, lower, upper) <= cap {
        clamp_into(v, 0.0, lower, upper, out);
        return;
    }
    let mut lo = 0.0_f64;
    let mut hi = v
        .iter()
        .zip(lower)
        .map(|(x, l)| x - l)
        .fold(0.0_f64, f64::max);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_TOL * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if shifted_sum(v, mid, lower, upper) > cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Polish: on the free set the cap equation is linear in nu.
    let mut free = 0usize;
    let mut free_sum = 0.0;
    let mut fixed_sum = 0.0;
    for i in 0..v.len() {
        let s = v[i] - hi;
        if s <= lower[i] {
            fixed_sum += lower[i];
        } else if s >= upper[i] {
            fixed_sum += upper[i];
        } else {
            free += 1;
            free_sum += v[i];
        }
    }
    let mut nu = hi;
    if free > 0 {
        let exact = (free_sum + fixed_sum - cap) / free as f64;
        if exact >= lo - BISECTION_TOL && exact <= hi + BISECTION_TOL && exact >= 0.0 {
            nu = exact;
        }
    }
    clamp_into(v, nu, lower, upper, out);
    // Rounding in the polished multiplier must not push the sum over the cap.
    if out.iter().sum::<f64>() > cap + MEMBERSHIP_TOL {
        clamp_into(v, hi, lower, upper, out);
    }
}
