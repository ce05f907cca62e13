//! Exact Euclidean projection by breakpoint search. Deliberately separate
//! from the solver's bisection so the two can be checked against each other.

use cscgd_core::{Error, FeasibleSet};

use crate::error::Result;

/// Projection onto `{l <= u <= h, Σu <= cap}`.
///
/// `Σ clamp(v - τ, l, h)` is piecewise linear and non-increasing in `τ`
/// with kinks at `v_i - h_i` and `v_i - l_i`; the root is found on the
/// segment between consecutive kinks.
pub fn project_capped_box(v: &[f64], lower: &[f64], upper: &[f64], cap: Option<f64>) -> Vec<f64> {
    let clamp = |tau: f64| -> Vec<f64> {
        v.iter()
            .zip(lower.iter().zip(upper))
            .map(|(x, (l, h))| (x - tau).clamp(*l, *h))
            .collect()
    };
    let plain = clamp(0.0);
    let cap = match cap {
        Some(c) if plain.iter().sum::<f64>() > c => c,
        _ => return plain,
    };
    let total = |tau: f64| clamp(tau).iter().sum::<f64>();
    let mut kinks: Vec<f64> = v
        .iter()
        .zip(lower.iter().zip(upper))
        .flat_map(|(x, (l, h))| [x - h, x - l])
        .filter(|k| *k > 0.0)
        .collect();
    kinks.push(0.0);
    kinks.sort_by(f64::total_cmp);
    let mut lo = 0.0;
    for &k in &kinks[1..] {
        if total(k) <= cap {
            let (s_lo, s_hi) = (total(lo), total(k));
            // Linear on [lo, k].
            let tau = if s_lo == s_hi { k } else { lo + (s_lo - cap) * (k - lo) / (s_lo - s_hi) };
            return clamp(tau);
        }
        lo = k;
    }
    clamp(lo)
}

/// Projection onto any [`FeasibleSet`], block by block.
pub fn project(set: &FeasibleSet, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != set.dim() {
        return Err(Error::Dimension {
            expected: set.dim(),
            actual: v.len(),
            context: "oracle projection",
        }
        .into());
    }
    Ok(match set {
        FeasibleSet::Box { lower, upper } => project_capped_box(v, lower, upper, None),
        FeasibleSet::BoxWithSumCap { lower, upper, cap } => project_capped_box(v, lower, upper, Some(*cap)),
        FeasibleSet::Product(blocks) => {
            let mut out = Vec::with_capacity(v.len());
            let mut start = 0;
            for b in blocks {
                let d = b.dim();
                out.extend(project(b, &v[start..start + d])?);
                start += d;
            }
            out
        }
    })
}

/// `‖x - Π(x - g)‖`, zero exactly at stationary points.
pub fn gradient_map_norm(set: &FeasibleSet, x: &[f64], grad: &[f64]) -> Result<f64> {
    let moved: Vec<f64> = x.iter().zip(grad).map(|(a, g)| a - g).collect();
    let p = project(set, &moved)?;
    Ok(x.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}
