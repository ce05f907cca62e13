//! Brute-force grids and the exact minimum of a separable objective over a
//! product grid intersected with a sum cap.

use serde::Serialize;

use crate::error::{OracleError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSpec {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        if points == 0 || !(lower <= upper) || (points == 1 && lower != upper) {
            return Err(OracleError::Invalid(format!(
                "axis [{lower}, {upper}] with {points} points"
            )));
        }
        Ok(Self { lower, upper, points })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lower];
        }
        let step = (self.upper - self.lower) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| if k + 1 == self.points { self.upper } else { self.lower + step * k as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    pub axes: Vec<AxisSpec>,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Standard error of `best_value` when it is a Monte-Carlo estimate.
    pub best_value_std_err: Option<f64>,
    /// Constraint value `q` at the best point (feasible means `<= 0`) with
    /// its standard error when estimated.
    pub best_constraint: Option<f64>,
    pub best_constraint_std_err: Option<f64>,
    pub evaluated: usize,
    pub feasible: usize,
}

/// Minimizes `Σ_i table[i][k_i]` over index vectors with
/// `Σ_i coords[i][k_i] <= cap`. Each `coords[i]` must be ascending.
/// Entries that are not finite count as infeasible. Returns the indices,
/// the value and the number of feasible combinations.
pub fn separable_min(tables: &[Vec<f64>], coords: &[Vec<f64>], cap: Option<f64>) -> Option<(Vec<usize>, f64, usize)> {
    let n = tables.len();
    if n == 0 {
        return Some((Vec::new(), 0.0, 1));
    }
    let last = &tables[n - 1];
    let last_coords = &coords[n - 1];
    // prefix[k] = (argmin, min) over last[..=k].
    let mut prefix: Vec<(usize, f64)> = Vec::with_capacity(last.len());
    for (k, v) in last.iter().enumerate() {
        let v = if v.is_finite() { *v } else { f64::INFINITY };
        match prefix.last() {
            Some(&(_, m)) if m <= v => prefix.push(*prefix.last().unwrap()),
            _ => prefix.push((k, v)),
        }
    }
    let finite_prefix: Vec<usize> = last
        .iter()
        .scan(0usize, |c, v| {
            *c += v.is_finite() as usize;
            Some(*c)
        })
        .collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut feasible = 0usize;
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut partial = 0.0;
        let mut used = 0.0;
        let mut ok = true;
        for (i, &k) in idx.iter().enumerate() {
            let v = tables[i][k];
            if !v.is_finite() {
                ok = false;
                break;
            }
            partial += v;
            used += coords[i][k];
        }
        if ok {
            let limit = cap.map_or(last_coords.len(), |c| last_coords.partition_point(|x| used + x <= c));
            if limit > 0 {
                feasible += finite_prefix[limit - 1];
                let (k, v) = prefix[limit - 1];
                if v.is_finite() && best.as_ref().is_none_or(|b| partial + v < b.1) {
                    let mut full = idx.clone();
                    full.push(k);
                    best = Some((full, partial + v));
                }
            }
        }
        // Odometer over the first n - 1 axes.
        let mut axis = 0;
        loop {
            if axis == n - 1 {
                return best.map(|(i, v)| (i, v, feasible));
            }
            idx[axis] += 1;
            if idx[axis] < tables[axis].len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values_hit_both_ends() {
        let a = AxisSpec::new(0.1, 15.0, 7).unwrap();
        let v = a.values();
        assert_eq!(v.len(), 7);
        assert_eq!((v[0], v[6]), (0.1, 15.0));
        assert_eq!(AxisSpec::new(2.0, 2.0, 1).unwrap().values(), vec![2.0]);
        assert!(AxisSpec::new(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn separable_min_agrees_with_enumeration() {
        let coords = vec![vec![0.0, 1.0, 2.0, 3.0]; 3];
        let tables = vec![
            vec![3.0, 1.0, 0.5, 0.2],
            vec![2.0, 0.0, -1.0, f64::NAN],
            vec![1.0, -0.5, -0.6, -3.0],
        ];
        for cap in [None, Some(0.0), Some(2.5), Some(4.0), Some(9.0)] {
            let mut best = f64::INFINITY;
            let mut count = 0;
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        let v = tables[0][a] + tables[1][b] + tables[2][c];
                        let s = coords[0][a] + coords[1][b] + coords[2][c];
                        if v.is_finite() && cap.is_none_or(|c| s <= c) {
                            count += 1;
                            best = best.min(v);
                        }
                    }
                }
            }
            let (_, v, f) = separable_min(&tables, &coords, cap).unwrap();
            assert_eq!((v, f), (best, count), "cap {cap:?}");
        }
        assert!(separable_min(&tables, &coords, Some(-1.0)).is_none());
    }
}
