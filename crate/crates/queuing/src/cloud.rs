//! Resource provisioning for a cloud provider with `N` service classes.
//!
//! Class `i` buys `r_i` resource units at price `p_i`; the provider holds
//! `C` units. With loads `ζ` and `s = ζᵀ r`, the blocking probability of
//! class `i` is `P(C - r_i < s <= C) / P(s <= C)`. The inner map is
//! `g = (a_i; b_i; C)` with `a_i = 1{C - r_i < s <= C}`, `b_i = 1{s <= C}`
//! and the objective is the negated profit
//!
//! ```text
//! f(y) = -[Σ p_i N_i (1 - y_i / y_{N+i}) - χ y_{2N+1}].
//! ```
//!
//! The tier constraints `l (p_{i+1} - p_i) <= r_{i+1} - r_i <= u (p_{i+1} - p_i)`
//! become box bounds in the variables `x = (r_1, r_2 - r_1, ..., r_N - r_{N-1}, C)`.
//! Indicators are smoothed by `σ(η t / C)` on the normalized slack unless
//! the sharpness is unset.

use serde::{Deserialize, Serialize};

use cscgd_core::{
    CompositionalProblem, Dims, Distribution, Error, FeasibleSet, Matrix, ProductDistribution, Result, RngStream,
    Sample,
};

use crate::constants::{numeric_outer_constants, sample_designs, ConstantReport, ReportsConstants};
use crate::safeguard::{safe_inverse, sigmoid, DEFAULT_DEN_EPS};

fn default_den_eps() -> f64 {
    DEFAULT_DEN_EPS
}

fn default_sharpness() -> Option<f64> {
    Some(20.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudInstance {
    /// Strictly increasing class prices.
    pub prices: Vec<f64>,
    /// Mean subscribers per unit time for each class.
    pub subscribers: Vec<f64>,
    /// Maintenance cost per resource unit.
    pub maintenance: f64,
    pub tier_low: f64,
    pub tier_high: f64,
    /// Load distribution of each class.
    pub loads: Vec<Distribution>,
    /// Bounds on `r_1`.
    pub first_resource: [f64; 2],
    /// Bounds on `C`.
    pub capacity: [f64; 2],
    /// Logistic sharpness `η`; `None` keeps the hard indicators.
    #[serde(default = "default_sharpness")]
    pub sharpness: Option<f64>,
    #[serde(default = "default_den_eps")]
    pub den_eps: f64,
}

impl CloudInstance {
    pub fn classes(&self) -> usize {
        self.prices.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.classes();
        let bad = |m: String| Err(Error::Config(m));
        if n == 0 || self.subscribers.len() != n || self.loads.len() != n {
            return bad("prices, subscribers and loads need one entry per class".into());
        }
        if !self.prices.windows(2).all(|w| w[0] < w[1]) {
            return bad("prices must be strictly increasing".into());
        }
        if !(self.tier_low >= 0.0 && self.tier_low <= self.tier_high) {
            return bad(format!("need 0 <= l <= u, got {} and {}", self.tier_low, self.tier_high));
        }
        if !(self.first_resource[0] > 0.0 && self.first_resource[0] <= self.first_resource[1]) {
            return bad("r_1 bounds must be positive and ordered".into());
        }
        if !(self.capacity[0] > 0.0 && self.capacity[0] <= self.capacity[1]) {
            return bad("capacity bounds must be positive and ordered".into());
        }
        if let Some(eta) = self.sharpness {
            if !(eta.is_finite() && eta > 0.0) {
                return bad(format!("sharpness must be positive, got {eta}"));
            }
        }
        if !(self.maintenance >= 0.0 && self.den_eps > 0.0) {
            return bad("maintenance must be >= 0 and den_eps > 0".into());
        }
        self.loads.iter().try_for_each(Distribution::validate)
    }

    pub fn build(&self) -> Result<Cloud> {
        self.validate()?;
        let n = self.classes();
        let mut lower = vec![self.first_resource[0]];
        let mut upper = vec![self.first_resource[1]];
        for w in self.prices.windows(2) {
            lower.push(self.tier_low * (w[1] - w[0]));
            upper.push(self.tier_high * (w[1] - w[0]));
        }
        lower.push(self.capacity[0]);
        upper.push(self.capacity[1]);
        debug_assert_eq!(lower.len(), n + 1);
        Ok(Cloud {
            set: FeasibleSet::boxed(lower, upper)?,
            sampler: ProductDistribution::new(self.loads.clone())?,
            support: enumerate_support(&self.loads),
            inst: self.clone(),
        })
    }
}

/// All outcomes of a product of atomic distributions with their
/// probabilities, when the product is small enough to enumerate.
fn enumerate_support(loads: &[Distribution]) -> Option<Vec<(Vec<f64>, f64)>> {
    let atoms: Vec<Vec<f64>> = loads
        .iter()
        .map(|d| match d {
            Distribution::Constant { value } => Some(vec![*value]),
            Distribution::Empirical { support } => Some(support.clone()),
            _ => None,
        })
        .collect::<Option<_>>()?;
    let total: usize = atoms.iter().map(Vec::len).product();
    if total > 100_000 {
        return None;
    }
    let mut out = vec![(Vec::new(), 1.0)];
    for a in &atoms {
        let p = 1.0 / a.len() as f64;
        out = out
            .into_iter()
            .flat_map(|(v, w)| {
                a.iter().map(move |x| {
                    let mut v2 = v.clone();
                    v2.push(*x);
                    (v2, w * p)
                })
            })
            .collect();
    }
    Some(out)
}

pub struct Cloud {
    inst: CloudInstance,
    set: FeasibleSet,
    sampler: ProductDistribution,
    support: Option<Vec<(Vec<f64>, f64)>>,
}

impl Cloud {
    pub fn instance(&self) -> &CloudInstance {
        &self.inst
    }

    /// Resource levels `r` from the increment parametrization.
    pub fn resources(&self, x: &[f64]) -> Vec<f64> {
        let n = self.inst.classes();
        let mut r = Vec::with_capacity(n);
        let mut acc = 0.0;
        for xi in &x[..n] {
            acc += xi;
            r.push(acc);
        }
        r
    }

    /// Design vector for given resource levels and capacity.
    pub fn design(&self, r: &[f64], capacity: f64) -> Vec<f64> {
        let mut x = vec![r[0]];
        x.extend(r.windows(2).map(|w| w[1] - w[0]));
        x.push(capacity);
        x
    }

    /// Indicator `1{t >= 0}` or its smoothing `σ(η t / C)`, with the
    /// derivative of the smoothing in `t` and in `C`.
    fn step(&self, t: f64, c: f64) -> (f64, f64, f64) {
        match self.inst.sharpness {
            None => (if t >= 0.0 { 1.0 } else { 0.0 }, 0.0, 0.0),
            Some(eta) => {
                let (v, dv) = sigmoid(eta * t / c);
                (v, dv * eta / c, -dv * eta * t / (c * c))
            }
        }
    }

    /// Blocking probabilities `y_i / y_{N+i}` at tracked moments.
    pub fn blocking(&self, y: &[f64]) -> Vec<f64> {
        let n = self.inst.classes();
        (0..n).map(|i| y[i] * safe_inverse(y[n + i], self.inst.den_eps).0).collect()
    }
}

impl CompositionalProblem for Cloud {
    fn dims(&self) -> Dims {
        let n = self.inst.classes();
        Dims {
            n: n + 1,
            m: 2 * n + 1,
            d: 0,
            j: 0,
        }
    }

    fn sample(&self, rng: &mut RngStream) -> Sample {
        self.sampler.draw(rng)
    }

    fn inner_g(&self, x: &[f64], zeta: &[f64]) -> Vec<f64> {
        let n = self.inst.classes();
        let c = x[n];
        let r = self.resources(x);
        let s: f64 = zeta.iter().zip(&r).map(|(z, ri)| z * ri).sum();
        let (b, _, _) = self.step(c - s, c);
        let mut g: Vec<f64> = r.iter().map(|ri| b - self.step(c - ri - s, c).0).collect();
        g.extend(std::iter::repeat(b).take(n));
        g.push(c);
        g
    }

    fn inner_g_jacobian(&self, x: &[f64], zeta: &[f64]) -> Matrix {
        let n = self.inst.classes();
        let c = x[n];
        let r = self.resources(x);
        let s: f64 = zeta.iter().zip(&r).map(|(z, ri)| z * ri).sum();
        let mut j = Matrix::zeros(n + 1, 2 * n + 1);
        // ∂r_k/∂x_j = 1 for j <= k (j < n); accumulate ∂/∂x_j from ∂/∂r_k.
        let to_x = |dr: &[f64]| -> Vec<f64> {
            let mut dx = vec![0.0; n];
            let mut tail = 0.0;
            for k in (0..n).rev() {
                tail += dr[k];
                dx[k] = tail;
            }
            dx
        };
        let (_, bt, bc) = self.step(c - s, c);
        // b = step(C - s): ∂/∂r_k = -bt ζ_k, ∂/∂C = bt + bc.
        let db_dr: Vec<f64> = zeta.iter().map(|z| -bt * z).collect();
        let db_dx = to_x(&db_dr);
        let db_dc = bt + bc;
        for i in 0..n {
            let (_, lt, lc) = self.step(c - r[i] - s, c);
            let mut da_dr: Vec<f64> = zeta.iter().zip(&db_dr).map(|(z, d)| d + lt * z).collect();
            da_dr[i] += lt;
            let da_dx = to_x(&da_dr);
            for k in 0..n {
                j.set(k, i, da_dx[k]);
                j.set(k, n + i, db_dx[k]);
            }
            j.set(n, i, db_dc - (lt + lc));
            j.set(n, n + i, db_dc);
        }
        j.set(n, 2 * n, 1.0);
        j
    }

    fn inner_h(&self, _: &[f64], _: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    fn inner_h_jacobian(&self, _: &[f64], _: &[f64]) -> Matrix {
        Matrix::zeros(self.inst.classes() + 1, 0)
    }

    fn outer_f(&self, y: &[f64]) -> f64 {
        let n = self.inst.classes();
        let inst = &self.inst;
        let revenue: f64 = (0..n)
            .map(|i| {
                let (inv, _) = safe_inverse(y[n + i], inst.den_eps);
                inst.prices[i] * inst.subscribers[i] * (1.0 - y[i] * inv)
            })
            .sum();
        -(revenue - inst.maintenance * y[2 * n])
    }

    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64> {
        let n = self.inst.classes();
        let inst = &self.inst;
        let mut g = vec![0.0; 2 * n + 1];
        for i in 0..n {
            let (inv, dinv) = safe_inverse(y[n + i], inst.den_eps);
            let w = inst.prices[i] * inst.subscribers[i];
            g[i] = w * inv;
            g[n + i] = w * y[i] * dinv;
        }
        g[2 * n] = inst.maintenance;
        g
    }

    fn outer_q(&self, _: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    fn outer_q_jacobian(&self, _: &[f64]) -> Matrix {
        Matrix::zeros(0, 0)
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn name(&self) -> String {
        "cloud-provisioning".into()
    }

    fn exact_expectations(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let support = self.support.as_ref()?;
        let mut y = vec![0.0; 2 * self.inst.classes() + 1];
        for (zeta, w) in support {
            for (acc, g) in y.iter_mut().zip(self.inner_g(x, zeta)) {
                *acc += w * g;
            }
        }
        Some((y, Vec::new()))
    }

    fn inner_kink_distance(&self, x: &[f64], zeta: &[f64]) -> f64 {
        if self.inst.sharpness.is_some() {
            return f64::INFINITY;
        }
        let n = self.inst.classes();
        let c = x[n];
        let r = self.resources(x);
        let s: f64 = zeta.iter().zip(&r).map(|(z, ri)| z * ri).sum();
        let slope = 1.0 + n as f64 * (1.0 + zeta.iter().map(|z| z.abs()).sum::<f64>());
        r.iter()
            .map(|ri| (c - ri - s).abs())
            .fold((c - s).abs(), f64::min)
            / slope
    }

    fn outer_f_kink_distance(&self, y: &[f64]) -> f64 {
        let n = self.inst.classes();
        (0..n)
            .map(|i| (y[n + i] - self.inst.den_eps).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

impl ReportsConstants for Cloud {
    /// Every constant is numerical: inner moments by enumeration of the
    /// load support, outer bounds at the resulting expectations, both
    /// maximized over sampled feasible designs.
    fn constant_report(&self) -> Result<ConstantReport> {
        let support = self.support.as_ref().ok_or_else(|| {
            Error::Config("constant report needs loads with a small finite support".into())
        })?;
        let designs = sample_designs(&self.set, 128, 0x5eed)?;
        let (mut c_g, mut v_g) = (0.0f64, 0.0f64);
        let mut ys = Vec::with_capacity(designs.len());
        for x in &designs {
            let (mean, _) = self.exact_expectations(x).expect("support is enumerable");
            let (mut grad_sq, mut var) = (0.0, 0.0);
            for (zeta, w) in support {
                grad_sq += w * self.inner_g_jacobian(x, zeta).frobenius_sq();
                var += w * cscgd_core::linalg::dist_sq(&self.inner_g(x, zeta), &mean);
            }
            c_g = c_g.max(grad_sq);
            v_g = v_g.max(var);
            ys.push(mean);
        }
        let (c_f, l_f) = numeric_outer_constants(self, &ys);
        Ok(ConstantReport {
            c_f,
            l_f,
            c_g,
            v_g,
            c_h: 0.0,
            v_h: 0.0,
            c_q: 0.0,
            l_q: 0.0,
            d_x: self.set.squared_diameter(),
            outer_numeric: true,
        })
    }
}
