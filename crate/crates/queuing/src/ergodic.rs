//! Parallel M/G/1 queues over fading channels, ergodic-capacity model.
//!
//! Queue `i` is served at rate `b_i = B_i log(1 + ζ_i p_i)`. With
//! `g = (λ_i; λ_i/b_i; λ_i/b_i²)` the PK delay is
//! `½ y_{2N+i} / (1 - y_{N+i})`; the denominator is replaced by its tangent
//! extension below the knee `1 - y >= ε`. The quality-of-service
//! constraint `E min_i b_i >= R^min` is `q(z) = R^min + z <= 0` with
//! `h = -min_i b_i`.

use serde::{Deserialize, Serialize};

use cscgd_core::distributions::chi2_even_sf;
use cscgd_core::quadrature::{integrate_adaptive, integrate_semi_infinite, FixedRule};
use cscgd_core::{
    CompositionalProblem, Dims, Distribution, Error, FeasibleSet, Matrix, ProductDistribution, Result, RngStream,
    Sample,
};

use crate::constants::{ConstantReport, ReportsConstants};
use crate::safeguard::{safe_inverse, safe_log, DEFAULT_DEN_EPS};
use crate::utility::UtilityWeights;

fn default_den_eps() -> f64 {
    DEFAULT_DEN_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mg1ErgodicInstance {
    pub bandwidths: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_lim: f64,
    pub p_min: f64,
    /// Per-queue upper bound and total power budget.
    pub p_max: f64,
    pub r_min: f64,
    /// Number of antennas `K`; the channel gain is chi-squared with `2K`
    /// degrees of freedom.
    pub antennas: u32,
    /// Lower truncation `G` of the channel gain.
    pub channel_lower: f64,
    /// Knee `ε` of the delay denominator extension.
    pub knee_eps: f64,
    #[serde(default)]
    pub weights: UtilityWeights,
    #[serde(default = "default_den_eps")]
    pub den_eps: f64,
}

/// `b = B log(1 + ζ p)`.
#[inline]
pub fn rate(bandwidth: f64, p: f64, zeta: f64) -> f64 {
    bandwidth * (zeta * p).ln_1p()
}

/// `∂b/∂p = B ζ / (1 + ζ p)`.
#[inline]
pub fn rate_dp(bandwidth: f64, p: f64, zeta: f64) -> f64 {
    bandwidth * zeta / (1.0 + zeta * p)
}

impl Mg1ErgodicInstance {
    pub fn queues(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.queues();
        let bad = |m: String| Err(Error::Config(m));
        if n == 0 {
            return bad("at least one queue required".into());
        }
        self.weights.validate(n)?;
        if !self.bandwidths.iter().all(|b| b.is_finite() && *b > 0.0) {
            return bad("bandwidths must be positive".into());
        }
        if !(self.channel_lower.is_finite() && self.channel_lower > 0.0) {
            return bad("channel gain must be bounded away from zero (G > 0)".into());
        }
        if !(self.p_min > 0.0 && self.p_min <= self.p_max && self.lambda_min > 0.0 && self.lambda_min <= self.lambda_max) {
            return bad("need 0 < p_min <= p_max and 0 < lambda_min <= lambda_max".into());
        }
        if self.antennas == 0 {
            return bad("at least one antenna required".into());
        }
        if !(self.knee_eps > 0.0 && self.knee_eps < 1.0) {
            return bad(format!("knee must lie in (0, 1), got {}", self.knee_eps));
        }
        if !(self.den_eps > 0.0) {
            return bad("den_eps must be positive".into());
        }
        Ok(())
    }

    pub fn channel(&self) -> Distribution {
        Distribution::TruncatedChiSquared {
            dof: 2 * self.antennas,
            lower: self.channel_lower,
        }
    }

    pub fn feasible_set(&self) -> Result<FeasibleSet> {
        let n = self.queues();
        FeasibleSet::product(vec![
            FeasibleSet::box_with_sum_cap(vec![self.lambda_min; n], vec![self.lambda_max; n], self.lambda_lim)?,
            FeasibleSet::box_with_sum_cap(vec![self.p_min; n], vec![self.p_max; n], self.p_max)?,
        ])
    }

    pub fn build(&self) -> Result<Mg1Ergodic> {
        self.validate()?;
        let n = self.queues();
        let channel = self.channel();
        Ok(Mg1Ergodic {
            set: self.feasible_set()?,
            sampler: ProductDistribution::new(vec![channel.clone(); n])?,
            rule: FixedRule::for_distribution(&channel, 20, 24),
            inst: self.clone(),
        })
    }
}

pub struct Mg1Ergodic {
    inst: Mg1ErgodicInstance,
    set: FeasibleSet,
    sampler: ProductDistribution,
    rule: FixedRule,
}

impl Mg1Ergodic {
    pub fn instance(&self) -> &Mg1ErgodicInstance {
        &self.inst
    }

    fn argmin_first(v: &[f64]) -> usize {
        let mut best = 0;
        for (k, x) in v.iter().enumerate() {
            if *x < v[best] {
                best = k;
            }
        }
        best
    }

    fn rates(&self, p: &[f64], zeta: &[f64]) -> Vec<f64> {
        (0..self.inst.queues())
            .map(|i| rate(self.inst.bandwidths[i], p[i], zeta[i]))
            .collect()
    }

    /// `P(b_i > t)` for the truncated chi-squared gain.
    fn rate_survival(&self, i: usize, p: f64, t: f64) -> f64 {
        let k = self.inst.antennas;
        let g = self.inst.channel_lower;
        let zeta = (t / self.inst.bandwidths[i]).exp_m1() / p;
        if zeta <= g {
            1.0
        } else {
            chi2_even_sf(zeta, k) / chi2_even_sf(g, k)
        }
    }

    /// `E min_i b_i(p_i, ζ_i) = t0 + ∫_{t0}^∞ Π_i P(b_i > t) dt`, where
    /// `t0` is the smallest rate at the lower gain.
    pub fn expected_min_rate(&self, p: &[f64]) -> Result<f64> {
        let n = self.inst.queues();
        let g = self.inst.channel_lower;
        let t0 = (0..n)
            .map(|i| rate(self.inst.bandwidths[i], p[i], g))
            .fold(f64::INFINITY, f64::min);
        let surv = |t: f64| (0..n).map(|i| self.rate_survival(i, p[i], t)).product::<f64>();
        let span = 20.0 * self.inst.bandwidths.iter().cloned().fold(0.0, f64::max);
        let head = integrate_adaptive(surv, t0, t0 + span, 1e-13, 1e-12, 4000)?;
        let tail = integrate_semi_infinite(surv, t0 + span, 1e-13, 1e-12, 4000)?;
        Ok(t0 + head.value + tail.value)
    }
}

impl CompositionalProblem for Mg1Ergodic {
    fn dims(&self) -> Dims {
        let n = self.inst.queues();
        Dims {
            n: 2 * n,
            m: 3 * n,
            d: 1,
            j: 1,
        }
    }

    fn sample(&self, rng: &mut RngStream) -> Sample {
        self.sampler.draw(rng)
    }

    fn inner_g(&self, x: &[f64], zeta: &[f64]) -> Vec<f64> {
        let n = self.inst.queues();
        let (lam, p) = x.split_at(n);
        let b = self.rates(p, zeta);
        let mut g = lam.to_vec();
        g.extend((0..n).map(|i| lam[i] / b[i]));
        g.extend((0..n).map(|i| lam[i] / (b[i] * b[i])));
        g
    }

    fn inner_g_jacobian(&self, x: &[f64], zeta: &[f64]) -> Matrix {
        let n = self.inst.queues();
        let (lam, p) = x.split_at(n);
        let mut j = Matrix::zeros(2 * n, 3 * n);
        for i in 0..n {
            let bw = self.inst.bandwidths[i];
            let b = rate(bw, p[i], zeta[i]);
            let db = rate_dp(bw, p[i], zeta[i]);
            j.set(i, i, 1.0);
            j.set(i, n + i, 1.0 / b);
            j.set(i, 2 * n + i, 1.0 / (b * b));
            j.set(n + i, n + i, -lam[i] * db / (b * b));
            j.set(n + i, 2 * n + i, -2.0 * lam[i] * db / (b * b * b));
        }
        j
    }

    fn inner_h(&self, x: &[f64], zeta: &[f64]) -> Vec<f64> {
        let n = self.inst.queues();
        let b = self.rates(&x[n..], zeta);
        vec![-b[Self::argmin_first(&b)]]
    }

    fn inner_h_jacobian(&self, x: &[f64], zeta: &[f64]) -> Matrix {
        let n = self.inst.queues();
        let p = &x[n..];
        let k = Self::argmin_first(&self.rates(p, zeta));
        let mut j = Matrix::zeros(2 * n, 1);
        j.set(n + k, 0, -rate_dp(self.inst.bandwidths[k], p[k], zeta[k]));
        j
    }

    fn outer_f(&self, y: &[f64]) -> f64 {
        let n = self.inst.queues();
        let w = &self.inst.weights;
        (0..n)
            .map(|i| {
                let (inv, _) = safe_inverse(1.0 - y[n + i], self.inst.knee_eps);
                w.phi[i] * 0.5 * y[2 * n + i] * inv - w.psi[i] * safe_log(y[i], self.inst.den_eps).0
            })
            .sum()
    }

    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64> {
        let n = self.inst.queues();
        let w = &self.inst.weights;
        let mut g = vec![0.0; 3 * n];
        for i in 0..n {
            let (inv, dinv) = safe_inverse(1.0 - y[n + i], self.inst.knee_eps);
            g[i] = -w.psi[i] * safe_log(y[i], self.inst.den_eps).1;
            g[n + i] = -w.phi[i] * 0.5 * y[2 * n + i] * dinv;
            g[2 * n + i] = w.phi[i] * 0.5 * inv;
        }
        g
    }

    fn outer_q(&self, z: &[f64]) -> Vec<f64> {
        vec![self.inst.r_min + z[0]]
    }

    fn outer_q_jacobian(&self, _: &[f64]) -> Matrix {
        Matrix::identity(1)
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn name(&self) -> String {
        "mg1-ergodic".into()
    }

    fn exact_expectations(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.inst.queues();
        let (lam, p) = x.split_at(n);
        let mut y = lam.to_vec();
        let mut inv1 = Vec::with_capacity(n);
        let mut inv2 = Vec::with_capacity(n);
        for i in 0..n {
            let bw = self.inst.bandwidths[i];
            inv1.push(lam[i] * self.rule.integrate(|z| 1.0 / rate(bw, p[i], z)));
            inv2.push(lam[i] * self.rule.integrate(|z| rate(bw, p[i], z).powi(-2)));
        }
        y.extend(inv1);
        y.extend(inv2);
        let min_rate = self.expected_min_rate(p).ok()?;
        Some((y, vec![-min_rate]))
    }

    fn inner_kink_distance(&self, x: &[f64], zeta: &[f64]) -> f64 {
        let n = self.inst.queues();
        let p = &x[n..];
        let b = self.rates(p, zeta);
        let k = Self::argmin_first(&b);
        let dk = rate_dp(self.inst.bandwidths[k], p[k], zeta[k]);
        (0..n)
            .filter(|&i| i != k)
            .map(|i| (b[i] - b[k]) / (dk + rate_dp(self.inst.bandwidths[i], p[i], zeta[i])))
            .fold(f64::INFINITY, f64::min)
    }

    fn outer_f_kink_distance(&self, y: &[f64]) -> f64 {
        let n = self.inst.queues();
        (0..n)
            .map(|i| {
                ((1.0 - y[n + i]) - self.inst.knee_eps)
                    .abs()
                    .min((y[i] - self.inst.den_eps).abs())
            })
            .fold(f64::INFINITY, f64::min)
    }
}

impl ReportsConstants for Mg1Ergodic {
    fn constant_report(&self) -> Result<ConstantReport> {
        let inst = &self.inst;
        let n = inst.queues();
        let eps = inst.knee_eps;
        let w = &inst.weights;
        let pg = 1.0 + inst.p_min * inst.channel_lower;
        let b_low: Vec<f64> = (0..n)
            .map(|i| rate(inst.bandwidths[i], inst.p_min, inst.channel_lower))
            .collect();
        let c_g = n as f64
            + (0..n)
                .map(|i| {
                    let b2 = b_low[i] * b_low[i];
                    (1.0 + inst.lambda_max / (pg * pg * b2)) / b2
                        + (1.0 + 2.0 * inst.lambda_max / (pg * pg * b2)) / (b2 * b2)
                })
                .sum::<f64>();
        let c_h = inst.bandwidths.iter().cloned().fold(0.0, f64::max) / (pg * pg);
        let c_f = (0..n)
            .map(|i| {
                w.phi[i].powi(2) / (4.0 * (1.0 - eps).powi(2)) * (1.0 + 1.0 / (b_low[i].powi(2) * (1.0 - eps).powi(2)))
                    + (w.psi[i] / inst.lambda_min).powi(2)
            })
            .sum();
        let l_f = (0..n)
            .map(|i| {
                w.phi[i] / (1.0 - eps).powi(2) * (0.5 + 1.0 / (b_low[i] * (1.0 - eps)))
                    + 2.0 * w.psi[i] / inst.lambda_min.powi(2)
            })
            .fold(0.0, f64::max);
        Ok(ConstantReport {
            c_f,
            l_f,
            c_g,
            v_g: c_g,
            c_h,
            v_h: c_h,
            c_q: 1.0,
            l_q: 0.0,
            d_x: self.set.squared_diameter(),
            outer_numeric: false,
        })
    }
}
