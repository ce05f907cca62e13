//! Parallel M/G/1 queues over fading channels, outage model.
//!
//! Queue `i` transmits at a fixed rate `R_i` and retransmits on outage,
//! which happens when `R_i` exceeds the instantaneous capacity
//! `b_i = B_i log(1 + ζ_i p_i)`. The outage indicator is smoothed by the
//! logistic function `r_i = 1/(1 + exp(-η (R_i - b_i)))`, so that
//! `ρ_i = E r_i` is an outage probability. With `g = (r_i; λ_i)`:
//!
//! ```text
//! f(y) = Σ [φ̄_i w_i - ψ̄_i log(R_i (1 - y_i))],
//! w_i  = y_{N+i} (1 + y_i) / (2 R_i (1 - y_i) (R_i (1 - y_i) - y_{N+i})).
//! ```
//!
//! The problem has no expectation constraint.

use serde::{Deserialize, Serialize};

use cscgd_core::quadrature::FixedRule;
use cscgd_core::{
    CompositionalProblem, Dims, Distribution, Error, FeasibleSet, Matrix, ProductDistribution, Result, RngStream,
    Sample,
};

use crate::constants::{numeric_outer_constants_over_designs, ConstantReport, ReportsConstants};
use crate::ergodic::{rate, rate_dp};
use crate::safeguard::{safe_inverse, safe_log, sigmoid, DEFAULT_DEN_EPS};
use crate::utility::UtilityWeights;

fn default_den_eps() -> f64 {
    DEFAULT_DEN_EPS
}

fn default_sharpness() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageInstance {
    pub bandwidths: Vec<f64>,
    pub rates: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_lim: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Mean of the exponential channel gain before truncation.
    pub channel_mean: f64,
    /// Lower truncation `G` of the channel gain.
    pub channel_lower: f64,
    /// Logistic sharpness `η >= 1`.
    #[serde(default = "default_sharpness")]
    pub sharpness: f64,
    #[serde(default)]
    pub weights: UtilityWeights,
    #[serde(default = "default_den_eps")]
    pub den_eps: f64,
}

impl OutageInstance {
    pub fn queues(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.queues();
        let bad = |m: String| Err(Error::Config(m));
        if n == 0 || self.rates.len() != n {
            return bad("need one fixed rate per queue".into());
        }
        self.weights.validate(n)?;
        if !self.bandwidths.iter().chain(&self.rates).all(|v| v.is_finite() && *v > 0.0) {
            return bad("bandwidths and rates must be positive".into());
        }
        if !(self.sharpness >= 1.0 && self.sharpness.is_finite()) {
            return bad(format!("sharpness must be >= 1, got {}", self.sharpness));
        }
        if !(self.p_min > 0.0 && self.p_min <= self.p_max && self.lambda_min > 0.0 && self.lambda_min <= self.lambda_max) {
            return bad("need 0 < p_min <= p_max and 0 < lambda_min <= lambda_max".into());
        }
        if !(self.channel_mean > 0.0 && self.channel_lower >= 0.0 && self.den_eps > 0.0) {
            return bad("channel parameters and den_eps must be positive".into());
        }
        Ok(())
    }

    pub fn channel(&self) -> Distribution {
        Distribution::TruncatedExponential {
            mean: self.channel_mean,
            lower: self.channel_lower,
            upper: None,
        }
    }

    pub fn build(&self) -> Result<Outage> {
        self.validate()?;
        let n = self.queues();
        let set = FeasibleSet::product(vec![
            FeasibleSet::box_with_sum_cap(vec![self.lambda_min; n], vec![self.lambda_max; n], self.lambda_lim)?,
            FeasibleSet::box_with_sum_cap(vec![self.p_min; n], vec![self.p_max; n], self.p_max)?,
        ])?;
        let channel = self.channel();
        Ok(Outage {
            set,
            sampler: ProductDistribution::new(vec![channel.clone(); n])?,
            rule: FixedRule::for_distribution(&channel, 20, 24),
            inst: self.clone(),
        })
    }
}

pub struct Outage {
    inst: OutageInstance,
    set: FeasibleSet,
    sampler: ProductDistribution,
    rule: FixedRule,
}

impl Outage {
    pub fn instance(&self) -> &OutageInstance {
        &self.inst
    }

    /// Smoothed outage indicator and its derivative in `p`.
    fn outage(&self, i: usize, p: f64, zeta: f64) -> (f64, f64) {
        let bw = self.inst.bandwidths[i];
        let eta = self.inst.sharpness;
        let (s, ds) = sigmoid(eta * (self.inst.rates[i] - rate(bw, p, zeta)));
        (s, -eta * ds * rate_dp(bw, p, zeta))
    }

    /// Waiting time `w` and its partials in `(ρ, λ)`.
    fn waiting(&self, i: usize, rho: f64, lam: f64) -> (f64, f64, f64) {
        let r = self.inst.rates[i];
        let eps = self.inst.den_eps;
        let a = lam * (1.0 + rho) / (2.0 * r * r);
        let (i1, d1) = safe_inverse(1.0 - rho, eps);
        let (i2, d2) = safe_inverse(1.0 - rho - lam / r, eps);
        let w = a * i1 * i2;
        let dw_drho = lam / (2.0 * r * r) * i1 * i2 - a * d1 * i2 - a * i1 * d2;
        let dw_dlam = (1.0 + rho) / (2.0 * r * r) * i1 * i2 - a * i1 * d2 / r;
        (w, dw_drho, dw_dlam)
    }
}

impl CompositionalProblem for Outage {
    fn dims(&self) -> Dims {
        let n = self.inst.queues();
        Dims {
            n: 2 * n,
            m: 2 * n,
            d: 0,
            j: 0,
        }
    }

    fn sample(&self, rng: &mut RngStream) -> Sample {
        self.sampler.draw(rng)
    }

    fn inner_g(&self, x: &[f64], zeta: &[f64]) -> Vec<f64> {
        let n = self.inst.queues();
        let (lam, p) = x.split_at(n);
        let mut g: Vec<f64> = (0..n).map(|i| self.outage(i, p[i], zeta[i]).0).collect();
        g.extend_from_slice(lam);
        g
    }

    fn inner_g_jacobian(&self, x: &[f64], zeta: &[f64]) -> Matrix {
        let n = self.inst.queues();
        let p = &x[n..];
        let mut j = Matrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j.set(n + i, i, self.outage(i, p[i], zeta[i]).1);
            j.set(i, n + i, 1.0);
        }
        j
    }

    fn inner_h(&self, _: &[f64], _: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    fn inner_h_jacobian(&self, _: &[f64], _: &[f64]) -> Matrix {
        Matrix::zeros(2 * self.inst.queues(), 0)
    }

    fn outer_f(&self, y: &[f64]) -> f64 {
        let n = self.inst.queues();
        let w = &self.inst.weights;
        (0..n)
            .map(|i| {
                let (wait, _, _) = self.waiting(i, y[i], y[n + i]);
                let thr = self.inst.rates[i] * (1.0 - y[i]);
                w.phi[i] * wait - w.psi[i] * safe_log(thr, self.inst.den_eps).0
            })
            .sum()
    }

    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64> {
        let n = self.inst.queues();
        let w = &self.inst.weights;
        let mut g = vec![0.0; 2 * n];
        for i in 0..n {
            let (_, d_rho, d_lam) = self.waiting(i, y[i], y[n + i]);
            let r = self.inst.rates[i];
            let dlog = safe_log(r * (1.0 - y[i]), self.inst.den_eps).1;
            g[i] = w.phi[i] * d_rho + w.psi[i] * r * dlog;
            g[n + i] = w.phi[i] * d_lam;
        }
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
        "mg1-outage".into()
    }

    fn exact_expectations(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.inst.queues();
        let (lam, p) = x.split_at(n);
        let mut y: Vec<f64> = (0..n)
            .map(|i| self.rule.integrate(|z| self.outage(i, p[i], z).0))
            .collect();
        y.extend_from_slice(lam);
        Some((y, Vec::new()))
    }

    fn outer_f_kink_distance(&self, y: &[f64]) -> f64 {
        let n = self.inst.queues();
        let eps = self.inst.den_eps;
        (0..n)
            .map(|i| {
                let r = self.inst.rates[i];
                let s1 = 1.0 - y[i];
                let s2 = s1 - y[n + i] / r;
                (s1 - eps).abs().min((s2 - eps).abs()).min((r * s1 - eps).abs())
            })
            .fold(f64::INFINITY, f64::min)
    }
}

impl ReportsConstants for Outage {
    /// `C_g = V_g = N + Σ ½ (1 + (B_i G / (1 + P^min G))²)`; the outer
    /// constants are estimated numerically.
    fn constant_report(&self) -> Result<ConstantReport> {
        let inst = &self.inst;
        let g = inst.channel_lower;
        let c_g = inst.queues() as f64
            + inst
                .bandwidths
                .iter()
                .map(|b| 0.5 * (1.0 + (b * g / (1.0 + inst.p_min * g)).powi(2)))
                .sum::<f64>();
        let (c_f, l_f) = numeric_outer_constants_over_designs(self)?;
        Ok(ConstantReport {
            c_f,
            l_f,
            c_g,
            v_g: c_g,
            c_h: 0.0,
            v_h: 0.0,
            c_q: 0.0,
            l_q: 0.0,
            d_x: self.set.squared_diameter(),
            outer_numeric: true,
        })
    }
}
