//! Parallel G/G/1 queues over fading channels, effective-capacity model.
//!
//! With `g = (b_i; b_i²)`, `b_i = B_i log(1 + ζ_i p_i)`, the QoS exponent
//! and effective capacity are
//!
//! ```text
//! θ_i(u, v) = (u - m_i^a) / ((σ_i^a)² + v - u²),
//! α_i(u, v) = m_i^a + θ_i (σ_i^a)² / 2,
//! ```
//!
//! and the objective is `Σ [-ψ̄_i log α_i + φ̄_i η̄ exp(-θ_i α_i W)]`. The
//! variance denominator uses the tangent extension below `ε_den`.

use serde::{Deserialize, Serialize};

use cscgd_core::quadrature::FixedRule;
use cscgd_core::{
    CompositionalProblem, Dims, Distribution, Error, FeasibleSet, Matrix, ProductDistribution, Result, RngStream,
    Sample,
};

use crate::constants::{numeric_outer_constants_over_designs, ConstantReport, ReportsConstants};
use crate::ergodic::{rate, rate_dp};
use crate::safeguard::{safe_inverse, safe_log, DEFAULT_DEN_EPS};
use crate::utility::UtilityWeights;

fn default_den_eps() -> f64 {
    DEFAULT_DEN_EPS
}

fn default_normalizer() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCapacityInstance {
    pub bandwidths: Vec<f64>,
    pub p_min: f64,
    /// Per-queue upper bound and total power budget.
    pub p_max: f64,
    /// Delay target `W`.
    pub delay_target: f64,
    pub arrival_means: Vec<f64>,
    pub arrival_variances: Vec<f64>,
    /// Means of the exponential channel gains.
    pub channel_means: Vec<f64>,
    /// Constant `η̄` in front of the delay-violation term.
    #[serde(default = "default_normalizer")]
    pub normalizer: f64,
    #[serde(default)]
    pub weights: UtilityWeights,
    #[serde(default = "default_den_eps")]
    pub den_eps: f64,
}

impl EffectiveCapacityInstance {
    pub fn queues(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.queues();
        let bad = |m: String| Err(Error::Config(m));
        if n == 0 {
            return bad("at least one queue required".into());
        }
        for (name, v) in [
            ("arrival_means", &self.arrival_means),
            ("arrival_variances", &self.arrival_variances),
            ("channel_means", &self.channel_means),
        ] {
            if v.len() != n {
                return bad(format!("{name} has {} entries, expected {n}", v.len()));
            }
            if !v.iter().all(|x| x.is_finite() && *x > 0.0) {
                return bad(format!("{name} must be finite and positive"));
            }
        }
        self.weights.validate(n)?;
        if !self.bandwidths.iter().all(|b| b.is_finite() && *b > 0.0) {
            return bad("bandwidths must be positive".into());
        }
        if !(self.p_min > 0.0 && self.p_min <= self.p_max && self.delay_target > 0.0) {
            return bad("need 0 < p_min <= p_max and a positive delay target".into());
        }
        if !(self.normalizer > 0.0 && self.den_eps > 0.0) {
            return bad("normalizer and den_eps must be positive".into());
        }
        Ok(())
    }

    pub fn build(&self) -> Result<EffectiveCapacity> {
        self.validate()?;
        let n = self.queues();
        let channels: Vec<Distribution> = self
            .channel_means
            .iter()
            .map(|&mean| Distribution::Exponential { mean })
            .collect();
        Ok(EffectiveCapacity {
            set: FeasibleSet::box_with_sum_cap(vec![self.p_min; n], vec![self.p_max; n], self.p_max)?,
            rules: channels.iter().map(|d| FixedRule::for_distribution(d, 20, 24)).collect(),
            sampler: ProductDistribution::new(channels)?,
            inst: self.clone(),
        })
    }
}

pub struct EffectiveCapacity {
    inst: EffectiveCapacityInstance,
    set: FeasibleSet,
    sampler: ProductDistribution,
    rules: Vec<FixedRule>,
}

/// Value of one summand and its partials in `(u, v)`.
struct Term {
    value: f64,
    du: f64,
    dv: f64,
}

impl EffectiveCapacity {
    pub fn instance(&self) -> &EffectiveCapacityInstance {
        &self.inst
    }

    /// `(θ, α)` at tracked moments `(u, v)`.
    pub fn exponent_and_capacity(&self, i: usize, u: f64, v: f64) -> (f64, f64) {
        let s2 = self.inst.arrival_variances[i];
        let (inv, _) = safe_inverse((s2 + v - u * u) / s2, self.inst.den_eps);
        let theta = (u - self.inst.arrival_means[i]) / s2 * inv;
        (theta, self.inst.arrival_means[i] + 0.5 * theta * s2)
    }

    fn term(&self, i: usize, u: f64, v: f64) -> Term {
        let inst = &self.inst;
        let s2 = inst.arrival_variances[i];
        let ma = inst.arrival_means[i];
        let (inv, dinv) = safe_inverse((s2 + v - u * u) / s2, inst.den_eps);
        let theta = (u - ma) / s2 * inv;
        let dtheta_du = inv / s2 + (u - ma) / s2 * dinv * (-2.0 * u / s2);
        let dtheta_dv = (u - ma) / s2 * dinv / s2;
        let alpha = ma + 0.5 * theta * s2;
        let (dalpha_du, dalpha_dv) = (0.5 * s2 * dtheta_du, 0.5 * s2 * dtheta_dv);
        let w = inst.delay_target;
        let e = (-theta * alpha * w).exp();
        let de_du = -w * e * (dtheta_du * alpha + theta * dalpha_du);
        let de_dv = -w * e * (dtheta_dv * alpha + theta * dalpha_dv);
        let (lg, dlg) = safe_log(alpha, inst.den_eps);
        let (psi, phi) = (inst.weights.psi[i], inst.weights.phi[i] * inst.normalizer);
        Term {
            value: -psi * lg + phi * e,
            du: -psi * dlg * dalpha_du + phi * de_du,
            dv: -psi * dlg * dalpha_dv + phi * de_dv,
        }
    }
}

impl CompositionalProblem for EffectiveCapacity {
    fn dims(&self) -> Dims {
        let n = self.inst.queues();
        Dims {
            n,
            m: 2 * n,
            d: 0,
            j: 0,
        }
    }

    fn sample(&self, rng: &mut RngStream) -> Sample {
        self.sampler.draw(rng)
    }

    fn inner_g(&self, x: &[f64], zeta: &[f64]) -> Vec<f64> {
        let b: Vec<f64> = (0..self.inst.queues())
            .map(|i| rate(self.inst.bandwidths[i], x[i], zeta[i]))
            .collect();
        let sq: Vec<f64> = b.iter().map(|v| v * v).collect();
        [b, sq].concat()
    }

    fn inner_g_jacobian(&self, x: &[f64], zeta: &[f64]) -> Matrix {
        let n = self.inst.queues();
        let mut j = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            let bw = self.inst.bandwidths[i];
            let b = rate(bw, x[i], zeta[i]);
            let db = rate_dp(bw, x[i], zeta[i]);
            j.set(i, i, db);
            j.set(i, n + i, 2.0 * b * db);
        }
        j
    }

    fn inner_h(&self, _: &[f64], _: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    fn inner_h_jacobian(&self, _: &[f64], _: &[f64]) -> Matrix {
        Matrix::zeros(self.inst.queues(), 0)
    }

    fn outer_f(&self, y: &[f64]) -> f64 {
        let n = self.inst.queues();
        (0..n).map(|i| self.term(i, y[i], y[n + i]).value).sum()
    }

    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64> {
        let n = self.inst.queues();
        let mut g = vec![0.0; 2 * n];
        for i in 0..n {
            let t = self.term(i, y[i], y[n + i]);
            g[i] = t.du;
            g[n + i] = t.dv;
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
        "gg1-effective-capacity".into()
    }

    fn exact_expectations(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.inst.queues();
        let mut y = vec![0.0; 2 * n];
        for i in 0..n {
            let bw = self.inst.bandwidths[i];
            y[i] = self.rules[i].integrate(|z| rate(bw, x[i], z));
            y[n + i] = self.rules[i].integrate(|z| rate(bw, x[i], z).powi(2));
        }
        Some((y, Vec::new()))
    }

    fn outer_f_kink_distance(&self, y: &[f64]) -> f64 {
        let n = self.inst.queues();
        let eps = self.inst.den_eps;
        (0..n)
            .map(|i| {
                let s2 = self.inst.arrival_variances[i];
                let s = (s2 + y[n + i] - y[i] * y[i]) / s2;
                let (_, alpha) = self.exponent_and_capacity(i, y[i], y[n + i]);
                (s - eps).abs().min((alpha - eps).abs())
            })
            .fold(f64::INFINITY, f64::min)
    }
}

impl ReportsConstants for EffectiveCapacity {
    /// `C_g = (1 + 4B²) B² (P^max)²`, `V_g = (1 + 4B²) B² (P^max)⁴` with
    /// `B = max_i B_i`; outer constants estimated numerically.
    fn constant_report(&self) -> Result<ConstantReport> {
        let inst = &self.inst;
        let b = inst.bandwidths.iter().cloned().fold(0.0, f64::max);
        let base = (1.0 + 4.0 * b * b) * b * b;
        let (c_f, l_f) = numeric_outer_constants_over_designs(self)?;
        Ok(ConstantReport {
            c_f,
            l_f,
            c_g: base * inst.p_max.powi(2),
            v_g: base * inst.p_max.powi(4),
            c_h: 0.0,
            v_h: 0.0,
            c_q: 0.0,
            l_q: 0.0,
            d_x: self.set.squared_diameter(),
            outer_numeric: true,
        })
    }
}
