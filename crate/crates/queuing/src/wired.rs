//! Parallel M/G/1 queues on wired links.
//!
//! The router splits traffic `λ` over `N` links of capacity `C_i`; packet
//! lengths `L_i` are truncated exponentials. With `g = (λ_i L_i; λ_i L_i²)`
//! the Pollaczek–Khinchin delay of queue `i` is
//! `y_{N+i} / (2 C_i (C_i - y_i))`, and the problem is
//!
//! ```text
//! min  Σ [φ̄_i delay_i - ψ̄_i log y_i]   s.t.  max_i delay_i <= D^max
//! ```
//!
//! over `λ^min <= λ_i <= λ^max_i`, `Σ λ_i <= λ^lim`.

use serde::{Deserialize, Serialize};

use cscgd_core::quadrature::expectation;
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
pub struct Mg1WiredInstance {
    pub capacities: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: Vec<f64>,
    pub lambda_lim: f64,
    pub d_max: f64,
    /// Mean of the untruncated exponential packet length.
    pub mean_lengths: Vec<f64>,
    /// Truncation point of the packet length.
    pub max_lengths: Vec<f64>,
    #[serde(default)]
    pub weights: UtilityWeights,
    /// Load margin `ε` in `λ^max_i L^max_i <= ε C_i`; also enters the
    /// reported constants.
    pub load_margin: f64,
    /// Reject instances whose peak load `λ^max_i L^max_i / C_i` exceeds
    /// the load margin.
    #[serde(default)]
    pub enforce_peak_load: bool,
    #[serde(default = "default_den_eps")]
    pub den_eps: f64,
}

impl Mg1WiredInstance {
    pub fn queues(&self) -> usize {
        self.capacities.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.queues();
        let bad = |m: String| Err(Error::Config(m));
        if n == 0 {
            return bad("at least one queue required".into());
        }
        for (name, v) in [
            ("lambda_max", &self.lambda_max),
            ("mean_lengths", &self.mean_lengths),
            ("max_lengths", &self.max_lengths),
        ] {
            if v.len() != n {
                return bad(format!("{name} has {} entries, expected {n}", v.len()));
            }
        }
        self.weights.validate(n)?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !self.capacities.iter().chain(&self.mean_lengths).chain(&self.max_lengths).all(|&v| positive(v)) {
            return bad("capacities and packet lengths must be positive".into());
        }
        if !(positive(self.lambda_min) && positive(self.d_max) && positive(self.den_eps)) {
            return bad("lambda_min, d_max and den_eps must be positive".into());
        }
        if !(self.load_margin > 0.0 && self.load_margin < 1.0) {
            return bad(format!("load margin must lie in (0, 1), got {}", self.load_margin));
        }
        if self.enforce_peak_load {
            for i in 0..n {
                let peak = self.lambda_max[i] * self.max_lengths[i];
                if peak > self.load_margin * self.capacities[i] {
                    return bad(format!(
                        "queue {i}: peak load {peak} exceeds {} x capacity {}",
                        self.load_margin, self.capacities[i]
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn length_distribution(&self, i: usize) -> Distribution {
        Distribution::TruncatedExponential {
            mean: self.mean_lengths[i],
            lower: 0.0,
            upper: Some(self.max_lengths[i]),
        }
    }

    pub fn build(&self) -> Result<Mg1Wired> {
        self.validate()?;
        let n = self.queues();
        let set = FeasibleSet::box_with_sum_cap(
            vec![self.lambda_min; n],
            self.lambda_max.clone(),
            self.lambda_lim,
        )?;
        let sampler = ProductDistribution::new((0..n).map(|i| self.length_distribution(i)).collect())?;
        let moments = LengthMoments::compute(self)?;
        Ok(Mg1Wired {
            inst: self.clone(),
            set,
            sampler,
            moments,
        })
    }
}

/// `E L_i^k` for `k = 1, 2, 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthMoments {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub fourth: Vec<f64>,
}

impl LengthMoments {
    fn compute(inst: &Mg1WiredInstance) -> Result<Self> {
        let mut m = Self {
            first: Vec::new(),
            second: Vec::new(),
            fourth: Vec::new(),
        };
        for i in 0..inst.queues() {
            let d = inst.length_distribution(i);
            m.first.push(expectation(&d, |x| x, 1e-13)?);
            m.second.push(expectation(&d, |x| x * x, 1e-13)?);
            m.fourth.push(expectation(&d, |x| x.powi(4), 1e-13)?);
        }
        Ok(m)
    }
}

pub struct Mg1Wired {
    inst: Mg1WiredInstance,
    set: FeasibleSet,
    sampler: ProductDistribution,
    moments: LengthMoments,
}

impl Mg1Wired {
    pub fn instance(&self) -> &Mg1WiredInstance {
        &self.inst
    }

    pub fn moments(&self) -> &LengthMoments {
        &self.moments
    }

    /// Safeguarded delay `b / (2 C (C - a))` and its partials in `(a, b)`.
    fn delay(&self, i: usize, a: f64, b: f64) -> (f64, f64, f64) {
        let c = self.inst.capacities[i];
        let scale = 1.0 / (2.0 * c * c);
        let (inv, dinv) = safe_inverse(1.0 - a / c, self.inst.den_eps);
        (b * scale * inv, -b * scale * dinv / c, scale * inv)
    }

    /// Per-queue PK delays at tracked moments `z`.
    pub fn delays(&self, z: &[f64]) -> Vec<f64> {
        let n = self.inst.queues();
        (0..n).map(|i| self.delay(i, z[i], z[n + i]).0).collect()
    }

    fn argmax_first(v: &[f64]) -> usize {
        let mut best = 0;
        for (k, x) in v.iter().enumerate() {
            if *x > v[best] {
                best = k;
            }
        }
        best
    }
}

impl CompositionalProblem for Mg1Wired {
    fn dims(&self) -> Dims {
        let n = self.inst.queues();
        Dims {
            n,
            m: 2 * n,
            d: 2 * n,
            j: 1,
        }
    }

    fn sample(&self, rng: &mut RngStream) -> Sample {
        self.sampler.draw(rng)
    }

    fn inner_g(&self, x: &[f64], l: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(l)
            .map(|(lam, li)| lam * li)
            .chain(x.iter().zip(l).map(|(lam, li)| lam * li * li))
            .collect()
    }

    fn inner_g_jacobian(&self, _: &[f64], l: &[f64]) -> Matrix {
        let n = self.inst.queues();
        let mut j = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            j.set(i, i, l[i]);
            j.set(i, n + i, l[i] * l[i]);
        }
        j
    }

    fn inner_h(&self, x: &[f64], l: &[f64]) -> Vec<f64> {
        self.inner_g(x, l)
    }

    fn inner_h_jacobian(&self, x: &[f64], l: &[f64]) -> Matrix {
        self.inner_g_jacobian(x, l)
    }

    fn outer_f(&self, y: &[f64]) -> f64 {
        let n = self.inst.queues();
        let w = &self.inst.weights;
        (0..n)
            .map(|i| {
                let (d, _, _) = self.delay(i, y[i], y[n + i]);
                w.phi[i] * d - w.psi[i] * safe_log(y[i], self.inst.den_eps).0
            })
            .sum()
    }

    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64> {
        let n = self.inst.queues();
        let w = &self.inst.weights;
        let mut g = vec![0.0; 2 * n];
        for i in 0..n {
            let (_, da, db) = self.delay(i, y[i], y[n + i]);
            g[i] = w.phi[i] * da - w.psi[i] * safe_log(y[i], self.inst.den_eps).1;
            g[n + i] = w.phi[i] * db;
        }
        g
    }

    fn outer_q(&self, z: &[f64]) -> Vec<f64> {
        let d = self.delays(z);
        vec![d[Self::argmax_first(&d)] - self.inst.d_max]
    }

    fn outer_q_jacobian(&self, z: &[f64]) -> Matrix {
        let n = self.inst.queues();
        let k = Self::argmax_first(&self.delays(z));
        let (_, da, db) = self.delay(k, z[k], z[n + k]);
        let mut j = Matrix::zeros(2 * n, 1);
        j.set(k, 0, da);
        j.set(n + k, 0, db);
        j
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn name(&self) -> String {
        "mg1-wired".into()
    }

    fn exact_expectations(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let m = &self.moments;
        let y: Vec<f64> = x
            .iter()
            .zip(&m.first)
            .map(|(lam, e)| lam * e)
            .chain(x.iter().zip(&m.second).map(|(lam, e)| lam * e))
            .collect();
        Some((y.clone(), y))
    }

    fn outer_f_kink_distance(&self, y: &[f64]) -> f64 {
        let n = self.inst.queues();
        let eps = self.inst.den_eps;
        (0..n)
            .map(|i| {
                let c = self.inst.capacities[i];
                (c * (1.0 - eps) - y[i]).abs().min((y[i] - eps).abs())
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn outer_q_kink_distance(&self, z: &[f64]) -> f64 {
        // Distance to the switching surface of the max, to first order,
        // plus the denominator knees.
        let n = self.inst.queues();
        let parts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let (d, da, db) = self.delay(i, z[i], z[n + i]);
                (d, (da * da + db * db).sqrt())
            })
            .collect();
        let k = Self::argmax_first(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
        let mut dist = f64::INFINITY;
        for (i, p) in parts.iter().enumerate() {
            if i != k {
                let slope = parts[k].1 + p.1;
                dist = dist.min((parts[k].0 - p.0) / slope.max(f64::MIN_POSITIVE));
            }
        }
        let eps = self.inst.den_eps;
        for i in 0..n {
            let c = self.inst.capacities[i];
            dist = dist.min((c * (1.0 - eps) - z[i]).abs());
        }
        dist
    }
}

impl ReportsConstants for Mg1Wired {
    /// `C_g = V_g = C_h = V_h = Σ λ^max_i (E L_i² + E L_i⁴)`, the outer
    /// bounds in terms of the load margin `ε`, and for the delay
    /// constraint the gradient and Hessian bounds of one PK delay term on
    /// `{a <= ε C, b <= ε C L^max}`.
    fn constant_report(&self) -> Result<ConstantReport> {
        let inst = &self.inst;
        let n = inst.queues();
        let eps = inst.load_margin;
        let w = &inst.weights;
        let m = &self.moments;
        let c_g: f64 = (0..n)
            .map(|i| inst.lambda_max[i] * (m.second[i] + m.fourth[i]))
            .sum();
        let c_f: f64 = (0..n)
            .map(|i| {
                let c = inst.capacities[i];
                let lmax = inst.max_lengths[i];
                let a = w.phi[i] * (1.0 - eps + eps * lmax) / (4.0 * c * (1.0 - eps).powi(2));
                let b = w.psi[i] / inst.lambda_min;
                a * a + b * b
            })
            .sum();
        let l_f = (0..n)
            .map(|i| {
                let c = inst.capacities[i];
                let lmax = inst.max_lengths[i];
                let first = w.phi[i] * (1.0 - eps + eps * lmax) / (c.powi(3) * (1.0 - eps).powi(3))
                    + w.phi[i] * (eps * c * lmax - 1.0) / (2.0 * c.powi(3) * (1.0 - eps).powi(2))
                    + 2.0 * w.psi[i] / (inst.lambda_min * inst.lambda_min);
                let second = w.phi[i] / (4.0 * c * c * (1.0 - eps));
                first.max(second)
            })
            .fold(0.0, f64::max);
        let (mut c_q, mut l_q) = (0.0f64, 0.0f64);
        for i in 0..n {
            let c = inst.capacities[i];
            let lmax = inst.max_lengths[i];
            let da = eps * lmax / (2.0 * (1.0 - eps).powi(2) * c * c);
            let db = 1.0 / (2.0 * c * c * (1.0 - eps));
            c_q = c_q.max(da * da + db * db);
            let haa = eps * lmax / ((1.0 - eps).powi(3) * c.powi(3));
            let hab = 1.0 / (2.0 * (1.0 - eps).powi(2) * c.powi(3));
            l_q = l_q.max((haa * haa + 2.0 * hab * hab).sqrt());
        }
        Ok(ConstantReport {
            c_f,
            l_f,
            c_g,
            v_g: c_g,
            c_h: c_g,
            v_h: c_g,
            c_q,
            l_q,
            d_x: self.set.squared_diameter(),
            outer_numeric: false,
        })
    }
}
