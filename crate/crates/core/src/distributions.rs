//! The random-variable families used by the queuing instances. Truncation
//! is by inverse-CDF restriction, so every draw consumes exactly one
//! uniform variate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

const INVERSION_TOL: f64 = 1e-12;
const INVERSION_MAX_ITER: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Exponential with the given mean.
    Exponential { mean: f64 },
    /// Exponential with base mean `mean`, restricted to `[lower, upper]`.
    /// `upper = None` leaves the right tail untouched.
    TruncatedExponential {
        mean: f64,
        #[serde(default)]
        lower: f64,
        #[serde(default)]
        upper: Option<f64>,
    },
    /// Chi-squared with an even number of degrees of freedom, restricted to
    /// `[lower, inf)`.
    TruncatedChiSquared { dof: u32, lower: f64 },
    Constant { value: f64 },
    /// Equiprobable finite support.
    Empirical { support: Vec<f64> },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self {
            Distribution::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return bad(format!("exponential mean must be positive, got {mean}"));
                }
            }
            Distribution::TruncatedExponential { mean, lower, upper } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return bad(format!("exponential mean must be positive, got {mean}"));
                }
                if !(lower.is_finite() && *lower >= 0.0) {
                    return bad(format!("lower truncation must be >= 0, got {lower}"));
                }
                if let Some(u) = upper {
                    if !(u.is_finite() && u > lower) {
                        return bad(format!("upper truncation {u} must exceed lower {lower}"));
                    }
                }
            }
            Distribution::TruncatedChiSquared { dof, lower } => {
                if *dof == 0 || dof % 2 != 0 {
                    return bad(format!("degrees of freedom must be even and positive, got {dof}"));
                }
                if !(lower.is_finite() && *lower >= 0.0) {
                    return bad(format!("lower truncation must be >= 0, got {lower}"));
                }
            }
            Distribution::Constant { value } => {
                if !value.is_finite() {
                    return bad("constant must be finite".into());
                }
            }
            Distribution::Empirical { support } => {
                if support.is_empty() || !support.iter().all(|v| v.is_finite()) {
                    return bad("empirical support must be non-empty and finite".into());
                }
            }
        }
        Ok(())
    }

    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match self {
            Distribution::Exponential { mean } => -mean * rng.uniform_positive().ln(),
            Distribution::TruncatedExponential { mean, lower, upper } => {
                // Inverse CDF on [F(lower), F(upper)] written with survival
                // probabilities to avoid cancellation.
                let s_lo = (-lower / mean).exp();
                let s_hi = upper.map_or(0.0, |u| (-u / mean).exp());
                let u = rng.uniform();
                let s = s_lo - u * (s_lo - s_hi);
                let x = -mean * s.ln();
                match upper {
                    Some(up) => x.clamp(*lower, *up),
                    None => x.max(*lower),
                }
            }
            Distribution::TruncatedChiSquared { dof, lower } => {
                let k = dof / 2;
                let target = rng.uniform_positive() * chi2_even_sf(*lower, k);
                invert_chi2_sf(target, *lower, k)
            }
            Distribution::Constant { value } => *value,
            Distribution::Empirical { support } => support[rng.index(support.len())],
        }
    }

    /// Density (with respect to Lebesgue measure) of the continuous
    /// families. Returns `None` for atomic distributions.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        match self {
            Distribution::Exponential { mean } => Some(if x < 0.0 {
                0.0
            } else {
                (-x / mean).exp() / mean
            }),
            Distribution::TruncatedExponential { mean, lower, upper } => {
                let hi = upper.unwrap_or(f64::INFINITY);
                if x < *lower || x > hi {
                    return Some(0.0);
                }
                let mass = (-lower / mean).exp() - upper.map_or(0.0, |u| (-u / mean).exp());
                Some((-x / mean).exp() / mean / mass)
            }
            Distribution::TruncatedChiSquared { dof, lower } => {
                if x < *lower {
                    return Some(0.0);
                }
                let k = dof / 2;
                Some(chi2_even_pdf(x, k) / chi2_even_sf(*lower, k))
            }
            Distribution::Constant { .. } | Distribution::Empirical { .. } => None,
        }
    }

    /// `(lower, upper)` endpoints of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Distribution::Exponential { .. } => (0.0, f64::INFINITY),
            Distribution::TruncatedExponential { lower, upper, .. } => {
                (*lower, upper.unwrap_or(f64::INFINITY))
            }
            Distribution::TruncatedChiSquared { lower, .. } => (*lower, f64::INFINITY),
            Distribution::Constant { value } => (*value, *value),
            Distribution::Empirical { support } => (
                support.iter().cloned().fold(f64::INFINITY, f64::min),
                support.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }
}

/// Survival function of a chi-squared variable with `2k` degrees of
/// freedom: `exp(-x/2) * sum_{j<k} (x/2)^j / j!`.
pub fn chi2_even_sf(x: f64, k: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let h = 0.5 * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= h / j as f64;
        sum += term;
    }
    (-h).exp() * sum
}

/// Density of a chi-squared variable with `2k` degrees of freedom.
pub fn chi2_even_pdf(x: f64, k: u32) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return if k == 1 { 0.5 } else { 0.0 };
    }
    // x^(k-1) e^(-x/2) / (2^k (k-1)!)
    let h = 0.5 * x;
    let log_fact: f64 = (1..k).map(|j| (j as f64).ln()).sum();
    0.5 * ((k as f64 - 1.0) * h.ln() - h - log_fact).exp()
}

fn invert_chi2_sf(target: f64, lower: f64, k: u32) -> f64 {
    let mut lo = lower;
    let mut hi = lower.max(2.0 * k as f64).max(1.0);
    while chi2_even_sf(hi, k) > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return hi;
        }
    }
    for _ in 0..INVERSION_MAX_ITER {
        if hi - lo <= INVERSION_TOL * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if chi2_even_sf(mid, k) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Independent components, one scalar distribution per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductDistribution(pub Vec<Distribution>);

impl ProductDistribution {
    pub fn new(components: Vec<Distribution>) -> Result<Self> {
        components.iter().try_for_each(Distribution::validate)?;
        Ok(Self(components))
    }

    /// Deterministic vector, drawn without consuming randomness.
    pub fn constant(values: &[f64]) -> Self {
        Self(
            values
                .iter()
                .map(|&value| Distribution::Constant { value })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[Distribution] {
        &self.0
    }

    pub fn draw(&self, rng: &mut RngStream) -> Vec<f64> {
        self.0.iter().map(|d| d.draw(rng)).collect()
    }
}
