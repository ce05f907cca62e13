//! Step-size schedules `alpha_t = t^-a`, `beta_t = t^-b`, `delta_t = t^-c`
//! (diminishing) or the same powers of the horizon `T` (constant).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Diminishing,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct StepSchedule {
    a: f64,
    b: f64,
    c: f64,
    regime: Regime,
    horizon: usize,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    a: f64,
    b: f64,
    c: f64,
    regime: Regime,
    horizon: usize,
}

impl TryFrom<RawSchedule> for StepSchedule {
    type Error = Error;
    fn try_from(r: RawSchedule) -> Result<Self> {
        StepSchedule::new(r.a, r.b, r.c, r.regime, r.horizon)
    }
}

impl From<StepSchedule> for RawSchedule {
    fn from(s: StepSchedule) -> Self {
        RawSchedule {
            a: s.a,
            b: s.b,
            c: s.c,
            regime: s.regime,
            horizon: s.horizon,
        }
    }
}

impl StepSchedule {
    /// Requires `1 > a >= c >= b > 0` and a positive horizon.
    pub fn new(a: f64, b: f64, c: f64, regime: Regime, horizon: usize) -> Result<Self> {
        if !(a < 1.0 && a >= c && c >= b && b > 0.0) {
            return Err(Error::Config(format!(
                "step exponents must satisfy 1 > a >= c >= b > 0, got a = {a}, b = {b}, c = {c}"
            )));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        Ok(Self {
            a,
            b,
            c,
            regime,
            horizon,
        })
    }

    pub fn exponents(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(self.a, self.b, self.c, self.regime, horizon)
    }

    /// Step sizes at iteration `t` (1-based).
    pub fn step_sizes(&self, t: usize) -> Result<StepSizes> {
        if t == 0 || t > self.horizon {
            return Err(Error::Config(format!(
                "iteration {t} outside 1..={}",
                self.horizon
            )));
        }
        let base = match self.regime {
            Regime::Diminishing => t as f64,
            Regime::Constant => self.horizon as f64,
        };
        Ok(StepSizes {
            alpha: base.powf(-self.a),
            beta: base.powf(-self.b),
            delta: base.powf(-self.c),
        })
    }
}
