//! Importance-sampling count estimates and weight diagnostics, computed in log space.
//!
//! Weights `w = 1/q(g)` are accumulated as `exp(log w - max)` with a running
//! maximum, rescaling the running moments whenever the maximum grows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Coefficient;

/// Tree-space resolution being counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    /// Ranked labeled trees.
    Kingman,
    /// Ranked tree shapes.
    Tajima,
    /// Unranked labeled trees.
    Labeled,
    /// Unranked tree shapes.
    Shape,
}

impl Resolution {
    pub const ALL: [Resolution; 4] = [Self::Kingman, Self::Tajima, Self::Labeled, Self::Shape];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Kingman => "kingman",
            Self::Tajima => "tajima",
            Self::Labeled => "labeled",
            Self::Shape => "shape",
        }
    }

    /// Whether draws come from the Kingman sampler (else the Tajima sampler).
    pub fn uses_kingman_draws(self) -> bool {
        matches!(self, Self::Kingman | Self::Labeled)
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown resolution {s:?}")))
    }
}

/// Importance log-weight of a draw at `resolution`, given the base proposal
/// `log q` and the ranking multiplicity of its projection (ignored for ranked
/// resolutions).
pub fn combine(resolution: Resolution, log_q: f64, coefficient: &Coefficient) -> f64 {
    match resolution {
        Resolution::Kingman | Resolution::Tajima => -log_q,
        Resolution::Labeled | Resolution::Shape => -(log_q + coefficient.ln()),
    }
}

/// Streaming moments of importance weights.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Accumulator {
    n: u64,
    /// Largest log-weight seen; all fields below are relative to `exp(max)`.
    max: f64,
    mean: f64,
    m2: f64,
    sum: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn rescale(&mut self, new_max: f64) {
        let s = (self.max - new_max).exp();
        self.mean *= s;
        self.m2 *= s * s;
        self.sum *= s;
        self.max = new_max;
    }

    /// Adds one draw with weight `exp(log_weight)`.
    pub fn accumulate(&mut self, log_weight: f64) -> Result<()> {
        if !log_weight.is_finite() {
            return Err(Error::Invalid(format!(
                "non-finite log-weight {log_weight}"
            )));
        }
        if self.n == 0 {
            *self = Self {
                n: 1,
                max: log_weight,
                mean: 1.0,
                m2: 0.0,
                sum: 1.0,
            };
            return Ok(());
        }
        if log_weight > self.max {
            self.rescale(log_weight);
        }
        let x = (log_weight - self.max).exp();
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        self.sum += x;
        Ok(())
    }

    /// Pools another accumulator into this one.
    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let mut other = *other;
        if other.max > self.max {
            self.rescale(other.max);
        } else {
            other.rescale(self.max);
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.sum += other.sum;
        self.n += other.n;
    }

    /// Natural log of the running mean weight.
    pub fn log_mean(&self) -> f64 {
        self.max + self.mean.ln()
    }

    /// Sample variance of the weights relative to `exp(2 max)`.
    fn shifted_variance(&self) -> f64 {
        self.m2.max(0.0) / (self.n - 1) as f64
    }

    /// Turns the moments into an estimate with diagnostics.
    pub fn finalize(&self, resolution: Resolution) -> Result<CountEstimate> {
        if self.n < 2 {
            return Err(Error::Invalid(format!(
                "at least 2 draws are needed for a variance, got {}",
                self.n
            )));
        }
        let n = self.n as f64;
        let var = self.shifted_variance();
        let cv2 = var / (self.mean * self.mean);
        let log_estimate = self.log_mean();
        let rel_se = (var / n).sqrt() / self.mean;
        Ok(CountEstimate {
            resolution,
            n_draws: self.n,
            estimate: format_scientific(log_estimate),
            log_estimate,
            log10_estimate: log_estimate / std::f64::consts::LN_10,
            std_error: rel_se * log_estimate.exp(),
            rse: rel_se,
            cv2,
            ess: n / (1.0 + cv2),
            q_n: 1.0 / self.sum,
        })
    }
}

/// A count estimate with its importance-sampling diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountEstimate {
    pub resolution: Resolution,
    pub n_draws: u64,
    /// Estimate in scientific notation with 6 significant digits.
    pub estimate: String,
    /// Natural log of the estimate.
    pub log_estimate: f64,
    pub log10_estimate: f64,
    pub std_error: f64,
    /// Relative standard error `std_error / estimate`.
    pub rse: f64,
    /// Squared coefficient of variation of the weights.
    pub cv2: f64,
    /// Effective sample size `N / (1 + cv2)`.
    pub ess: f64,
    /// Largest weight over the sum of weights.
    pub q_n: f64,
}

impl CountEstimate {
    /// Estimate as a float (infinite beyond the f64 range).
    pub fn value(&self) -> f64 {
        self.log_estimate.exp()
    }
}

/// `exp(ln_x)` as `d.ddddde±x`, without forming the value itself.
pub fn format_scientific(ln_x: f64) -> String {
    let l10 = ln_x / std::f64::consts::LN_10;
    let mut exponent = l10.floor();
    let mut mantissa = 10f64.powf(l10 - exponent);
    if format!("{mantissa:.5}").starts_with("10") {
        exponent += 1.0;
        mantissa /= 10.0;
    }
    format!("{mantissa:.5}e{exponent}")
}
