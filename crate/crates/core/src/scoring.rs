//! Proper scoring rules for one-dimensional normal beliefs.
//!
//! Beliefs are parameterized by mean and precision (inverse variance). For
//! pairs sharing a precision both rules have closed-form divergences:
//!
//! * logarithmic: `S(p̂, p) - S(p, p) = -τ/2 · Δμ²`
//! * quadratic:   `S(p̂, p) - S(p, p) = √(τ/π) · (exp(-τΔμ²/4) - 1)`
//!
//! Everything else goes through adaptive quadrature over ±10 standard
//! deviations of the integrating belief.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Half-width, in standard deviations, of every expectation integral.
pub const SPAN_SIGMAS: f64 = 10.0;

/// A normal belief `N(mean, 1/precision)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalBelief {
    pub mean: f64,
    pub precision: f64,
}

impl NormalBelief {
    pub fn new(mean: f64, precision: f64) -> Result<Self> {
        let b = Self { mean, precision };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(Error::InvalidParameter(format!("belief mean {} is not finite", self.mean)));
        }
        if !(self.precision.is_finite() && self.precision > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "belief precision {} must be positive and finite",
                self.precision
            )));
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        1.0 / self.precision
    }

    pub fn std_dev(&self) -> f64 {
        self.precision.sqrt().recip()
    }

    /// `(mean - k·σ, mean + k·σ)`.
    pub fn span(&self, sigmas: f64) -> (f64, f64) {
        let h = sigmas * self.std_dev();
        (self.mean - h, self.mean + h)
    }
}

/// Which proper scoring rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringRule {
    Logarithmic,
    Quadratic,
}

impl std::str::FromStr for ScoringRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "log" | "logarithmic" => Ok(Self::Logarithmic),
            "quadratic" | "brier" => Ok(Self::Quadratic),
            other => Err(Error::InvalidParameter(format!("unknown scoring rule '{other}'"))),
        }
    }
}

impl std::fmt::Display for ScoringRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Logarithmic => "logarithmic",
            Self::Quadratic => "quadratic",
        })
    }
}

pub fn density(belief: &NormalBelief, x: f64) -> f64 {
    let d = x - belief.mean;
    (belief.precision / (2.0 * PI)).sqrt() * (-0.5 * belief.precision * d * d).exp()
}

/// Natural log of the density, evaluated without underflow.
pub fn log_density(belief: &NormalBelief, x: f64) -> f64 {
    let d = x - belief.mean;
    0.5 * (belief.precision / (2.0 * PI)).ln() - 0.5 * belief.precision * d * d
}

/// `∫ p(y)² dy` for a normal belief.
pub fn selfdot(belief: &NormalBelief) -> f64 {
    0.5 * (belief.precision / PI).sqrt()
}

/// Realized score of prediction `p` at outcome `x`.
///
/// The logarithmic score is computed in log space, so it only reaches
/// negative infinity for non-finite `x`; it is never clamped.
pub fn score(rule: ScoringRule, p: &NormalBelief, x: f64) -> f64 {
    match rule {
        ScoringRule::Logarithmic => log_density(p, x),
        ScoringRule::Quadratic => 2.0 * density(p, x) - selfdot(p) - 1.0,
    }
}

/// `E_{x ~ truth}[score(rule, predicted, x)]`.
///
/// Closed form when the precisions coincide, quadrature otherwise.
pub fn expected_score(rule: ScoringRule, predicted: &NormalBelief, truth: &NormalBelief) -> Result<f64> {
    predicted.validate()?;
    truth.validate()?;
    if predicted.precision == truth.precision {
        Ok(self_expected_score(rule, truth.precision)
            + divergence_closed(rule, truth.precision, predicted.mean - truth.mean))
    } else {
        expected_score_numeric(rule, predicted, truth)
    }
}

/// Quadrature route for [`expected_score`], regardless of precisions.
pub fn expected_score_numeric(rule: ScoringRule, predicted: &NormalBelief, truth: &NormalBelief) -> Result<f64> {
    predicted.validate()?;
    truth.validate()?;
    let (a, b) = truth.span(SPAN_SIGMAS);
    quadrature::integrate(
        |x| density(truth, x) * score(rule, predicted, x),
        a,
        b,
        quadrature::DEFAULT_TOL,
    )
}

/// `S(p, p)` for a belief of the given precision.
pub fn self_expected_score(rule: ScoringRule, precision: f64) -> f64 {
    match rule {
        ScoringRule::Logarithmic => 0.5 * (precision / (2.0 * PI)).ln() - 0.5,
        ScoringRule::Quadratic => 0.5 * (precision / PI).sqrt() - 1.0,
    }
}

/// `S(predicted, truth) - S(truth, truth)`; non-positive, zero iff equal.
///
/// Equal precisions use the closed forms; otherwise the difference is
/// integrated directly.
pub fn divergence(rule: ScoringRule, predicted: &NormalBelief, truth: &NormalBelief) -> Result<f64> {
    predicted.validate()?;
    truth.validate()?;
    if predicted.precision == truth.precision {
        return Ok(divergence_closed(rule, truth.precision, predicted.mean - truth.mean));
    }
    divergence_numeric(rule, predicted, truth)
}

/// Quadrature route for [`divergence`].
pub fn divergence_numeric(rule: ScoringRule, predicted: &NormalBelief, truth: &NormalBelief) -> Result<f64> {
    let (a, b) = truth.span(SPAN_SIGMAS);
    let v = match rule {
        ScoringRule::Logarithmic => quadrature::integrate(
            |x| density(truth, x) * (log_density(predicted, x) - log_density(truth, x)),
            a,
            b,
            quadrature::DEFAULT_TOL,
        )?,
        ScoringRule::Quadratic => {
            let cross = quadrature::integrate(
                |x| 2.0 * density(truth, x) * (density(predicted, x) - density(truth, x)),
                a,
                b,
                quadrature::DEFAULT_TOL,
            )?;
            cross - (selfdot(predicted) - selfdot(truth))
        }
    };
    Ok(v)
}

/// Closed-form divergence for two beliefs sharing `precision` whose means
/// differ by `delta_mean`.
pub fn divergence_closed(rule: ScoringRule, precision: f64, delta_mean: f64) -> f64 {
    let d2 = delta_mean * delta_mean;
    match rule {
        ScoringRule::Logarithmic => -0.5 * precision * d2,
        ScoringRule::Quadratic => (precision / PI).sqrt() * (-0.25 * precision * d2).exp_m1(),
    }
}

/// `lim_{Δ→0} divergence_closed(rule, τ, Δ) / Δ²`.
pub fn divergence_curvature(rule: ScoringRule, precision: f64) -> f64 {
    match rule {
        ScoringRule::Logarithmic => -0.5 * precision,
        ScoringRule::Quadratic => -0.25 * precision * (precision / PI).sqrt(),
    }
}

/// `lim_{Δ→∞} divergence_closed(rule, τ, Δ)`; unbounded for the log rule.
pub fn divergence_limit(rule: ScoringRule, precision: f64) -> f64 {
    match rule {
        ScoringRule::Logarithmic => f64::NEG_INFINITY,
        ScoringRule::Quadratic => -(precision / PI).sqrt(),
    }
}
