//! Discount schedules `k(t)` over a prediction counter, minimal discount
//! ratios that make Alice's first prediction truthful, and the
//! market-maker loss bound.

use serde::{Deserialize, Serialize};

use crate::beliefs::SignalModel;
use crate::error::{Error, Result};
use crate::optimize::{golden_section_max, log_space};
use crate::scoring::{
    divergence_closed, divergence_curvature, divergence_limit, self_expected_score, NormalBelief,
    ScoringRule,
};
use crate::truthfulness::mean_sensitivities;

/// Default cap on the number of resets a schedule may carry.
pub const DEFAULT_MAX_RESETS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    GeometricByCount,
    Piecewise,
}

/// Multiplier applied from `offset` counters after the start of an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub offset: u64,
    pub factor: f64,
}

/// Restart of the schedule at `counter` with value `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reset {
    pub counter: u64,
    pub k: f64,
}

/// A weakly decreasing discount `k(t)` with a bounded number of resets.
///
/// Within an epoch starting at counter `s` with value `k_s`:
/// constant gives `k_s`; geometric gives `k_s·decay^(t-s)`; piecewise gives
/// `k_s` times the factor of the last step with `offset ≤ t-s` (1 before the
/// first step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountSchedule {
    pub kind: ScheduleKind,
    pub k0: f64,
    #[serde(default = "one")]
    pub decay: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<Step>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resets: Vec<Reset>,
    #[serde(default = "default_max_resets")]
    pub max_resets: usize,
}

fn one() -> f64 {
    1.0
}

fn default_max_resets() -> usize {
    DEFAULT_MAX_RESETS
}

impl Default for DiscountSchedule {
    fn default() -> Self {
        Self::constant(1.0)
    }
}

impl DiscountSchedule {
    pub fn constant(k0: f64) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            k0,
            decay: 1.0,
            steps: Vec::new(),
            resets: Vec::new(),
            max_resets: DEFAULT_MAX_RESETS,
        }
    }

    pub fn geometric(k0: f64, decay: f64) -> Self {
        Self { kind: ScheduleKind::GeometricByCount, decay, ..Self::constant(k0) }
    }

    pub fn piecewise(k0: f64, steps: Vec<Step>) -> Self {
        Self { kind: ScheduleKind::Piecewise, steps, ..Self::constant(k0) }
    }

    /// `k = ratio` through counter `switch - 1`, then `k = 1`. Requires `ratio ≥ 1`.
    pub fn two_level(ratio: f64, switch: u64) -> Self {
        Self::piecewise(ratio, vec![Step { offset: switch, factor: ratio.recip() }])
    }

    pub fn with_resets(mut self, resets: Vec<Reset>) -> Self {
        self.resets = resets;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.k0) {
            return Err(Error::InvalidParameter(format!("k0 must be positive, got {}", self.k0)));
        }
        if self.kind == ScheduleKind::GeometricByCount && !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::InvalidParameter(format!("decay must lie in (0, 1], got {}", self.decay)));
        }
        if self.kind == ScheduleKind::Piecewise {
            let mut prev = (0u64, 1.0f64);
            for (i, s) in self.steps.iter().enumerate() {
                if !(s.factor > 0.0 && s.factor <= prev.1) {
                    return Err(Error::InvalidParameter(format!(
                        "step {i}: factor {} must lie in (0, {}]",
                        s.factor, prev.1
                    )));
                }
                if i > 0 && s.offset <= prev.0 {
                    return Err(Error::InvalidParameter(format!("step {i}: offsets must increase")));
                }
                prev = (s.offset, s.factor);
            }
        }
        if self.resets.len() > self.max_resets {
            return Err(Error::InvalidParameter(format!(
                "{} resets exceed the limit of {}",
                self.resets.len(),
                self.max_resets
            )));
        }
        let mut last = 0u64;
        for (i, r) in self.resets.iter().enumerate() {
            if !positive(r.k) {
                return Err(Error::InvalidParameter(format!("reset {i}: k must be positive")));
            }
            if r.counter <= last {
                return Err(Error::InvalidParameter(format!(
                    "reset {i}: counters must be positive and increasing"
                )));
            }
            last = r.counter;
        }
        Ok(())
    }

    /// Start counter and starting value of the epoch containing `t`.
    pub fn epoch(&self, t: u64) -> (u64, f64) {
        self.resets
            .iter()
            .take_while(|r| r.counter <= t)
            .last()
            .map_or((0, self.k0), |r| (r.counter, r.k))
    }

    /// Starting values of every epoch, in order.
    pub fn epoch_starts(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.k0).chain(self.resets.iter().map(|r| r.k))
    }

    pub fn eval(&self, t: u64) -> f64 {
        let (start, k) = self.epoch(t);
        let elapsed = t - start;
        match self.kind {
            ScheduleKind::Constant => k,
            ScheduleKind::GeometricByCount => {
                k * self.decay.powi(i32::try_from(elapsed).unwrap_or(i32::MAX))
            }
            ScheduleKind::Piecewise => {
                k * self
                    .steps
                    .iter()
                    .take_while(|s| s.offset <= elapsed)
                    .last()
                    .map_or(1.0, |s| s.factor)
            }
        }
    }
}

/// Smallest shift `A ≥ 0` with `S(p, x) - A ≤ 0` for every normal belief of
/// precision at most `max_precision`.
pub fn nonpositive_shift(rule: ScoringRule, max_precision: f64) -> f64 {
    max_score(rule, max_precision).max(0.0)
}

/// `sup_x S(p, x)` for a normal belief of the given precision, attained at
/// the mean.
pub fn max_score(rule: ScoringRule, precision: f64) -> f64 {
    use std::f64::consts::{PI, SQRT_2, TAU};
    match rule {
        ScoringRule::Logarithmic => 0.5 * (precision / TAU).ln(),
        ScoringRule::Quadratic => (precision / PI).sqrt() * (SQRT_2 - 0.5) - 1.0,
    }
}

/// Minimal `k(t₁)/k(t₂)` for the log rule, where `t₁` is Alice's first slot
/// and `t₂` Bob's. Values ≤ 1 mean no discount is needed.
pub fn required_ratio_log(model: &SignalModel) -> Result<f64> {
    model.validate()?;
    if model.is_degenerate() {
        return Err(Error::DiscountIneffective(format!(
            "no finite discount restores truthfulness at rho = {}",
            model.rho
        )));
    }
    let (ta, tb, tc, rho) = (model.tau_a, model.tau_b, model.tau_c, model.rho);
    let one_m = 1.0 - rho * rho;
    let s = (ta.sqrt() - rho * tb.sqrt()).powi(2);
    Ok((1.0 + tc / ta) / one_m * s / (s + one_m * (tb + tc)))
}

/// Search grid over the signal deviation `c` for [`required_ratio_numeric`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub c_min: f64,
    pub c_max: f64,
    pub points: usize,
    pub tol: f64,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self { c_min: 1e-6, c_max: 1e3, points: 181, tol: 1e-12 }
    }
}

/// Result of the numeric ratio search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSearch {
    /// Supremum of the ratio over the grid and both limits.
    pub ratio: f64,
    /// Deviation attaining the supremum; `None` when a limit attains it.
    pub at: Option<f64>,
    pub zero_limit: f64,
    pub tail_limit: f64,
}

/// The ratio `[S(h,h) - S(ĥ,h)] / [S(g,g) - S(ĝ,g)]` at deviation `c`.
pub fn deviation_ratio(rule: ScoringRule, model: &SignalModel, c: f64) -> f64 {
    let (wg, wh) = mean_sensitivities(model);
    divergence_closed(rule, model.pair_precision(), wh * c)
        / divergence_closed(rule, model.single_precision(), wg * c)
}

/// Numeric supremum over `c` of [`deviation_ratio`], including its limits
/// at 0 and infinity.
pub fn required_ratio_numeric(rule: ScoringRule, model: &SignalModel, grid: &SearchGrid) -> Result<RatioSearch> {
    model.validate()?;
    if model.is_degenerate() {
        return Err(Error::DiscountIneffective(format!(
            "no finite discount restores truthfulness at rho = {}",
            model.rho
        )));
    }
    if !(grid.c_min > 0.0 && grid.c_max > 100.0 * grid.c_min && grid.points >= 3) {
        return Err(Error::InvalidParameter("search grid must span at least two decades".into()));
    }
    let (wg, wh) = mean_sensitivities(model);
    let (tg, th) = (model.single_precision(), model.pair_precision());
    let ratio = |c: f64| deviation_ratio(rule, model, c);
    let zero_limit = divergence_curvature(rule, th) * wh * wh / (divergence_curvature(rule, tg) * wg * wg);
    let (lim_h, lim_g) = (divergence_limit(rule, th), divergence_limit(rule, tg));
    let tail_limit = if lim_h.is_finite() && lim_g.is_finite() {
        if wh == 0.0 { 0.0 } else { lim_h / lim_g }
    } else {
        ratio(grid.c_max)
    };

    // Without a finite analytic tail, growth in each of the last two decades
    // is taken as divergence.
    if !(lim_h.is_finite() && lim_g.is_finite()) {
        let top = [grid.c_max / 100.0, grid.c_max / 10.0, grid.c_max].map(ratio);
        let grows = |a: f64, b: f64| b > a * (1.0 + 1e-6);
        if !top.iter().all(|v| v.is_finite()) || (grows(top[0], top[1]) && grows(top[1], top[2])) {
            return Err(Error::DiscountIneffective(format!(
                "ratio keeps growing over the last two decades of the search grid ({} to {})",
                top[0], top[2]
            )));
        }
    }

    let mags = log_space(grid.c_min, grid.c_max, grid.points);
    let mut best = (None, zero_limit.max(tail_limit));
    for sign in [1.0, -1.0] {
        let vals: Vec<f64> = mags.iter().map(|&m| ratio(sign * m)).collect();
        let i = (0..vals.len()).fold(0, |bi, i| if vals[i] > vals[bi] { i } else { bi });
        let lo = mags[i.saturating_sub(1)].ln();
        let hi = mags[(i + 1).min(mags.len() - 1)].ln();
        let (u, v) = golden_section_max(|u| ratio(sign * u.exp()), lo, hi, grid.tol);
        let (c, v) = if v >= vals[i] { (sign * u.exp(), v) } else { (sign * mags[i], vals[i]) };
        if v.is_nan() {
            return Err(Error::NumericFailure(format!("ratio is undefined at c = {c}")));
        }
        if v > best.1 {
            best = (Some(c), v);
        }
    }
    Ok(RatioSearch { ratio: best.1, at: best.0, zero_limit, tail_limit })
}

/// Bound on the market maker's expected loss: the sum over epochs of
/// `-k(epoch start)·S(π, π)`.
pub fn loss_bound(schedule: &DiscountSchedule, prior: &NormalBelief, rule: ScoringRule) -> f64 {
    loss_bound_shifted(schedule, prior, rule, 0.0)
}

/// [`loss_bound`] for the shifted rule `S - shift`.
pub fn loss_bound_shifted(schedule: &DiscountSchedule, prior: &NormalBelief, rule: ScoringRule, shift: f64) -> f64 {
    let s = self_expected_score(rule, prior.precision) - shift;
    schedule.epoch_starts().map(|k| -k * s).sum()
}
