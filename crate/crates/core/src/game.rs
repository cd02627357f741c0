//! The Alice-Bob-Alice game: sampling, reward accounting, Monte-Carlo
//! deviation gains, best responses, mechanism payoffs and the reduction of
//! multi-expert schedules to Alice-Bob-Alice subgames.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beliefs::{posterior_pair, posterior_single, SignalModel};
use crate::discounting::DiscountSchedule;
use crate::error::{Error, Result};
use crate::optimize::{log_space, scan_and_refine};
use crate::rng::{mean_and_std_error, stream};
use crate::scoring::{divergence_closed, divergence_curvature, score, NormalBelief, ScoringRule};
use crate::truthfulness::mean_sensitivities;

/// Counters of the prior and the three predictions.
pub const ABA_SLOTS: [u64; 4] = [0, 1, 2, 3];

/// Discount weights attached to the prior and the three predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotWeights {
    pub prior: f64,
    pub alice_first: f64,
    pub bob: f64,
    pub alice_second: f64,
}

impl SlotWeights {
    pub const UNIT: Self = Self { prior: 1.0, alice_first: 1.0, bob: 1.0, alice_second: 1.0 };

    pub fn from_schedule(schedule: &DiscountSchedule, slots: [u64; 4]) -> Self {
        Self {
            prior: schedule.eval(slots[0]),
            alice_first: schedule.eval(slots[1]),
            bob: schedule.eval(slots[2]),
            alice_second: schedule.eval(slots[3]),
        }
    }

    /// Unit weights except `alice_first / bob = ratio`. Ratios below one are
    /// not representable by a decreasing schedule but are useful as probes.
    pub fn with_ratio(ratio: f64) -> Self {
        Self { prior: ratio, alice_first: ratio, ..Self::UNIT }
    }
}

/// One joint draw of the outcome and both signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub lambda: f64,
    pub a0: f64,
    pub b0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub pi_a: f64,
    pub pi_b: f64,
    /// `pi_a + pi_b` minus the discounted telescoped total.
    pub zero_sum_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameRollout {
    /// Sampled outcome; also the revealed `x`.
    pub lambda: f64,
    pub a0: f64,
    pub b0: f64,
    pub deviation_c: f64,
    pub rewards: RewardBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl GainEstimate {
    /// Mean exceeds `sigmas` standard errors above zero.
    pub fn significantly_positive(&self, sigmas: f64) -> bool {
        self.mean > sigmas * self.std_error
    }

    pub fn significantly_negative(&self, sigmas: f64) -> bool {
        self.mean < -sigmas * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub c_star: f64,
    pub gain: f64,
    /// The optimum sits on the search bound; the true optimum may lie beyond.
    pub at_bound: bool,
}

/// Alice-Bob-Alice game under a fixed model, rule and slot weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbaGame {
    pub model: SignalModel,
    pub rule: ScoringRule,
    pub weights: SlotWeights,
    /// Constant subtracted from every score.
    #[serde(default)]
    pub shift: f64,
}

/// Relative size below which an analytic gain coefficient counts as zero.
const GAIN_TIE_TOL: f64 = 1e-12;

impl AbaGame {
    pub fn new(model: SignalModel, rule: ScoringRule, schedule: &DiscountSchedule) -> Result<Self> {
        schedule.validate()?;
        Self::with_weights(model, rule, SlotWeights::from_schedule(schedule, ABA_SLOTS))
    }

    pub fn with_weights(model: SignalModel, rule: ScoringRule, weights: SlotWeights) -> Result<Self> {
        model.validate()?;
        let w = [weights.prior, weights.alice_first, weights.bob, weights.alice_second];
        if w.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(Error::InvalidParameter("slot weights must be finite and non-negative".into()));
        }
        Ok(Self { model, rule, weights, shift: 0.0 })
    }

    /// Draw `index` of the stream keyed by `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Result<Draw> {
        let m = &self.model;
        if m.tau_c <= 0.0 {
            return Err(Error::InvalidParameter(
                "sampling requires a proper prior (tau_c > 0)".into(),
            ));
        }
        let mut rng = stream(seed, index);
        let z: [f64; 3] = [0, 1, 2].map(|_| rng.sample(StandardNormal));
        let lambda = m.c0 + z[0] / m.tau_c.sqrt();
        let a0 = lambda + z[1] / m.tau_a.sqrt();
        let mix = m.rho * z[1] + (1.0 - m.rho * m.rho).max(0.0).sqrt() * z[2];
        let b0 = lambda + mix / m.tau_b.sqrt();
        Ok(Draw { lambda, a0, b0 })
    }

    /// Plays the game on `draw` with Alice's first report built from `a0 + c`.
    pub fn play(&self, draw: &Draw, c: f64) -> Result<GameRollout> {
        let m = &self.model;
        let prior = m.prior().ok_or_else(|| {
            Error::InvalidParameter("reward accounting requires a proper prior (tau_c > 0)".into())
        })?;
        let g_hat = posterior_single(m, draw.a0 + c);
        let h_hat = posterior_pair(m, draw.a0 + c, draw.b0)?;
        let h = posterior_pair(m, draw.a0, draw.b0)?;
        let x = draw.lambda;
        let s = |p: &NormalBelief| score(self.rule, p, x) - self.shift;
        let w = &self.weights;
        let (s_pi, s_g_hat, s_h_hat, s_h) = (s(&prior), s(&g_hat), s(&h_hat), s(&h));
        let pi_a = (w.alice_first * s_g_hat - w.prior * s_pi) + (w.alice_second * s_h - w.bob * s_h_hat);
        let pi_b = w.bob * s_h_hat - w.alice_first * s_g_hat;
        let total = w.alice_second * s_h - w.prior * s_pi;
        Ok(GameRollout {
            lambda: draw.lambda,
            a0: draw.a0,
            b0: draw.b0,
            deviation_c: c,
            rewards: RewardBreakdown { pi_a, pi_b, zero_sum_residual: pi_a + pi_b - total },
        })
    }

    pub fn rollout(&self, c: f64, seed: u64, index: u64) -> Result<GameRollout> {
        self.play(&self.sample(seed, index)?, c)
    }

    /// Paired Monte-Carlo estimate of `E[Π_A(c)] - E[Π_A(0)]` over draws
    /// `0..n` of `seed`.
    pub fn deviation_gain(&self, c: f64, n: usize, seed: u64) -> Result<GainEstimate> {
        if n < 2 {
            return Err(Error::InvalidParameter("at least two samples are required".into()));
        }
        let diffs = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let d = self.sample(seed, i)?;
                Ok(self.play(&d, c)?.rewards.pi_a - self.play(&d, 0.0)?.rewards.pi_a)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, std_error) = mean_and_std_error(&diffs);
        Ok(GainEstimate { mean, std_error })
    }

    /// Alice's expected gain from deviating by `c`:
    /// `k(t₁)·D_g(c) - k(t₂)·D_h(c)` with `D` the divergences of her and
    /// Bob's distorted reports.
    pub fn analytic_gain(&self, c: f64) -> Result<f64> {
        self.model.require_nondegenerate()?;
        let (wg, wh) = mean_sensitivities(&self.model);
        let w = &self.weights;
        Ok(w.alice_first * divergence_closed(self.rule, self.model.single_precision(), wg * c)
            - w.bob * divergence_closed(self.rule, self.model.pair_precision(), wh * c))
    }

    /// Curvature scale of the two gain terms, used to recognise ties.
    fn gain_scale(&self) -> f64 {
        let (wg, wh) = mean_sensitivities(&self.model);
        self.weights.alice_first * (divergence_curvature(self.rule, self.model.single_precision()) * wg * wg).abs()
            + self.weights.bob * (divergence_curvature(self.rule, self.model.pair_precision()) * wh * wh).abs()
    }

    /// Maximizes [`Self::analytic_gain`] over `|c| ≤ bound`. The gain is even
    /// in `c`, so the non-negative representative is returned.
    pub fn best_response(&self, bound: f64) -> Result<BestResponse> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!("search bound must be positive, got {bound}")));
        }
        let scale = self.gain_scale();
        let interior = BestResponse { c_star: 0.0, gain: 0.0, at_bound: false };
        match self.rule {
            ScoringRule::Logarithmic => {
                // Exactly quadratic in c.
                let q = self.analytic_gain(1.0)?;
                if q <= GAIN_TIE_TOL * scale {
                    Ok(interior)
                } else {
                    Ok(BestResponse { c_star: bound, gain: q * bound * bound, at_bound: true })
                }
            }
            ScoringRule::Quadratic => {
                let gain = |c: f64| self.analytic_gain(c).unwrap_or(f64::NEG_INFINITY);
                let xs = log_space(1e-6 * bound, bound, 241);
                let (c, g) = scan_and_refine(gain, &xs);
                if g <= GAIN_TIE_TOL * scale * c * c {
                    Ok(interior)
                } else {
                    Ok(BestResponse { c_star: c, gain: g, at_bound: c >= bound * (1.0 - 1e-9) })
                }
            }
        }
    }

    /// Default search bound: ten standard deviations of Alice's signal.
    pub fn default_bound(&self) -> f64 {
        10.0 / self.model.tau_a.sqrt()
    }
}

/// A prediction slot in a forum: counter and expert id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub t: u64,
    pub expert: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForumSchedule {
    pub slots: Vec<Slot>,
    pub horizon: u64,
}

impl ForumSchedule {
    /// Experts predicting at counters `1, 2, …` in the given order.
    pub fn sequential<S: AsRef<str>>(experts: &[S]) -> Self {
        let slots: Vec<Slot> = experts
            .iter()
            .zip(1u64..)
            .map(|(e, t)| Slot { t, expert: e.as_ref().to_owned() })
            .collect();
        Self { horizon: slots.len() as u64, slots }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::InvalidParameter("a forum schedule needs at least one slot".into()));
        }
        if self.slots.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidParameter("slot times must be strictly increasing".into()));
        }
        if self.slots.last().is_some_and(|s| s.t > self.horizon) {
            return Err(Error::InvalidParameter("slot beyond the horizon".into()));
        }
        Ok(())
    }
}

/// An Alice-Bob-Alice subgame: `alice` predicts at two consecutive own
/// opportunities and the experts in between act jointly as Bob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgameDescriptor {
    pub alice: String,
    /// 1-based slot positions.
    pub first_slot: usize,
    pub second_slot: usize,
    pub first_t: u64,
    pub second_t: u64,
    /// Intermediate experts, deduplicated, in order of first appearance.
    pub bob: Vec<String>,
}

/// One descriptor per pair of consecutive opportunities of the same expert,
/// ordered by the first slot of the pair.
pub fn reduce_schedule(schedule: &ForumSchedule) -> Vec<SubgameDescriptor> {
    let slots = &schedule.slots;
    let mut last_seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (j, slot) in slots.iter().enumerate() {
        if let Some(&i) = last_seen.get(slot.expert.as_str()) {
            let mut bob: Vec<String> = Vec::new();
            for s in &slots[i + 1..j] {
                if !bob.contains(&s.expert) {
                    bob.push(s.expert.clone());
                }
            }
            out.push(SubgameDescriptor {
                alice: slot.expert.clone(),
                first_slot: i + 1,
                second_slot: j + 1,
                first_t: slots[i].t,
                second_t: slot.t,
                bob,
            });
        }
        last_seen.insert(&slot.expert, j);
    }
    out.sort_by_key(|d| d.first_slot);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    DiscountedMsr,
    Group,
    Single,
}

/// A prediction already scored against the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    pub expert: String,
    pub t: u64,
    /// Undiscounted `S(p, x)`.
    pub score: f64,
}

/// Scores a sequence of `(expert, counter, belief)` predictions at `x`.
pub fn score_predictions(
    rule: ScoringRule,
    predictions: &[(String, u64, NormalBelief)],
    x: f64,
) -> Vec<ScoredPrediction> {
    predictions
        .iter()
        .map(|(e, t, p)| ScoredPrediction { expert: e.clone(), t: *t, score: score(rule, p, x) })
        .collect()
}

/// Per-expert payoffs. The prior sits at counter 0 with score `prior_score`;
/// prediction counters must be positive and strictly increasing.
pub fn run_mechanism(
    mechanism: Mechanism,
    prior_score: f64,
    predictions: &[ScoredPrediction],
    schedule: &DiscountSchedule,
) -> Result<BTreeMap<String, f64>> {
    let last = predictions.last().ok_or(Error::EmptyPredictions)?;
    let mut prev_t = 0;
    for p in predictions {
        if p.t <= prev_t {
            return Err(Error::InvalidParameter(format!(
                "prediction counters must be positive and increasing (got {} after {prev_t})",
                p.t
            )));
        }
        prev_t = p.t;
    }
    let mut out = BTreeMap::new();
    match mechanism {
        Mechanism::Group => {
            for p in predictions {
                out.insert(p.expert.clone(), last.score);
            }
        }
        Mechanism::Single => {
            let mut prev = prior_score;
            for p in predictions {
                let inc = p.score - prev;
                out.entry(p.expert.clone())
                    .and_modify(|v: &mut f64| *v = v.min(inc))
                    .or_insert(inc);
                prev = p.score;
            }
        }
        Mechanism::DiscountedMsr => {
            let mut prev = schedule.eval(0) * prior_score;
            for p in predictions {
                let cur = schedule.eval(p.t) * p.score;
                *out.entry(p.expert.clone()).or_insert(0.0) += cur - prev;
                prev = cur;
            }
        }
    }
    Ok(out)
}

impl AbaGame {
    /// The three ABA predictions on `draw` with Alice's first report shifted
    /// by `c`, labelled `alice`, `bob`, `alice` at counters 1, 2, 3.
    pub fn predictions(&self, draw: &Draw, c: f64) -> Result<Vec<(String, u64, NormalBelief)>> {
        let m = &self.model;
        Ok(vec![
            ("alice".to_owned(), 1, posterior_single(m, draw.a0 + c)),
            ("bob".to_owned(), 2, posterior_pair(m, draw.a0 + c, draw.b0)?),
            ("alice".to_owned(), 3, posterior_pair(m, draw.a0, draw.b0)?),
        ])
    }
}
