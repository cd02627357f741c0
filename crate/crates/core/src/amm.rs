//! Automated market maker for the discounted logarithmic market scoring rule
//! over a binned continuous outcome.
//!
//! Shares `s_j` are held per bin and per unit outcome. With discount `k(t)`
//! and affine shift `A`, the potential is
//! `C(s, t) = k(t)·log Σ_j w_j·exp(s_j / k(t)) + k(t)·A`
//! and a trade from `(s, t)` to `(s', t')` costs `C(s', t') - C(s, t)`.
//! Moving the market from belief `p'` (set at `t`) to `p` at `t'` therefore
//! earns `k(t')·S(p, x) - k(t)·S(p', x)` at settlement, where `S` is the
//! shifted log score of the binned density.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::discounting::{loss_bound_shifted, DiscountSchedule};
use crate::error::{Error, Result};
use crate::rng::{mean_and_std_error, stream};
use crate::scoring::{NormalBelief, ScoringRule, SPAN_SIGMAS};

pub const DEFAULT_BINS: usize = 512;
pub const DEFAULT_FLOOR_DENSITY: f64 = 1e-300;
/// Absolute tolerance for recorded costs during replay.
pub const COST_TOLERANCE: f64 = 1e-10;

/// Contiguous equal-width bins starting at `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub width: f64,
    pub bins: usize,
}

impl Grid {
    pub fn uniform(lo: f64, width: f64, bins: usize) -> Result<Self> {
        let g = Self { lo, width, bins };
        g.validate()?;
        Ok(g)
    }

    /// `bins` bins over `mean ± sigmas` prior standard deviations.
    pub fn around(prior: &NormalBelief, bins: usize, sigmas: f64) -> Result<Self> {
        let (lo, hi) = prior.span(sigmas);
        Self::uniform(lo, (hi - lo) / bins as f64, bins)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.width.is_finite() && self.width > 0.0 && self.bins > 0) {
            return Err(Error::InvalidParameter(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.width * self.bins as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.lo + self.width * i as f64
    }

    /// `(left edge, width)` of bin `i`.
    pub fn bin(&self, i: usize) -> (f64, f64) {
        (self.edge(i), self.width)
    }

    /// Bin containing `x`, clamped to the grid; the flag marks clamping.
    pub fn locate(&self, x: f64) -> (usize, bool) {
        let u = ((x - self.lo) / self.width).floor();
        if x.is_nan() || u < 0.0 {
            (0, true)
        } else if u >= self.bins as f64 {
            (self.bins - 1, x > self.hi())
        } else {
            (u as usize, false)
        }
    }

    /// Binned density of `belief`, renormalized over the grid and floored at
    /// `floor`. Also returns the number of floored bins.
    pub fn binned_density(&self, belief: &NormalBelief, floor: f64) -> (Vec<f64>, usize) {
        let masses: Vec<f64> = (0..self.bins)
            .map(|i| normal_mass(belief, self.edge(i), self.edge(i + 1)))
            .collect();
        let total: f64 = masses.iter().sum();
        let mut clipped = 0;
        let dens = masses
            .iter()
            .map(|m| {
                let d = m / (total * self.width);
                if d.is_finite() && d >= floor {
                    d
                } else {
                    clipped += 1;
                    floor
                }
            })
            .collect();
        (dens, clipped)
    }
}

/// Probability mass of `belief` on `[a, b]`, accurate in both tails.
pub fn normal_mass(belief: &NormalBelief, a: f64, b: f64) -> f64 {
    let s = (0.5 * belief.precision).sqrt();
    let (za, zb) = ((a - belief.mean) * s, (b - belief.mean) * s);
    let m = if za >= 0.0 {
        0.5 * (erfc(za) - erfc(zb))
    } else if zb <= 0.0 {
        0.5 * (erfc(-zb) - erfc(-za))
    } else {
        1.0 - 0.5 * (erfc(zb) + erfc(-za))
    };
    m.max(0.0)
}

fn log_sum_exp_weighted(shares: &[f64], k: f64, width: f64) -> f64 {
    let m = shares.iter().fold(f64::NEG_INFINITY, |a, &s| a.max(s / k));
    m + (shares.iter().map(|&s| (s / k - m).exp()).sum::<f64>() * width).ln()
}

/// `k(t)·log Σ_j w_j·exp(s_j / k(t))`.
pub fn cost_function(shares: &[f64], t: u64, schedule: &DiscountSchedule, grid: &Grid) -> f64 {
    let k = schedule.eval(t);
    k * log_sum_exp_weighted(shares, k, grid.width)
}

/// Inventory the market opens with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialInventory {
    /// Prices equal the binned prior and `C(s₀, 0) = 0`.
    #[default]
    Prior,
    /// All shares zero.
    Flat,
}

/// Everything needed to reproduce a market from its trade log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketHeader {
    pub grid: Grid,
    pub schedule: DiscountSchedule,
    pub prior: NormalBelief,
    #[serde(default)]
    pub affine_shift: f64,
    #[serde(default = "default_floor")]
    pub floor_density: f64,
    #[serde(default)]
    pub initial: InitialInventory,
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR_DENSITY
}

impl MarketHeader {
    /// Default market: 512 bins over the prior mean ± 10 standard deviations.
    pub fn standard(prior: NormalBelief, schedule: DiscountSchedule) -> Result<Self> {
        let h = Self {
            grid: Grid::around(&prior, DEFAULT_BINS, SPAN_SIGMAS)?,
            schedule,
            prior,
            affine_shift: 0.0,
            floor_density: DEFAULT_FLOOR_DENSITY,
            initial: InitialInventory::Prior,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.schedule.validate()?;
        self.prior.validate()?;
        let (lo, hi) = self.prior.span(SPAN_SIGMAS);
        let slack = 1e-9 * (hi - lo);
        if self.grid.lo > lo + slack || self.grid.hi() < hi - slack {
            return Err(Error::InvalidParameter(format!(
                "grid [{}, {}] does not cover the prior mean ± {SPAN_SIGMAS} standard deviations",
                self.grid.lo,
                self.grid.hi()
            )));
        }
        if !self.affine_shift.is_finite() || self.floor_density.is_nan() || self.floor_density <= 0.0 {
            return Err(Error::InvalidParameter("affine shift and floor density must be finite and positive".into()));
        }
        Ok(())
    }

    pub fn initial_shares(&self) -> Vec<f64> {
        match self.initial {
            InitialInventory::Flat => vec![0.0; self.grid.bins],
            InitialInventory::Prior => {
                let k0 = self.schedule.eval(0);
                let (dens, _) = self.grid.binned_density(&self.prior, self.floor_density);
                dens.iter().map(|d| k0 * (d.ln() - self.affine_shift)).collect()
            }
        }
    }

    /// `C(s, t)` including the affine term.
    pub fn cost(&self, shares: &[f64], t: u64) -> f64 {
        cost_function(shares, t, &self.schedule, &self.grid) + self.schedule.eval(t) * self.affine_shift
    }

    /// Shifted log score of the binned density of `belief` at `x`.
    pub fn binned_score(&self, belief: &NormalBelief, x: f64) -> f64 {
        let (dens, _) = self.grid.binned_density(belief, self.floor_density);
        dens[self.grid.locate(x).0].ln() - self.affine_shift
    }

    /// Loss bound for the continuous shifted log rule under this header.
    pub fn loss_bound(&self) -> f64 {
        loss_bound_shifted(&self.schedule, &self.prior, ScoringRule::Logarithmic, self.affine_shift)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Order {
    /// Add these shares bin by bin.
    Shares(Vec<f64>),
    /// Move prices to the binned density of this belief.
    Belief(NormalBelief),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub trader: String,
    pub t_pre: u64,
    pub t: u64,
    pub pre_shares: Vec<f64>,
    pub post_shares: Vec<f64>,
    pub cost: f64,
    /// Bins whose target density was raised to the floor.
    #[serde(default)]
    pub clipped_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderSettlement {
    pub payout: f64,
    pub cost: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub outcome: f64,
    pub bin: usize,
    /// The outcome lay outside the grid and was settled in the edge bin.
    pub clamped: bool,
    pub traders: BTreeMap<String, TraderSettlement>,
    pub market_maker_loss: f64,
    pub loss_bound: f64,
}

/// Single-owner market state with its trade log.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub header: MarketHeader,
    pub shares: Vec<f64>,
    pub t: u64,
    pub log: Vec<TradeRecord>,
}

impl MarketState {
    pub fn open(header: MarketHeader) -> Result<Self> {
        header.validate()?;
        Ok(Self { shares: header.initial_shares(), header, t: 0, log: Vec::new() })
    }

    pub fn k(&self) -> f64 {
        self.header.schedule.eval(self.t)
    }

    /// Instantaneous price (density) of `bin`.
    pub fn price(&self, bin: usize) -> f64 {
        let k = self.k();
        (self.shares[bin] / k - log_sum_exp_weighted(&self.shares, k, self.header.grid.width)).exp()
    }

    pub fn prices(&self) -> Vec<f64> {
        (0..self.shares.len()).map(|i| self.price(i)).collect()
    }

    pub fn cost(&self) -> f64 {
        self.header.cost(&self.shares, self.t)
    }

    /// Cost of adding `delta` to the current inventory, both sides evaluated
    /// at counter `t`. Does not trade.
    pub fn quote(&self, delta: &[f64], t: u64) -> Result<f64> {
        self.check_len(delta.len())?;
        let post: Vec<f64> = self.shares.iter().zip(delta).map(|(s, d)| s + d).collect();
        Ok(self.header.cost(&post, t) - self.header.cost(&self.shares, t))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.shares.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} bins, got {n}",
                self.shares.len()
            )));
        }
        Ok(())
    }

    /// Executes `order` at counter `t`, charging `C(post, t) - C(pre, self.t)`.
    pub fn trade(&mut self, trader: &str, order: &Order, t: u64) -> Result<&TradeRecord> {
        if t < self.t {
            return Err(Error::TimeRegression { current: self.t, requested: t });
        }
        let h = &self.header;
        let (post, clipped_bins) = match order {
            Order::Shares(delta) => {
                self.check_len(delta.len())?;
                if delta.iter().any(|d| !d.is_finite()) {
                    return Err(Error::InvalidParameter("share deltas must be finite".into()));
                }
                (self.shares.iter().zip(delta).map(|(s, d)| s + d).collect(), 0)
            }
            Order::Belief(p) => {
                p.validate()?;
                let (dens, clipped) = h.grid.binned_density(p, h.floor_density);
                let k = h.schedule.eval(t);
                let v = self.cost();
                let post: Vec<f64> = dens.iter().map(|d| k * (d.ln() - h.affine_shift) + v).collect();
                (post, clipped)
            }
        };
        let cost = h.cost(&post, t) - h.cost(&self.shares, self.t);
        if !cost.is_finite() {
            return Err(Error::NumericFailure("trade cost is not finite".into()));
        }
        let pre = std::mem::replace(&mut self.shares, post);
        self.log.push(TradeRecord {
            trader: trader.to_owned(),
            t_pre: self.t,
            t,
            pre_shares: pre,
            post_shares: self.shares.clone(),
            cost,
            clipped_bins,
        });
        self.t = t;
        Ok(self.log.last().expect("record just pushed"))
    }

    pub fn settle(&self, outcome: f64) -> SettlementReport {
        let (bin, clamped) = self.header.grid.locate(outcome);
        let mut traders: BTreeMap<String, TraderSettlement> = BTreeMap::new();
        for r in &self.log {
            let e = traders
                .entry(r.trader.clone())
                .or_insert(TraderSettlement { payout: 0.0, cost: 0.0, profit: 0.0 });
            e.payout += r.post_shares[bin] - r.pre_shares[bin];
            e.cost += r.cost;
        }
        let mut loss = 0.0;
        for s in traders.values_mut() {
            s.profit = s.payout - s.cost;
            loss += s.profit;
        }
        SettlementReport {
            outcome,
            bin,
            clamped,
            traders,
            market_maker_loss: loss,
            loss_bound: self.header.loss_bound(),
        }
    }
}

/// One line of a trade log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogLine {
    Header(MarketHeader),
    Trade(TradeRecord),
    Settle { outcome: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeLog {
    pub header: MarketHeader,
    pub trades: Vec<TradeRecord>,
    pub outcome: Option<f64>,
}

impl TradeLog {
    pub fn from_state(state: &MarketState, outcome: Option<f64>) -> Self {
        Self { header: state.header.clone(), trades: state.log.clone(), outcome }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Format(e.to_string());
        let mut line = |l: &LogLine| -> Result<()> {
            let s = serde_json::to_string(l).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(w, "{s}").map_err(io)
        };
        line(&LogLine::Header(self.header.clone()))?;
        for t in &self.trades {
            line(&LogLine::Trade(t.clone()))?;
        }
        if let Some(outcome) = self.outcome {
            line(&LogLine::Settle { outcome })?;
        }
        Ok(())
    }

    /// Parses a log: a header line, trade lines, then at most one settle line.
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut header = None;
        let mut trades = Vec::new();
        let mut outcome = None;
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Format(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?;
            let misplaced = |what: &str| Error::Format(format!("line {}: unexpected {what}", n + 1));
            match parsed {
                LogLine::Header(h) if header.is_none() => header = Some(h),
                LogLine::Header(_) => return Err(misplaced("header")),
                _ if header.is_none() => return Err(misplaced("record before header")),
                _ if outcome.is_some() => return Err(misplaced("record after settlement")),
                LogLine::Trade(t) => trades.push(t),
                LogLine::Settle { outcome: x } => outcome = Some(x),
            }
        }
        let header = header.ok_or_else(|| Error::Format("missing header line".into()))?;
        Ok(Self { header, trades, outcome })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub trades: usize,
    pub final_t: u64,
    pub total_cost: f64,
    pub settlement: Option<SettlementReport>,
}

/// Recomputes every trade of `log` and the settlement. Fails with
/// [`Error::Inconsistent`] at the first record that does not follow from
/// its predecessors.
pub fn replay(log: &TradeLog) -> Result<ReplayReport> {
    let mut state = MarketState::open(log.header.clone())?;
    let bad = |index: usize, reason: String| Error::Inconsistent { index, reason };
    for (i, r) in log.trades.iter().enumerate() {
        if r.t_pre != state.t {
            return Err(bad(i, format!("t_pre {} differs from market counter {}", r.t_pre, state.t)));
        }
        if r.t < r.t_pre {
            return Err(bad(i, format!("counter regresses from {} to {}", r.t_pre, r.t)));
        }
        if r.pre_shares != state.shares {
            return Err(bad(i, "pre-trade shares differ from the preceding inventory".into()));
        }
        if r.post_shares.len() != state.shares.len() || r.post_shares.iter().any(|s| !s.is_finite()) {
            return Err(bad(i, "post-trade shares are malformed".into()));
        }
        let cost = state.header.cost(&r.post_shares, r.t) - state.header.cost(&r.pre_shares, r.t_pre);
        if (cost - r.cost).abs().is_nan() || (cost - r.cost).abs() > COST_TOLERANCE {
            return Err(bad(i, format!("recorded cost {} differs from recomputed cost {cost}", r.cost)));
        }
        state.shares.clone_from(&r.post_shares);
        state.t = r.t;
        state.log.push(r.clone());
    }
    Ok(ReplayReport {
        trades: state.log.len(),
        final_t: state.t,
        total_cost: state.log.iter().map(|r| r.cost).sum(),
        settlement: log.outcome.map(|x| state.settle(x)),
    })
}

/// Truthful single-trader sessions: `λ ~ prior`, a signal of precision
/// `signal_precision`, and one trade to the posterior at counter 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub signal_precision: f64,
    pub sessions: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub sessions: usize,
    pub mean_loss: f64,
    pub std_error: f64,
    pub loss_bound: f64,
}

/// Runs one session of [`simulate_sessions`] and returns the settled market.
pub fn run_session(header: &MarketHeader, signal_precision: f64, seed: u64, index: u64) -> Result<(MarketState, f64)> {
    let mut rng = stream(seed, index);
    let prior = header.prior;
    let lambda = prior.mean + rng.sample::<f64, _>(StandardNormal) / prior.precision.sqrt();
    let signal = lambda + rng.sample::<f64, _>(StandardNormal) / signal_precision.sqrt();
    let precision = prior.precision + signal_precision;
    let posterior = NormalBelief::new(
        (prior.precision * prior.mean + signal_precision * signal) / precision,
        precision,
    )?;
    let mut state = MarketState::open(header.clone())?;
    state.trade("trader", &Order::Belief(posterior), 1)?;
    Ok((state, lambda))
}

pub fn simulate_sessions(header: &MarketHeader, cfg: &SessionConfig) -> Result<SessionSummary> {
    if !(cfg.signal_precision > 0.0 && cfg.signal_precision.is_finite()) || cfg.sessions < 2 {
        return Err(Error::InvalidParameter("need a positive signal precision and at least two sessions".into()));
    }
    header.validate()?;
    let losses = (0..cfg.sessions as u64)
        .into_par_iter()
        .map(|i| {
            let (state, x) = run_session(header, cfg.signal_precision, cfg.seed, i)?;
            Ok(state.settle(x).market_maker_loss)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean_loss, std_error) = mean_and_std_error(&losses);
    Ok(SessionSummary { sessions: cfg.sessions, mean_loss, std_error, loss_bound: header.loss_bound() })
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn header(decay: f64) -> MarketHeader {
        MarketHeader::standard(NormalBelief::new(0.0, 1.0).unwrap(), DiscountSchedule::geometric(1.0, decay)).unwrap()
    }

    fn small_market() -> MarketState {
        let prior = NormalBelief::new(0.0, 1.0).unwrap();
        let h = MarketHeader {
            grid: Grid::around(&prior, 16, SPAN_SIGMAS).unwrap(),
            ..header(0.9)
        };
        MarketState::open(h).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn price_is_the_cost_gradient(shares in proptest::collection::vec(-3.0f64..3.0, 16), t in 0u64..5) {
            let mut m = small_market();
            m.shares = shares;
            m.t = t;
            let w = m.header.grid.width;
            for i in 0..16 {
                let h = 1e-6;
                let mut e = vec![0.0; 16];
                e[i] = h;
                let up = m.quote(&e, t).unwrap();
                e[i] = -h;
                let down = m.quote(&e, t).unwrap();
                let grad = (up - down) / (2.0 * h);
                let mass = m.price(i) * w;
                prop_assert!((grad - mass).abs() <= 1e-6 * mass.max(1e-3));
            }
        }

        #[test]
        fn translation_shifts_cost(shares in proptest::collection::vec(-3.0f64..3.0, 16), d in -5.0f64..5.0) {
            let mut m = small_market();
            m.shares = shares;
            let before = m.prices();
            prop_assert!((m.quote(&[d; 16], 0).unwrap() - d).abs() <= 1e-12 * (1.0 + d.abs()));
            m.shares.iter_mut().for_each(|s| *s += d);
            for (a, b) in before.iter().zip(m.prices()) {
                prop_assert!((a - b).abs() <= 1e-12 * a);
            }
        }

        #[test]
        fn split_trades_cost_the_same(
            delta in proptest::collection::vec(-2.0f64..2.0, 16),
            frac in proptest::collection::vec(-1.0f64..2.0, 16),
            t in 1u64..6,
        ) {
            let mut a = small_market();
            let mut b = a.clone();
            let whole = a.trade("x", &Order::Shares(delta.clone()), t).unwrap().cost;
            let first: Vec<f64> = delta.iter().zip(&frac).map(|(d, f)| d * f).collect();
            let second: Vec<f64> = delta.iter().zip(&first).map(|(d, f)| d - f).collect();
            let split = b.trade("x", &Order::Shares(first), t).unwrap().cost
                + b.trade("x", &Order::Shares(second), t).unwrap().cost;
            prop_assert!((whole - split).abs() <= 1e-10);
        }

        #[test]
        fn delayed_quotes_cost_more(delta in proptest::collection::vec(-3.0f64..3.0, 16), t in 0u64..10, dt in 1u64..10) {
            let mut m = small_market();
            m.shares = vec![0.0; 16];
            let spread = delta.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - delta.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-3);
            prop_assert!(m.quote(&delta, t + dt).unwrap() > m.quote(&delta, t).unwrap());
        }
    }

    #[test]
    fn holding_across_counters_lowers_the_potential() {
        // With non-positive scores C(s, t) increases in k, so an inventory
        // carried to a later counter is cheaper to unwind.
        let mut m = MarketState::open(header(0.5)).unwrap();
        let p = NormalBelief::new(0.3, 2.0).unwrap();
        m.trade("a", &Order::Belief(p), 1).unwrap();
        let pre = m.cost();
        let later = m.header.cost(&m.shares, 3);
        assert!(later < pre);
    }

    #[test]
    fn binning_error_scales_with_width_squared() {
        // E_p[log binned p] - E_p[log p] ≈ -τw²/24.
        for bins in [128usize, 512] {
            let prior = NormalBelief::new(0.0, 1.0).unwrap();
            let h = MarketHeader { grid: Grid::around(&prior, bins, SPAN_SIGMAS).unwrap(), ..header(1.0) };
            let p = NormalBelief::new(0.2, 5.0).unwrap();
            let (dens, _) = h.grid.binned_density(&p, h.floor_density);
            let binned: f64 = (0..bins)
                .map(|i| normal_mass(&p, h.grid.edge(i), h.grid.edge(i + 1)) * dens[i].ln())
                .sum();
            let exact = crate::scoring::self_expected_score(ScoringRule::Logarithmic, p.precision);
            let predicted = -p.precision * h.grid.width.powi(2) / 24.0;
            assert!(((binned - exact) - predicted).abs() <= 0.05 * predicted.abs(), "{bins}: {}", binned - exact);
        }
    }

    #[test]
    fn replay_is_deterministic() {
        use rand::Rng;
        let mut rng = crate::rng::stream(77, 0);
        let mut m = MarketState::open(header(0.95)).unwrap();
        for i in 0..100u64 {
            let order = if i % 3 == 0 {
                Order::Belief(NormalBelief::new(rng.random_range(-1.0..1.0), rng.random_range(0.5..8.0)).unwrap())
            } else {
                Order::Shares((0..512).map(|_| rng.random_range(-0.2..0.2)).collect())
            };
            m.trade(&format!("t{}", i % 7), &order, i / 2 + 1).unwrap();
        }
        let log = TradeLog::from_state(&m, Some(0.25));
        let (mut a, mut b) = (Vec::new(), Vec::new());
        log.write(&mut a).unwrap();
        log.write(&mut b).unwrap();
        let ra = replay(&TradeLog::read(a.as_slice()).unwrap()).unwrap();
        let rb = replay(&TradeLog::read(b.as_slice()).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&ra).unwrap(), serde_json::to_string(&rb).unwrap());
        assert_eq!(ra.trades, 100);
    }
}
