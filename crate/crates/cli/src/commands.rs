//! Subcommand implementations. Each returns the bytes to emit.

use std::collections::BTreeMap;

use promptcast_core::amm::{self, Grid, InitialInventory, ReplayReport, SessionConfig, SessionSummary};
use promptcast_core::discounting::{required_ratio_log, required_ratio_numeric};
use promptcast_core::game::{run_mechanism, score_predictions, BestResponse, GainEstimate};
use promptcast_core::rng::mean_and_std_error;
use promptcast_core::scoring::score;
use promptcast_core::truthfulness::classify;
use promptcast_core::{
    AbaGame, DiscountSchedule, Error, MarketHeader, Mechanism, ScoringRule, SearchGrid, SignalModel, SlotWeights,
    TradeLog, TruthfulnessVerdict,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{MarketConfig, Scenario, SweepConfig, SweepPoint};
use crate::error::CliError;
use crate::format::{fmt_f64, to_json, Csv};

/// Printed in place of a discount ratio when none exists.
pub const NO_RATIO: &str = "inf";
/// Printed in place of an absent deviation.
pub const NO_VALUE: &str = "none";

fn model_of(p: &SweepPoint) -> Result<SignalModel, CliError> {
    Ok(SignalModel::new(p.tau_a, p.tau_b, p.tau_c, p.rho, 0.0)?)
}

fn rule_name(rule: ScoringRule) -> &'static str {
    match rule {
        ScoringRule::Logarithmic => "log",
        ScoringRule::Quadratic => "quadratic",
    }
}

fn param_fields(rule: ScoringRule, p: &SweepPoint) -> Vec<String> {
    let mut v = vec![rule_name(rule).to_owned()];
    v.extend([p.rho, p.tau_a, p.tau_b, p.tau_c].map(fmt_f64));
    v
}

/// Minimal discount ratio, `None` when no finite ratio exists.
fn k_min(rule: ScoringRule, model: &SignalModel) -> Result<Option<f64>, CliError> {
    let r = match rule {
        ScoringRule::Logarithmic => required_ratio_log(model),
        ScoringRule::Quadratic => required_ratio_numeric(rule, model, &SearchGrid::default()).map(|s| s.ratio),
    };
    match r {
        Ok(k) => Ok(Some(k)),
        Err(Error::DiscountIneffective(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn fmt_ratio(k: Option<f64>) -> String {
    k.map_or_else(|| NO_RATIO.to_owned(), fmt_f64)
}

fn fmt_bool(b: bool) -> String {
    b.to_string()
}

fn sweep<F>(config: &SweepConfig, row: F) -> Result<Vec<Vec<String>>, CliError>
where
    F: Fn(ScoringRule, &SweepPoint) -> Result<Vec<String>, CliError> + Sync,
{
    let rule = config.rule()?;
    let points = config.points()?;
    points.par_iter().map(|p| row(rule, p)).collect()
}

pub const CLASSIFY_COLUMNS: [&str; 10] = [
    "rule",
    "rho",
    "tau_a",
    "tau_b",
    "tau_c",
    "globally_truthful",
    "locally_truthful",
    "degenerate",
    "margin",
    "k_min",
];

/// One row per grid point: verdict flags, margin and the minimal discount ratio.
pub fn classify_sweep(config: &SweepConfig) -> Result<String, CliError> {
    let rows = sweep(config, |rule, p| {
        let model = model_of(p)?;
        let v = classify(rule, &model);
        let mut row = param_fields(rule, p);
        row.extend([
            fmt_bool(v.globally_truthful),
            fmt_bool(v.locally_truthful),
            fmt_bool(v.degenerate),
            fmt_f64(v.margin),
            fmt_ratio(k_min(rule, &model)?),
        ]);
        Ok(row)
    })?;
    let mut csv = Csv::new("classify", 1, &CLASSIFY_COLUMNS);
    rows.iter().for_each(|r| csv.row(r));
    Ok(csv.into_string())
}

pub const DISCOUNT_COLUMNS: [&str; 10] =
    ["rule", "rho", "tau_a", "tau_b", "tau_c", "k_min", "k_numeric", "argmax_c", "zero_limit", "tail_limit"];

/// One row per grid point: the required ratio in closed form (log rule) or
/// by search (quadratic rule), the numeric supremum and its location.
pub fn discount_sweep(config: &SweepConfig) -> Result<String, CliError> {
    let rows = sweep(config, |rule, p| {
        let model = model_of(p)?;
        let mut row = param_fields(rule, p);
        match required_ratio_numeric(rule, &model, &SearchGrid::default()) {
            Ok(s) => row.extend([
                fmt_ratio(k_min(rule, &model)?),
                fmt_f64(s.ratio),
                s.at.map_or_else(|| NO_VALUE.to_owned(), fmt_f64),
                fmt_f64(s.zero_limit),
                fmt_f64(s.tail_limit),
            ]),
            Err(Error::DiscountIneffective(_)) => row.extend([
                NO_RATIO.to_owned(),
                NO_RATIO.to_owned(),
                NO_VALUE.to_owned(),
                fmt_f64(f64::NAN),
                fmt_f64(f64::NAN),
            ]),
            Err(e) => return Err(e.into()),
        }
        Ok(row)
    })?;
    let mut csv = Csv::new("discount", 1, &DISCOUNT_COLUMNS);
    rows.iter().for_each(|r| csv.row(r));
    Ok(csv.into_string())
}

#[derive(Debug, Serialize)]
pub struct GainPoint {
    pub c: f64,
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    pub significantly_positive: bool,
}

#[derive(Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Serialize)]
pub struct MechanismPayoffs {
    pub mechanism: Mechanism,
    /// Alice's first-report deviation.
    pub c: f64,
    pub payoffs: BTreeMap<String, Estimate>,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub version: u32,
    pub rule: ScoringRule,
    pub model: SignalModel,
    /// Prior precision of the sampled model; differs from the model's only
    /// when its prior is flat.
    pub sampled_tau_c: f64,
    pub samples: usize,
    pub seed: u64,
    pub schedule: DiscountSchedule,
    pub weights: SlotWeights,
    /// Undiscounted verdict.
    pub verdict: TruthfulnessVerdict,
    /// Smallest ratio of Alice's first-slot weight to Bob's that restores
    /// truthfulness; `null` when none exists.
    pub required_ratio: Option<f64>,
    pub search_bound: f64,
    pub best_response: BestResponse,
    /// Truthful under the schedule according to the analytic best response.
    pub analytic_truthful: bool,
    /// No deviation on the gain curve is significantly profitable.
    pub mc_truthful: bool,
    pub agreement: bool,
    pub gain_curve: Vec<GainPoint>,
    pub mechanisms: Vec<MechanismPayoffs>,
}

/// Analytic verdict, Monte-Carlo gain curve, best response and mechanism
/// payoffs for one scenario.
pub fn simulate(scenario: &Scenario) -> Result<String, CliError> {
    let rule = scenario.rule()?;
    let schedule = scenario.schedule()?;
    let model = scenario.model;
    model.validate().map_err(|e| CliError::config(format!("model: {e}")))?;
    if scenario.samples < 2 {
        return Err(CliError::config("samples must be at least 2"));
    }
    if !(scenario.sample_tau_c > 0.0 && scenario.sample_tau_c.is_finite()) {
        return Err(CliError::config("sample_tau_c must be positive"));
    }
    if scenario.sigmas.is_nan() || scenario.sigmas <= 0.0 {
        return Err(CliError::config("sigmas must be positive"));
    }
    let sampled = SignalModel { tau_c: if model.tau_c > 0.0 { model.tau_c } else { scenario.sample_tau_c }, ..model };
    let game = AbaGame::new(sampled, rule, &schedule)?;
    let analytic = AbaGame::new(model, rule, &schedule)?;

    let bound = analytic.default_bound();
    let best_response = analytic.best_response(bound)?;
    let sigma_a = model.tau_a.sqrt().recip();
    let mut cs = match &scenario.deviations {
        Some(cs) => cs.clone(),
        None => [0.25, 0.5, 1.0, 2.0, 4.0, 10.0].iter().map(|m| m * sigma_a).collect(),
    };
    if best_response.c_star > 0.0 && !cs.contains(&best_response.c_star) {
        cs.push(best_response.c_star);
    }
    cs.sort_by(f64::total_cmp);
    if let Some(c) = cs.iter().find(|c| !c.is_finite()) {
        return Err(CliError::config(format!("deviation {c} is not finite")));
    }

    let gain_curve = cs
        .iter()
        .map(|&c| {
            let est: GainEstimate = game.deviation_gain(c, scenario.samples, scenario.seed)?;
            Ok(GainPoint {
                c,
                analytic: game.analytic_gain(c)?,
                mc_mean: est.mean,
                mc_std_error: est.std_error,
                significantly_positive: est.significantly_positive(scenario.sigmas),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let analytic_truthful = best_response.c_star == 0.0;
    let mc_truthful = !gain_curve.iter().any(|g| g.significantly_positive);

    let probe = if best_response.c_star > 0.0 { best_response.c_star } else { sigma_a };
    let mechanisms = match scenario.mechanism {
        Some(m) => vec![m],
        None => vec![Mechanism::DiscountedMsr, Mechanism::Group, Mechanism::Single],
    };
    let mut payoffs = Vec::new();
    for c in [0.0, probe] {
        payoffs.extend(mechanism_payoffs(&game, &mechanisms, &schedule, c, scenario)?);
    }

    let report = SimulateReport {
        version: 1,
        rule,
        model,
        sampled_tau_c: sampled.tau_c,
        samples: scenario.samples,
        seed: scenario.seed,
        weights: analytic.weights,
        schedule,
        verdict: classify(rule, &model),
        required_ratio: k_min(rule, &model)?,
        search_bound: bound,
        best_response,
        analytic_truthful,
        mc_truthful,
        agreement: analytic_truthful == mc_truthful,
        gain_curve,
        mechanisms: payoffs,
    };
    to_json(&report).map_err(|e| CliError::Numeric(e.to_string()))
}

fn mechanism_payoffs(
    game: &AbaGame,
    mechanisms: &[Mechanism],
    schedule: &DiscountSchedule,
    c: f64,
    scenario: &Scenario,
) -> Result<Vec<MechanismPayoffs>, CliError> {
    let prior = game.model.prior().ok_or_else(|| CliError::Numeric("sampled model has no prior".into()))?;
    let per_draw = (0..scenario.samples as u64)
        .into_par_iter()
        .map(|i| {
            let draw = game.sample(scenario.seed, i)?;
            let scored = score_predictions(game.rule, &game.predictions(&draw, c)?, draw.lambda);
            let prior_score = score(game.rule, &prior, draw.lambda);
            mechanisms
                .iter()
                .map(|&m| run_mechanism(m, prior_score, &scored, schedule))
                .collect::<Result<Vec<_>, Error>>()
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(mechanisms
        .iter()
        .enumerate()
        .map(|(j, &mechanism)| {
            let experts = per_draw.first().map(|d| d[j].keys().cloned().collect::<Vec<_>>()).unwrap_or_default();
            let payoffs = experts
                .into_iter()
                .map(|e| {
                    let xs: Vec<f64> = per_draw.iter().map(|d| d[j][&e]).collect();
                    let (mean, std_error) = mean_and_std_error(&xs);
                    (e, Estimate { mean, std_error })
                })
                .collect();
            MechanismPayoffs { mechanism, c, payoffs }
        })
        .collect())
}

#[derive(Debug, Serialize)]
pub struct MarketSimulateReport {
    pub version: u32,
    pub seed: u64,
    #[serde(flatten)]
    pub summary: SessionSummary,
    pub within_bound: bool,
}

pub fn market_header(config: &MarketConfig) -> Result<MarketHeader, CliError> {
    let grid = Grid::around(&config.prior, config.bins, config.span_sigmas)?;
    let header = MarketHeader {
        grid,
        schedule: config.schedule.clone(),
        prior: config.prior,
        affine_shift: config.affine_shift,
        floor_density: amm::DEFAULT_FLOOR_DENSITY,
        initial: InitialInventory::Prior,
    };
    header.validate()?;
    Ok(header)
}

/// Mean market-maker loss over truthful sessions next to its bound. Also
/// returns the trade log of the first session.
pub fn market_simulate(config: &MarketConfig) -> Result<(String, String), CliError> {
    let header = market_header(config)?;
    let cfg = SessionConfig { signal_precision: config.signal_precision, sessions: config.sessions, seed: config.seed };
    let summary = amm::simulate_sessions(&header, &cfg)?;
    eprintln!(
        "mean market-maker loss {} ± {}    bound {}",
        fmt_f64(summary.mean_loss),
        fmt_f64(summary.std_error),
        fmt_f64(summary.loss_bound)
    );
    let (state, x) = amm::run_session(&header, config.signal_precision, config.seed, 0)?;
    let mut log = Vec::new();
    TradeLog::from_state(&state, Some(x)).write(&mut log)?;
    let report = MarketSimulateReport {
        version: 1,
        seed: config.seed,
        within_bound: summary.mean_loss <= summary.loss_bound,
        summary,
    };
    let json = to_json(&report).map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok((json, String::from_utf8(log).map_err(|e| CliError::Numeric(e.to_string()))?))
}

#[derive(Debug, Serialize)]
pub struct MarketReplayReport {
    pub version: u32,
    #[serde(flatten)]
    pub replay: ReplayReport,
}

/// Recomputes a trade log; an empty text yields an empty report.
pub fn market_replay(text: &str) -> Result<String, CliError> {
    let report = if text.trim().is_empty() {
        ReplayReport { trades: 0, final_t: 0, total_cost: 0.0, settlement: None }
    } else {
        let log = TradeLog::read(text.as_bytes())?;
        amm::replay(&log)?
    };
    to_json(&MarketReplayReport { version: 1, replay: report }).map_err(|e| CliError::Numeric(e.to_string()))
}
