//! Configuration files and the `--grid` mini-language.

use std::path::{Path, PathBuf};

use promptcast_core::{DiscountSchedule, Mechanism, NormalBelief, ScoringRule, SignalModel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::format::round_sig;

/// A set of parameter values: an explicit list, a single value, or an
/// inclusive `start..=stop` range with a positive step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    One(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Values {
    /// Expands the set. Range points are snapped to 12 significant digits of
    /// the range's magnitude so that accumulated step error never moves a
    /// point off a round value (or off zero).
    pub fn expand(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let out = match self {
            Self::One(x) => vec![*x],
            Self::List(xs) => xs.clone(),
            Self::Range { start, stop, step } => {
                if !(step.is_finite() && *step > 0.0) {
                    return Err(CliError::config(format!("{name}: step must be positive, got {step}")));
                }
                if !(start.is_finite() && stop.is_finite() && start <= stop) {
                    return Err(CliError::config(format!("{name}: empty range {start}..{stop}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as u64 + 1;
                if n > 1_000_000 {
                    return Err(CliError::config(format!("{name}: range has {n} points")));
                }
                let scale = start.abs().max(stop.abs()).max(*step);
                let quantum = 10f64.powi(scale.log10().floor() as i32 - 11);
                (0..n).map(|i| round_sig(((start + i as f64 * step) / quantum).round() * quantum)).collect()
            }
        };
        if out.is_empty() {
            return Err(CliError::config(format!("{name}: no values")));
        }
        if let Some(x) = out.iter().find(|x| !x.is_finite()) {
            return Err(CliError::config(format!("{name}: value {x} is not finite")));
        }
        Ok(out)
    }

    /// Parses `a:b:step`, `x,y,z` or a single number.
    fn parse(name: &str, text: &str) -> Result<Self, CliError> {
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("--grid {name}: '{s}' is not a number")))
        };
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            [start, stop, step] => Ok(Self::Range { start: num(start)?, stop: num(stop)?, step: num(step)? }),
            [list] => Ok(Self::List(list.split(',').map(num).collect::<Result<_, _>>()?)),
            _ => Err(CliError::config(format!("--grid {name}: expected 'start:stop:step' or a list"))),
        }
    }
}

/// Parameter sweep for `classify` and `discount`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_rule")]
    pub rule: String,
    #[serde(default = "default_rho")]
    pub rho: Values,
    /// Values of `tau_a / tau_b`.
    #[serde(default = "default_ratios")]
    pub ratios: Values,
    #[serde(default = "default_tau_b")]
    pub tau_b: Values,
    #[serde(default = "default_tau_c")]
    pub tau_c: Values,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_rule() -> String {
    "log".into()
}

fn default_rho() -> Values {
    Values::Range { start: -0.95, stop: 0.95, step: 0.05 }
}

fn default_ratios() -> Values {
    Values::List(vec![0.25, 1.0, 4.0])
}

fn default_tau_b() -> Values {
    Values::One(1.0)
}

fn default_tau_c() -> Values {
    Values::List(vec![0.0, 0.5, 2.0])
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rule: default_rule(),
            rho: default_rho(),
            ratios: default_ratios(),
            tau_b: default_tau_b(),
            tau_c: default_tau_c(),
            out: None,
        }
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub rho: f64,
    pub tau_a: f64,
    pub tau_b: f64,
    pub tau_c: f64,
}

impl SweepConfig {
    /// Applies `--grid` overrides: `key=values` pairs separated by `;`, where
    /// keys are `rho`, `ratio`, `tau_b`, `tau_c` and values use [`Values`] syntax.
    pub fn apply_grid(&mut self, spec: &str) -> Result<(), CliError> {
        for item in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, val) = item
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("--grid: '{item}' is not key=values")))?;
            let key = key.trim();
            let slot = match key {
                "rho" => &mut self.rho,
                "ratio" | "ratios" => &mut self.ratios,
                "tau_b" => &mut self.tau_b,
                "tau_c" => &mut self.tau_c,
                other => return Err(CliError::config(format!("--grid: unknown key '{other}'"))),
            };
            *slot = Values::parse(key, val)?;
        }
        Ok(())
    }

    pub fn rule(&self) -> Result<ScoringRule, CliError> {
        parse_rule(&self.rule)
    }

    /// Every grid point, in lexicographic order of `(rho, tau_a, tau_b, tau_c)`.
    pub fn points(&self) -> Result<Vec<SweepPoint>, CliError> {
        let rhos = self.rho.expand("rho")?;
        let ratios = self.ratios.expand("ratios")?;
        let tau_bs = self.tau_b.expand("tau_b")?;
        let tau_cs = self.tau_c.expand("tau_c")?;
        if let Some(r) = rhos.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
            return Err(CliError::config(format!("rho = {r} outside [-1, 1]")));
        }
        if let Some(r) = ratios.iter().chain(&tau_bs).find(|r| **r <= 0.0) {
            return Err(CliError::config(format!("precision ratios and tau_b must be positive, got {r}")));
        }
        if let Some(c) = tau_cs.iter().find(|c| **c < 0.0) {
            return Err(CliError::config(format!("tau_c must be non-negative, got {c}")));
        }
        let mut pts = Vec::with_capacity(rhos.len() * ratios.len() * tau_bs.len() * tau_cs.len());
        for &rho in &rhos {
            for &ratio in &ratios {
                for &tau_b in &tau_bs {
                    for &tau_c in &tau_cs {
                        pts.push(SweepPoint { rho, tau_a: round_sig(ratio * tau_b), tau_b, tau_c });
                    }
                }
            }
        }
        pts.sort_by(|p, q| {
            p.rho
                .total_cmp(&q.rho)
                .then(p.tau_a.total_cmp(&q.tau_a))
                .then(p.tau_b.total_cmp(&q.tau_b))
                .then(p.tau_c.total_cmp(&q.tau_c))
        });
        pts.dedup();
        Ok(pts)
    }
}

/// Game simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_rule")]
    pub rule: String,
    pub model: SignalModel,
    /// Discount schedule over the counters of the prior (0) and the three
    /// predictions (1, 2, 3). Mutually exclusive with `ratio`.
    #[serde(default)]
    pub schedule: Option<DiscountSchedule>,
    /// Shorthand for a two-level schedule weighting Alice's first report
    /// `ratio` times Bob's.
    #[serde(default)]
    pub ratio: Option<f64>,
    /// Mechanism whose payoffs are reported; all three when absent.
    #[serde(default)]
    pub mechanism: Option<Mechanism>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Deviations evaluated on the gain curve; defaults to multiples of
    /// Alice's signal standard deviation.
    #[serde(default)]
    pub deviations: Option<Vec<f64>>,
    /// Prior precision used for sampling when the model's prior is flat.
    #[serde(default = "default_sample_tau_c")]
    pub sample_tau_c: f64,
    /// Significance threshold, in standard errors, for Monte-Carlo gains.
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
}

fn default_samples() -> usize {
    100_000
}

fn default_sample_tau_c() -> f64 {
    1e-4
}

fn default_sigmas() -> f64 {
    3.0
}

impl Scenario {
    pub fn rule(&self) -> Result<ScoringRule, CliError> {
        parse_rule(&self.rule)
    }

    pub fn schedule(&self) -> Result<DiscountSchedule, CliError> {
        let s = match (&self.schedule, self.ratio) {
            (Some(_), Some(_)) => return Err(CliError::config("give either schedule or ratio, not both")),
            (Some(s), None) => s.clone(),
            (None, Some(r)) => DiscountSchedule::two_level(r, 2),
            (None, None) => DiscountSchedule::constant(1.0),
        };
        s.validate().map_err(|e| CliError::config(format!("schedule: {e}")))?;
        Ok(s)
    }
}

/// Truthful-session market simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub prior: NormalBelief,
    #[serde(default)]
    pub schedule: DiscountSchedule,
    pub signal_precision: f64,
    #[serde(default = "default_sessions")]
    pub sessions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Half-width of the outcome grid in prior standard deviations.
    #[serde(default = "default_span")]
    pub span_sigmas: f64,
    #[serde(default)]
    pub affine_shift: f64,
}

fn default_sessions() -> usize {
    10_000
}

fn default_bins() -> usize {
    promptcast_core::amm::DEFAULT_BINS
}

fn default_span() -> f64 {
    10.0
}

pub fn parse_rule(s: &str) -> Result<ScoringRule, CliError> {
    s.parse().map_err(|e| CliError::config(format!("rule: {e}")))
}

/// Reads and parses a TOML file; diagnostics carry the line and field.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sweep_has_351_sorted_points() {
        let pts = SweepConfig::default().points().unwrap();
        assert_eq!(pts.len(), 39 * 3 * 3);
        assert!(pts.windows(2).all(|w| w[0].rho <= w[1].rho));
        assert!(pts.iter().any(|p| p.rho == -0.5));
        assert!(pts.iter().any(|p| p.rho == 0.0));
    }

    #[test]
    fn grid_overrides() {
        let mut c = SweepConfig::default();
        c.apply_grid("rho=0; ratio=1; tau_c=0,1").unwrap();
        let pts = c.points().unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0], SweepPoint { rho: 0.0, tau_a: 1.0, tau_b: 1.0, tau_c: 0.0 });
        assert!(c.apply_grid("sigma=1").is_err());
        assert!(c.apply_grid("rho").is_err());
        assert!(c.apply_grid("rho=1:2").is_err());
    }

    #[test]
    fn invalid_ranges_are_config_errors() {
        for spec in ["rho=-2", "rho=0:1:0", "rho=1:0:0.1", "ratio=0", "tau_c=-1", "rho=x"] {
            let mut c = SweepConfig::default();
            let r = c.apply_grid(spec).and_then(|_| c.points().map(|_| ()));
            assert_eq!(r.unwrap_err().code(), 2, "{spec}");
        }
    }

    #[test]
    fn range_points_land_on_round_values() {
        let v = Values::Range { start: -0.95, stop: 0.95, step: 0.05 }.expand("rho").unwrap();
        assert_eq!(v.len(), 39);
        assert_eq!(v[9], -0.5);
        assert_eq!(v[19], 0.0);
        assert_eq!(v[38], 0.95);
    }

    #[test]
    fn scenario_parses_and_rejects_unknown_fields() {
        let s: Scenario = toml::from_str(
            "rule = \"log\"\nratio = 2.5\n[model]\ntau_a = 1\ntau_b = 1\ntau_c = 0\nrho = -0.8\n",
        )
        .unwrap();
        assert_eq!(s.schedule().unwrap().eval(1), 2.5);
        assert_eq!(s.schedule().unwrap().eval(2), 1.0);
        let err = toml::from_str::<Scenario>("bogus = 1\n[model]\ntau_a = 1\ntau_b = 1\ntau_c = 0\nrho = 0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus") && err.contains("line 1"), "{err}");
    }
}
