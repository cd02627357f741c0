//! Truthfulness of Alice's first prediction in the Alice-Bob-Alice game.
//!
//! Alice shifts her *signal* by `c`; the public then holds `g(a0 + c)` and,
//! after Bob, `h(a0 + c, b0)`. The deviation function
//!
//! `Δ(c) = [S(ĥ, h) - S(h, h)] - [S(ĝ, g) - S(g, g)]`
//!
//! is the change in Bob's expected reward, i.e. minus Alice's gain. Both
//! divergences are between equal-precision normals, so Δ is free of a0 and b0.

use serde::{Deserialize, Serialize};

use crate::beliefs::SignalModel;
use crate::error::{Error, Result};
use crate::scoring::{divergence_closed, ScoringRule};

/// Outcome of an analytic classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthfulnessVerdict {
    pub globally_truthful: bool,
    pub locally_truthful: bool,
    /// Signed slack of the governing inequality; zero on the boundary.
    pub margin: f64,
    /// Set for |ρ| = 1, which is untruthful regardless of `margin`.
    pub degenerate: bool,
}

/// Mean shifts of (g, h) per unit of signal deviation.
pub fn mean_sensitivities(model: &SignalModel) -> (f64, f64) {
    (model.single_weight(), model.pair_weights().0)
}

/// Δ(c) for either rule, built from the closed-form divergences.
pub fn delta(rule: ScoringRule, model: &SignalModel, c: f64) -> Result<f64> {
    model.require_nondegenerate()?;
    let (wg, wh) = mean_sensitivities(model);
    Ok(divergence_closed(rule, model.pair_precision(), wh * c)
        - divergence_closed(rule, model.single_precision(), wg * c))
}

/// The c-independent factor `τ_A·{τ_A/(τ_A+τ_C) - (√τ_A - ρ√τ_B)² / [...]}`
/// governing the log rule: `Δ_log(c) = ½·c²·coefficient`.
pub fn log_coefficient(model: &SignalModel) -> Result<f64> {
    model.require_nondegenerate()?;
    let (ta, tb, tc, rho) = (model.tau_a, model.tau_b, model.tau_c, model.rho);
    let one_m = 1.0 - rho * rho;
    let s = (ta.sqrt() - rho * tb.sqrt()).powi(2);
    Ok(ta * (ta / (ta + tc) - s / (one_m * s + one_m * one_m * (tb + tc))))
}

/// Δ(c) under the logarithmic rule.
pub fn delta_log(model: &SignalModel, c: f64) -> Result<f64> {
    Ok(0.5 * c * c * log_coefficient(model)?)
}

/// Δ(c) under the quadratic rule.
pub fn delta_quadratic(model: &SignalModel, c: f64) -> Result<f64> {
    delta(ScoringRule::Quadratic, model, c)
}

/// `(1-ρ²)²(1 + τ_C/τ_B) - (ρ² + τ_C/τ_A)(√(τ_A/τ_B) - ρ)²`.
pub fn log_margin(model: &SignalModel) -> f64 {
    let (ta, tb, tc, rho) = (model.tau_a, model.tau_b, model.tau_c, model.rho);
    let one_m = 1.0 - rho * rho;
    one_m * one_m * (1.0 + tc / tb) - (rho * rho + tc / ta) * ((ta / tb).sqrt() - rho).powi(2)
}

/// Classification under the logarithmic rule. Ties count as truthful.
pub fn classify_log(model: &SignalModel) -> TruthfulnessVerdict {
    let margin = log_margin(model);
    let degenerate = model.is_degenerate();
    let truthful = !degenerate && margin >= 0.0;
    TruthfulnessVerdict {
        globally_truthful: truthful,
        locally_truthful: truthful,
        margin,
        degenerate,
    }
}

/// `((1 - ρ√(τ_B/τ_A)) / (1 - ρ²))²`, the squared ratio of h's to g's
/// mean sensitivity after precision normalization.
pub fn quadratic_sensitivity_ratio(model: &SignalModel) -> f64 {
    let rho = model.rho;
    ((1.0 - rho * (model.tau_b / model.tau_a).sqrt()) / (1.0 - rho * rho)).powi(2)
}

/// Alice's signal carries no weight in `h`, so her first report cannot move
/// Bob's. Happens when `ρ√τ_B = √τ_A`.
pub fn alice_redundant(model: &SignalModel) -> bool {
    let ta = model.tau_a;
    (ta - model.rho * (ta * model.tau_b).sqrt()).abs() <= 4.0 * f64::EPSILON * ta
}

/// Bob's signal adds nothing to Alice's (`h = g`), so Δ ≡ 0. Happens when
/// `ρ√τ_A = √τ_B`.
pub fn bob_redundant(model: &SignalModel) -> bool {
    (model.rho * model.tau_a.sqrt() - model.tau_b.sqrt()).abs() <= 4.0 * f64::EPSILON * model.tau_b.sqrt()
}

/// Classification under the quadratic rule.
///
/// Δ(c) → (√τ_AC - √τ_ABC)/√π < 0 as |c| → ∞ unless one signal is
/// redundant given the other. The rule is globally truthful only then:
/// strictly when Alice's signal is redundant, as a tie (Δ ≡ 0) when Bob's is.
/// Locally truthful iff Δ''(0) > 0, i.e.
/// `((1 - ρ√(τ_B/τ_A)) / (1 - ρ²))² · √(τ_AC/τ_ABC) < 1`; `margin` is one
/// minus the left-hand side.
pub fn classify_quadratic(model: &SignalModel) -> TruthfulnessVerdict {
    if model.is_degenerate() {
        return TruthfulnessVerdict {
            globally_truthful: false,
            locally_truthful: false,
            margin: f64::NEG_INFINITY,
            degenerate: true,
        };
    }
    let margin = 1.0
        - quadratic_sensitivity_ratio(model) * (model.single_precision() / model.pair_precision()).sqrt();
    let globally_truthful = alice_redundant(model) || bob_redundant(model);
    TruthfulnessVerdict {
        globally_truthful,
        locally_truthful: margin > 0.0 || globally_truthful,
        margin,
        degenerate: false,
    }
}

pub fn classify(rule: ScoringRule, model: &SignalModel) -> TruthfulnessVerdict {
    match rule {
        ScoringRule::Logarithmic => classify_log(model),
        ScoringRule::Quadratic => classify_quadratic(model),
    }
}

/// Admissible ρ interval for the log rule under a flat prior, as a function
/// of `σ_A/σ_B`. Returns `(lower, upper)`.
pub fn uninformative_prior_interval(sigma_ratio: f64) -> (f64, f64) {
    let r = sigma_ratio.recip();
    let root = (r * r + 8.0).sqrt();
    (0.25 * (r - root), (0.25 * (r + root)).min(sigma_ratio))
}

/// Step used by [`local_truthfulness_fd`].
pub const FD_STEP: f64 = 1e-4;
/// Relative curvature below which a point is reported as a boundary case.
pub const FD_BOUNDARY_TOL: f64 = 1e-12;

fn second_difference<F: Fn(f64) -> f64>(f: &F, h: f64) -> f64 {
    (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
}

fn richardson<F: Fn(f64) -> f64>(f: &F, h: f64) -> f64 {
    (4.0 * second_difference(f, 0.5 * h) - second_difference(f, h)) / 3.0
}

/// Sign of Δ''(0) by Richardson-extrapolated central differences.
///
/// Fails with [`Error::Boundary`] when the curvature is zero relative to the
/// curvatures of its two divergence terms.
pub fn local_truthfulness_fd(rule: ScoringRule, model: &SignalModel) -> Result<bool> {
    model.require_nondegenerate()?;
    let (wg, wh) = mean_sensitivities(model);
    let (tg, th) = (model.single_precision(), model.pair_precision());
    let h_part = |c: f64| divergence_closed(rule, th, wh * c);
    let g_part = |c: f64| divergence_closed(rule, tg, wg * c);
    let total = |c: f64| h_part(c) - g_part(c);
    let curvature = richardson(&total, FD_STEP);
    let scale = richardson(&h_part, FD_STEP).abs() + richardson(&g_part, FD_STEP).abs();
    if !curvature.is_finite() {
        return Err(Error::NumericFailure("non-finite curvature".into()));
    }
    if curvature.abs() <= FD_BOUNDARY_TOL * scale {
        return Err(Error::Boundary { curvature });
    }
    Ok(curvature > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(ta: f64, tb: f64, tc: f64, rho: f64) -> SignalModel {
        SignalModel::new(ta, tb, tc, rho, 0.0).unwrap()
    }

    #[test]
    fn delta_log_values() {
        let m = model(1.0, 1.0, 0.0, 0.0);
        assert_eq!(delta_log(&m, 0.0).unwrap(), 0.0);
        // g shifts by 1 at precision 1, h by ½ at precision 2: -¼ - (-½).
        assert!((delta_log(&m, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((log_coefficient(&m).unwrap() - 0.5).abs() < 1e-15);
        let m = model(1.0, 1.0, 0.0, -0.8);
        let expected = 1.0 - 3.24 / (0.36 * 3.24 + 0.36 * 0.36);
        assert!((log_coefficient(&m).unwrap() - expected).abs() < 1e-14);
        assert!(delta_log(&m, 1.0).unwrap() < 0.0);
    }

    #[test]
    fn closed_and_generic_log_delta_agree() {
        for &(ta, tb, tc, rho) in &[(1.0, 1.0, 0.0, 0.3), (4.0, 0.5, 2.0, -0.7), (0.2, 3.0, 0.1, 0.9)] {
            let m = model(ta, tb, tc, rho);
            for c in [-3.0, 0.1, 2.0] {
                let a = delta_log(&m, c).unwrap();
                let b = delta(ScoringRule::Logarithmic, &m, c).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn quadratic_delta_is_negative_far_out() {
        let m = model(1.0, 0.5, 0.0, 0.5);
        assert_eq!(delta_quadratic(&m, 0.0).unwrap(), 0.0);
        assert!(delta_quadratic(&m, 1e6).unwrap() < 0.0);
        let limit = (m.single_precision().sqrt() - m.pair_precision().sqrt()) / std::f64::consts::PI.sqrt();
        assert!((delta_quadratic(&m, 1e6).unwrap() - limit).abs() < 1e-12);
    }

    #[test]
    fn quadratic_small_deviation_sign() {
        let m = model(1.0, 0.5, 0.0, 0.5);
        let d = delta_quadratic(&m, 1e-3).unwrap();
        assert!(d > 0.0);
        assert!(classify_quadratic(&m).locally_truthful);
    }

    #[test]
    fn log_classifier_examples() {
        assert!(classify_log(&model(1.0, 1.0, 0.0, -0.5)).globally_truthful);
        assert_eq!(classify_log(&model(1.0, 1.0, 0.0, -0.5)).margin, 0.0);
        assert!(!classify_log(&model(1.0, 1.0, 0.0, -0.6)).globally_truthful);
        let v = classify_log(&model(1.0, 2.0, 0.0, 1.0));
        assert!(!v.globally_truthful && v.degenerate);
        // ρ = 1 with equal precisions: the inequality is tight but the verdict is untruthful.
        let v = classify_log(&model(1.0, 1.0, 0.0, 1.0));
        assert!(!v.globally_truthful && v.margin == 0.0);
    }

    #[test]
    fn quadratic_classifier_examples() {
        for tc in [0.0, 1.0, 100.0] {
            assert!(!classify_quadratic(&model(2.0, 1.0, tc, 0.1)).globally_truthful);
            // ρ√τ_B = √τ_A: Bob's posterior ignores Alice.
            let v = classify_quadratic(&model(0.25, 1.0, tc, 0.5));
            assert!(v.globally_truthful && v.locally_truthful);
            assert!(delta_quadratic(&model(0.25, 1.0, tc, 0.5), 1e6).unwrap() > 0.0);
            let v = classify_quadratic(&model(4.0, 1.0, tc, 0.5));
            assert!(v.globally_truthful && v.locally_truthful && v.margin.abs() < 1e-15);
            assert_eq!(delta_quadratic(&model(4.0, 1.0, tc, 0.5), 3.0).unwrap(), 0.0);
            assert!(classify_quadratic(&model(1.0, 1.0, tc, 0.3)).locally_truthful);
            assert!(!classify_quadratic(&model(1.0, 1.0, tc, -0.3)).locally_truthful);
        }
    }

    #[test]
    fn fd_examples() {
        assert!(local_truthfulness_fd(ScoringRule::Logarithmic, &model(1.0, 1.0, 0.0, 0.0)).unwrap());
        assert!(local_truthfulness_fd(ScoringRule::Quadratic, &model(1.0, 1.0, 0.0, 0.3)).unwrap());
        assert!(matches!(
            local_truthfulness_fd(ScoringRule::Logarithmic, &model(1.0, 1.0, 0.0, -0.5)),
            Err(Error::Boundary { .. })
        ));
    }

    #[test]
    fn fd_reports_quadratic_boundary() {
        // Equal precisions, flat prior: the margin is 1 - ((1+ρ)^{3/2}·√2)^{-1}.
        let rho = 2f64.powf(-1.0 / 3.0) - 1.0;
        assert!(classify_quadratic(&model(1.0, 1.0, 0.0, rho)).margin.abs() < 1e-15);
        assert!(matches!(
            local_truthfulness_fd(ScoringRule::Quadratic, &model(1.0, 1.0, 0.0, rho)),
            Err(Error::Boundary { .. })
        ));
        assert!(local_truthfulness_fd(ScoringRule::Quadratic, &model(1.0, 1.0, 0.0, rho + 1e-3)).unwrap());
        assert!(!local_truthfulness_fd(ScoringRule::Quadratic, &model(1.0, 1.0, 0.0, rho - 1e-3)).unwrap());
    }

    #[test]
    fn interval_for_equal_precisions() {
        let (lo, hi) = uninformative_prior_interval(1.0);
        assert!((lo + 0.5).abs() < 1e-15);
        assert_eq!(hi, 1.0);
    }
}
