//! The Gaussian signal model.
//!
//! The outcome λ has public prior `N(C0, 1/τ_C)` (τ_C = 0 is the flat prior).
//! Given λ, Alice's and Bob's signals are jointly normal with means λ,
//! precisions τ_A, τ_B and noise correlation ρ. All posteriors are normal and
//! are carried as (mean, precision).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::NormalBelief;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub tau_a: f64,
    pub tau_b: f64,
    /// Prior precision; zero means an uninformative prior.
    pub tau_c: f64,
    pub rho: f64,
    /// Prior mean, ignored when `tau_c == 0`.
    #[serde(default)]
    pub c0: f64,
}

/// A de-priored private signal `N(mean, 1/precision)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerSignal {
    pub mean: f64,
    pub precision: f64,
}

impl SignalModel {
    pub fn new(tau_a: f64, tau_b: f64, tau_c: f64, rho: f64, c0: f64) -> Result<Self> {
        let m = Self { tau_a, tau_b, tau_c, rho, c0 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v} must be positive and finite")))
            }
        };
        pos(self.tau_a, "tau_a")?;
        pos(self.tau_b, "tau_b")?;
        if !(self.tau_c.is_finite() && self.tau_c >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau_c = {} must be non-negative and finite",
                self.tau_c
            )));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!("rho = {} outside [-1, 1]", self.rho)));
        }
        if !self.c0.is_finite() {
            return Err(Error::InvalidParameter("c0 must be finite".into()));
        }
        Ok(())
    }

    /// Perfectly correlated signals.
    pub fn is_degenerate(&self) -> bool {
        self.rho.abs() >= 1.0
    }

    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::Degenerate { rho: self.rho })
        } else {
            Ok(())
        }
    }

    /// Prior belief, if the prior is informative.
    pub fn prior(&self) -> Option<NormalBelief> {
        (self.tau_c > 0.0).then_some(NormalBelief {
            mean: self.c0,
            precision: self.tau_c,
        })
    }

    fn cross(&self) -> f64 {
        self.rho * (self.tau_a * self.tau_b).sqrt()
    }

    /// τ_AC = τ_A + τ_C.
    pub fn single_precision(&self) -> f64 {
        self.tau_a + self.tau_c
    }

    /// d mean(g) / d a0.
    pub fn single_weight(&self) -> f64 {
        self.tau_a / self.single_precision()
    }

    /// τ_ABC.
    pub fn pair_precision(&self) -> f64 {
        (self.tau_a - 2.0 * self.cross() + self.tau_b) / (1.0 - self.rho * self.rho) + self.tau_c
    }

    fn pair_denominator(&self) -> f64 {
        self.tau_a - 2.0 * self.cross() + self.tau_b + (1.0 - self.rho * self.rho) * self.tau_c
    }

    /// Coefficients of (a0, b0, C0) in mean(h).
    pub fn pair_weights(&self) -> (f64, f64, f64) {
        let d = self.pair_denominator();
        (
            (self.tau_a - self.cross()) / d,
            (self.tau_b - self.cross()) / d,
            (1.0 - self.rho * self.rho) * self.tau_c / d,
        )
    }

    /// Covariance of the signal noises (π_A, π_B) given λ.
    pub fn signal_covariance(&self) -> [[f64; 2]; 2] {
        let (sa, sb) = (self.tau_a.sqrt().recip(), self.tau_b.sqrt().recip());
        [[sa * sa, self.rho * sa * sb], [self.rho * sa * sb, sb * sb]]
    }

    /// Full covariance of (π_A, π_B, π); `None` for the flat prior.
    pub fn covariance(&self) -> Option<[[f64; 3]; 3]> {
        let s = self.signal_covariance();
        (self.tau_c > 0.0).then(|| {
            [
                [s[0][0], s[0][1], 0.0],
                [s[1][0], s[1][1], 0.0],
                [0.0, 0.0, 1.0 / self.tau_c],
            ]
        })
    }
}

/// Strips a known prior out of a posterior, leaving the independent signal.
pub fn deprior_signal(
    prior_mean: f64,
    prior_precision: f64,
    posterior_mean: f64,
    posterior_precision: f64,
) -> Result<PlayerSignal> {
    if !(prior_precision >= 0.0 && prior_precision.is_finite() && posterior_precision.is_finite()) {
        return Err(Error::InvalidParameter("precisions must be finite, prior ≥ 0".into()));
    }
    if posterior_precision <= prior_precision {
        return Err(Error::UninformativeSignal {
            prior: prior_precision,
            posterior: posterior_precision,
        });
    }
    let precision = posterior_precision - prior_precision;
    let mean = (posterior_precision * posterior_mean - prior_precision * prior_mean) / precision;
    Ok(PlayerSignal { mean, precision })
}

/// Precision-weighted aggregation of independent normal observations.
pub fn combine_independent(parts: &[(f64, f64)]) -> NormalBelief {
    let precision: f64 = parts.iter().map(|(_, t)| t).sum();
    let mean = parts.iter().map(|(m, t)| m * t).sum::<f64>() / precision;
    NormalBelief { mean, precision }
}

/// Public posterior `g(a)` after Alice's signal `a0`.
pub fn posterior_single(model: &SignalModel, a0: f64) -> NormalBelief {
    let precision = model.single_precision();
    NormalBelief {
        mean: (model.tau_a * a0 + model.tau_c * model.c0) / precision,
        precision,
    }
}

/// Posterior `h(a, b)` given both signals.
pub fn posterior_pair(model: &SignalModel, a0: f64, b0: f64) -> Result<NormalBelief> {
    model.require_nondegenerate()?;
    let (wa, wb, wc) = model.pair_weights();
    Ok(NormalBelief {
        mean: wa * a0 + wb * b0 + wc * model.c0,
        precision: model.pair_precision(),
    })
}

/// Element-wise natural log, mapping lognormal observations to the normal domain.
pub fn lognormal_to_normal(observations: &[f64]) -> Result<Vec<f64>> {
    observations
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if y > 0.0 && y.is_finite() {
                Ok(y.ln())
            } else {
                Err(Error::Domain(format!("observation {i} = {y} is not a positive finite value")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(ta: f64, tb: f64, tc: f64, rho: f64, c0: f64) -> SignalModel {
        SignalModel::new(ta, tb, tc, rho, c0).unwrap()
    }

    #[test]
    fn deprior_examples() {
        let s = deprior_signal(0.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!((s.mean, s.precision), (2.0, 1.0));
        let s = deprior_signal(3.0, 0.0, 1.7, 2.5).unwrap();
        assert_eq!((s.mean, s.precision), (1.7, 2.5));
        let s = deprior_signal(5.0, 2.0, 5.0, 3.0).unwrap();
        assert_eq!((s.mean, s.precision), (5.0, 1.0));
        assert!(matches!(
            deprior_signal(0.0, 2.0, 1.0, 2.0),
            Err(Error::UninformativeSignal { .. })
        ));
    }

    #[test]
    fn deprior_round_trips() {
        let s = deprior_signal(-0.7, 1.3, 2.1, 4.9).unwrap();
        let back = combine_independent(&[(s.mean, s.precision), (-0.7, 1.3)]);
        assert!((back.mean - 2.1).abs() < 1e-12);
        assert!((back.precision - 4.9).abs() < 1e-12);
    }

    #[test]
    fn single_posterior_examples() {
        let g = posterior_single(&model(2.0, 1.0, 0.0, 0.0, 9.0), 1.5);
        assert_eq!((g.mean, g.precision), (1.5, 2.0));
        let g = posterior_single(&model(1.0, 1.0, 1.0, 0.0, 0.0), 2.0);
        assert_eq!((g.mean, g.precision), (1.0, 2.0));
        let g = posterior_single(&model(1.5, 1.0, 0.5, 0.3, 4.0), 4.0);
        assert_eq!((g.mean, g.precision), (4.0, 2.0));
    }

    #[test]
    fn pair_posterior_examples() {
        let h = posterior_pair(&model(1.0, 1.0, 0.0, 0.0, 0.0), 0.0, 2.0).unwrap();
        assert_eq!((h.mean, h.precision), (1.0, 2.0));
        let h = posterior_pair(&model(1.0, 1.0, 0.0, 0.5, 0.0), 0.0, 2.0).unwrap();
        assert!((h.mean - 1.0).abs() < 1e-15);
        assert!((h.precision - 4.0 / 3.0).abs() < 1e-15);
        let m = model(2.0, 0.3, 1.1, -0.6, 0.8);
        let h = posterior_pair(&m, 0.8, 0.8).unwrap();
        assert!((h.mean - 0.8).abs() < 1e-14);
    }

    #[test]
    fn perfect_correlation_is_rejected() {
        let m = model(1.0, 2.0, 0.0, 1.0, 0.0);
        assert!(matches!(posterior_pair(&m, 0.0, 1.0), Err(Error::Degenerate { .. })));
        assert!(SignalModel::new(1.0, 1.0, 0.0, 1.5, 0.0).is_err());
        assert!(SignalModel::new(0.0, 1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn lognormal_adapter() {
        let e = std::f64::consts::E;
        let v = lognormal_to_normal(&[1.0, e, e * e]).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 1.0).abs() < 1e-15 && (v[2] - 2.0).abs() < 1e-15);
        assert!(lognormal_to_normal(&[]).unwrap().is_empty());
        assert!(matches!(lognormal_to_normal(&[1.0, 0.0]), Err(Error::Domain(_))));
        let xs = [0.3, -1.2, 2.5];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.exp()).collect();
        for (a, b) in lognormal_to_normal(&ys).unwrap().iter().zip(xs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_is_block_diagonal() {
        let m = model(4.0, 1.0, 2.0, 0.5, 0.0);
        let c = m.covariance().unwrap();
        assert!((c[0][1] - 0.25).abs() < 1e-15);
        assert_eq!(c[0][2], 0.0);
        assert_eq!(c[2][2], 0.5);
        assert!(model(1.0, 1.0, 0.0, 0.0, 0.0).covariance().is_none());
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn tau() -> impl Strategy<Value = f64> {
        0.05f64..20.0
    }

    proptest! {
        #[test]
        fn independent_signals_update_sequentially(
            ta in tau(), tb in tau(), tc in tau(), c0 in -3.0f64..3.0,
            a0 in -5.0f64..5.0, b0 in -5.0f64..5.0,
        ) {
            let m = SignalModel::new(ta, tb, tc, 0.0, c0).unwrap();
            let g = posterior_single(&m, a0);
            let seq = combine_independent(&[(g.mean, g.precision), (b0, tb)]);
            let h = posterior_pair(&m, a0, b0).unwrap();
            prop_assert!((h.mean - seq.mean).abs() <= 1e-12 * (1.0 + seq.mean.abs()));
            prop_assert!((h.precision - seq.precision).abs() <= 1e-12 * seq.precision);
        }

        #[test]
        fn roles_are_symmetric(
            ta in tau(), tb in tau(), tc in 0.0f64..5.0, rho in -0.99f64..0.99,
            a0 in -5.0f64..5.0, b0 in -5.0f64..5.0,
        ) {
            let m = SignalModel::new(ta, tb, tc, rho, 0.7).unwrap();
            let swapped = SignalModel::new(tb, ta, tc, rho, 0.7).unwrap();
            let h = posterior_pair(&m, a0, b0).unwrap();
            let k = posterior_pair(&swapped, b0, a0).unwrap();
            prop_assert!((h.mean - k.mean).abs() <= 1e-10 * (1.0 + h.mean.abs()));
            prop_assert!((h.precision - k.precision).abs() <= 1e-10 * h.precision);
        }

        #[test]
        fn pair_is_at_least_as_precise(ta in tau(), tb in tau(), tc in 0.0f64..5.0, rho in -0.99f64..0.99) {
            let m = SignalModel::new(ta, tb, tc, rho, 0.0).unwrap();
            prop_assert!(m.pair_precision() >= m.single_precision() * (1.0 - 1e-12));
            let (wa, wb, wc) = m.pair_weights();
            prop_assert!((wa + wb + wc - 1.0).abs() <= 1e-12);
        }
    }
}
