//! Scoring rules, belief updates and incentive analysis for sequential
//! forecasting games and discounted market scoring rules.

pub mod amm;
pub mod beliefs;
pub mod discounting;
pub mod error;
pub mod game;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod scoring;
pub mod truthfulness;

pub use amm::{MarketHeader, MarketState, TradeLog, TradeRecord};
pub use beliefs::{PlayerSignal, SignalModel};
pub use discounting::{DiscountSchedule, SearchGrid};
pub use error::{Error, Result};
pub use game::{AbaGame, ForumSchedule, Mechanism, SlotWeights};
pub use scoring::{NormalBelief, ScoringRule};
pub use truthfulness::TruthfulnessVerdict;
