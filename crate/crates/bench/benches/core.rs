use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use promptcast_core::amm::{self, Order, SessionConfig};
use promptcast_core::discounting::required_ratio_numeric;
use promptcast_core::truthfulness::classify;
use promptcast_core::{
    AbaGame, DiscountSchedule, MarketHeader, MarketState, NormalBelief, ScoringRule, SearchGrid, SignalModel,
    TradeLog,
};

fn grid() -> Vec<SignalModel> {
    let mut out = Vec::new();
    for i in 1..40 {
        let rho = (i as f64 - 20.0) / 20.0;
        for tau_a in [0.25, 1.0, 4.0] {
            for tau_c in [0.0, 0.5, 2.0] {
                out.push(SignalModel::new(tau_a, 1.0, tau_c, rho, 0.0).unwrap());
            }
        }
    }
    out
}

fn truthfulness(c: &mut Criterion) {
    let models = grid();
    for rule in [ScoringRule::Logarithmic, ScoringRule::Quadratic] {
        c.bench_function(&format!("classify_{rule:?}_grid_351"), |b| {
            b.iter(|| models.iter().filter(|m| classify(rule, black_box(m)).globally_truthful).count())
        });
    }
    let model = SignalModel::new(1.0, 1.0, 0.5, -0.6, 0.0).unwrap();
    c.bench_function("required_ratio_numeric_quadratic", |b| {
        b.iter(|| required_ratio_numeric(ScoringRule::Quadratic, black_box(&model), &SearchGrid::default()).unwrap())
    });
}

fn game(c: &mut Criterion) {
    let model = SignalModel::new(1.0, 1.0, 0.01, -0.8, 0.0).unwrap();
    let game = AbaGame::new(model, ScoringRule::Logarithmic, &DiscountSchedule::constant(1.0)).unwrap();
    c.bench_function("deviation_gain_1e4_rollouts", |b| b.iter(|| game.deviation_gain(black_box(1.0), 10_000, 7)));
    let quad = AbaGame::new(model, ScoringRule::Quadratic, &DiscountSchedule::constant(1.0)).unwrap();
    c.bench_function("best_response_quadratic", |b| b.iter(|| quad.best_response(black_box(10.0))));
}

fn market(c: &mut Criterion) {
    let prior = NormalBelief::new(0.0, 1.0).unwrap();
    let header = MarketHeader::standard(prior, DiscountSchedule::constant(1.0)).unwrap();
    let target = Order::Belief(NormalBelief::new(0.3, 5.0).unwrap());
    c.bench_function("belief_trade_512_bins", |b| {
        b.iter_batched(
            || MarketState::open(header.clone()).unwrap(),
            |mut m| m.trade("t", &target, 1).map(|r| r.cost),
            BatchSize::SmallInput,
        )
    });

    let mut state = MarketState::open(header.clone()).unwrap();
    for (i, mean) in [0.3, -0.2, 0.5, 0.1].into_iter().enumerate() {
        let order = Order::Belief(NormalBelief::new(mean, 2.0 + i as f64).unwrap());
        state.trade(&format!("t{i}"), &order, i as u64 + 1).unwrap();
    }
    let log = TradeLog::from_state(&state, Some(0.25));
    c.bench_function("replay_4_trades", |b| b.iter(|| amm::replay(black_box(&log)).unwrap()));

    let cfg = SessionConfig { signal_precision: 4.0, sessions: 1_000, seed: 1 };
    c.bench_function("simulate_1e3_sessions", |b| b.iter(|| amm::simulate_sessions(&header, black_box(&cfg))));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = truthfulness, game, market
}
criterion_main!(benches);
