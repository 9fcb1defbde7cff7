use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kld_core::ledger::{Amount, Ledger};
use kld_core::simulator::{run, DebtPath, FeeSpec, RandomEvents, Scenario};
use kld_core::{Dec, GenesisConfig, PolicyParams};

fn scenario(years: u32) -> Scenario {
    let mut s = Scenario::new("bench", 11, years);
    s.debt.path = DebtPath::RandomWalk { step: Dec::from_ratio(1, 20), gdp_growth: Dec::from_ratio(1, 50) };
    s.fees = FeeSpec::Uniform { min_kld: Dec::ZERO, max_kld: Dec::from_int(500_000) };
    s.random = RandomEvents {
        dispute_probability: Dec::from_ratio(1, 5),
        correction_probability: Dec::from_ratio(1, 2),
        pause_probability: Dec::from_ratio(1, 10),
        proposal_probability: Dec::from_ratio(1, 4),
    };
    s
}

fn bench_simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    for years in [5u32, 50] {
        let s = scenario(years);
        g.bench_function(format!("{years}y"), |b| b.iter(|| run(black_box(&s)).unwrap()));
    }
    g.finish();
    let base = Ledger::genesis(&GenesisConfig::table(PolicyParams::default(), 2025)).unwrap();
    c.bench_function("ledger/advance_month", |b| {
        b.iter_batched(|| base.clone(), |mut l| l.advance_month(Amount::ZERO).unwrap(), criterion::BatchSize::SmallInput)
    });
}

criterion_group!(benches, bench_simulation);
criterion_main!(benches);
