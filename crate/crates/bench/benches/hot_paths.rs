use std::hint::black_box;

use coinsert::harness::episode::{admittance_controller, start_episode, step_with_human};
use coinsert::harness::{mann_whitney_u, run_episode, Alternative, EpisodeOptions};
use coinsert::pgppo::GaussianPolicy;
use coinsert::sim::OBS_DIM;
use coinsert::{Config, Twist4};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sim(c: &mut Criterion) {
    let cfg = Config::default();
    c.bench_function("env step with operator", |b| {
        b.iter_batched(
            || start_episode(&cfg, 7).unwrap(),
            |(mut env, human, _)| {
                for _ in 0..100 {
                    step_with_human(&mut env, &human, Twist4::new(0.0, 0.02, 0.0, 0.0)).unwrap();
                }
                env
            },
            BatchSize::SmallInput,
        )
    });
    c.bench_function("admittance episode", |b| {
        let mut ac = admittance_controller(&cfg);
        let mut seed = 0;
        b.iter(|| {
            seed += 1;
            run_episode(&cfg, seed, &mut ac, EpisodeOptions::default()).unwrap()
        })
    });
}

fn policy(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pol = GaussianPolicy::new(64, -1.2, &mut rng);
    let obs: [f64; OBS_DIM] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    c.bench_function("policy sample", |b| b.iter(|| pol.sample(black_box(&obs), &mut rng)));

    let n = 256;
    let states = Array2::from_shape_fn((n, OBS_DIM), |_| rng.random_range(-1.0..1.0));
    let actions = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0));
    let weights = vec![1.0 / n as f64; n];
    c.bench_function("policy minibatch gradient (256)", |b| {
        b.iter(|| {
            let ev = pol.evaluate(states.view(), actions.view());
            pol.weighted_grad(&ev, actions.view(), &weights)
        })
    });
}

fn stats(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let small: Vec<f64> = (0..12).map(|_| rng.random()).collect();
    let (a, b) = small.split_at(6);
    c.bench_function("mann-whitney exact 6+6", |bn| bn.iter(|| mann_whitney_u(a, b, Alternative::ALess).unwrap()));
    let big: Vec<f64> = (0..20_000).map(|_| rng.random()).collect();
    let (a, b) = big.split_at(10_000);
    c.bench_function("mann-whitney normal 10k+10k", |bn| bn.iter(|| mann_whitney_u(a, b, Alternative::ALess).unwrap()));
}

criterion_group!(benches, sim, policy, stats);
criterion_main!(benches);
