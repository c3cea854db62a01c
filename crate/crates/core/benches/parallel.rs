//! Parallel-versus-sequential throughput on the three batch workloads:
//! shielded rollouts, monitor soundness sampling, and template detection.
//! With the `parallel` feature (default), `batch::run_indexed` fans out on
//! rayon; `run_indexed_seq` is the single-thread baseline.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aegis_core::batch;
use aegis_core::envs::{make_env_named, SafetyEnv};
use aegis_core::monitor::builtins::{self, AGENT_CLASS, HAZARD_CLASS};
use aegis_core::perceive::{template_detect, Extractor, DEFAULT_STRIDE, DEFAULT_TAU};
use aegis_core::shield::{run_episode, ShieldedEnv};
use aegis_core::state::{Action, Environment, SymObject, SymbolicState};

fn rollout_batch(n_episodes: usize, parallel: bool) -> u64 {
    let run_one = |i: usize| -> u64 {
        let mut cfg = aegis_core::envs::EnvConfig::default_for("gf").unwrap();
        cfg.set_render(false);
        let env = aegis_core::envs::make_env(&cfg, 9_000 + i as u64).unwrap();
        let mut shielded = ShieldedEnv::wrap(env, Extractor::oracle(0.0, i as u64), 77);
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let grid = shielded.grid().to_vec();
        let mut policy = move |_: &aegis_core::state::Observation| grid[rng.random_range(0..25)];
        let episode = run_episode(&mut policy, &mut shielded, 100).unwrap();
        episode.metrics.steps
    };
    let steps: Vec<u64> = if parallel {
        batch::run_indexed(n_episodes, run_one)
    } else {
        batch::run_indexed_seq(n_episodes, run_one)
    };
    steps.iter().sum()
}

fn soundness_batch(n_samples: usize, parallel: bool) -> usize {
    let monitor = builtins::circle_stop_2d(1.0, 0.1, 0.3774, 0.6, 0.3).unwrap();
    let run_chunk = |c: usize| -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(c as u64);
        let mut admitted = 0usize;
        for _ in 0..n_samples / 16 {
            let d: f64 = rng.random_range(0.9..6.0);
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let state = SymbolicState::new(
                vec![
                    SymObject { class: AGENT_CLASS, x: 0.0, y: 0.0 },
                    SymObject { class: HAZARD_CLASS, x: d * angle.cos(), y: d * angle.sin() },
                ],
                [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
            );
            let action = Action::Accel2(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            admitted += usize::from(monitor.eval(&state, &action));
        }
        admitted
    };
    let counts: Vec<usize> = if parallel {
        batch::run_indexed(16, run_chunk)
    } else {
        batch::run_indexed_seq(16, run_chunk)
    };
    counts.iter().sum()
}

fn detection_batch(n_frames: usize, parallel: bool) -> usize {
    let run_one = |k: usize| -> usize {
        let mut env = make_env_named("gf", 80_000 + k as u64).unwrap();
        let frame = env.reset();
        let z = template_detect(&frame, &env.templates(), DEFAULT_STRIDE, DEFAULT_TAU);
        aegis_core::perceive::decode_peaks(&z, DEFAULT_TAU).len()
    };
    let counts: Vec<usize> = if parallel {
        batch::run_indexed(n_frames, run_one)
    } else {
        batch::run_indexed_seq(n_frames, run_one)
    };
    counts.iter().sum()
}

fn bench_batches(c: &mut Criterion) {
    let mut group = c.benchmark_group("shielded_rollouts");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter_batched(|| (), |_| rollout_batch(64, false), BatchSize::SmallInput)
    });
    group.bench_function("parallel", |b| {
        b.iter_batched(|| (), |_| rollout_batch(64, true), BatchSize::SmallInput)
    });
    group.finish();

    let mut group = c.benchmark_group("monitor_sampling");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| soundness_batch(160_000, false)));
    group.bench_function("parallel", |b| b.iter(|| soundness_batch(160_000, true)));
    group.finish();

    let mut group = c.benchmark_group("template_detection");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| detection_batch(32, false)));
    group.bench_function("parallel", |b| b.iter(|| detection_batch(32, true)));
    group.finish();
}

criterion_group!(benches, bench_batches);
criterion_main!(benches);
