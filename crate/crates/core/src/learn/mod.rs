//! Desk-scale learners and the training/evaluation harness: a uniform
//! random agent, tabular Q-learning on discretized symbolic states, and a
//! linear-softmax policy gradient on downsampled pixels, all runnable with
//! or without the shield.

pub mod discretize;
pub mod linear;
pub mod q;

pub use discretize::state_key;
pub use linear::{LinearAgent, LinearConfig};
pub use q::{QAgent, QConfig};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::batch;
use crate::envs::{make_env, BenchEnv, ConfigError, EnvConfig, SafetyEnv};
use crate::perceive::{DetectorExtractor, Extractor};
use crate::shield::{ShieldError, ShieldedEnv};
use crate::state::{Action, EnvError, EnvStepResult, Environment, Observation, SymbolicState};
use crate::stats::median;

/// Default size of the parallel rollout pool used for frozen-policy
/// evaluation sweeps.
pub const DEFAULT_ROLLOUT_WORKERS: usize = 32;

/// Hyperparameters for running this benchmark under a full-scale
/// clipped-surrogate policy-gradient learner with parallel actors; recorded
/// as configuration defaults for completeness. The desk-scale learners
/// consume only `discount`, and the evaluation pool mirrors `actors`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullScalePgDefaults {
    pub adam_lr: f64,
    pub epochs: usize,
    pub actors: usize,
    pub horizon: usize,
    pub minibatch: usize,
    pub discount: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub grad_norm_clip: f64,
}

impl Default for FullScalePgDefaults {
    fn default() -> Self {
        // lr and clip anneal linearly to zero over a run.
        FullScalePgDefaults {
            adam_lr: 1e-3,
            epochs: 4,
            actors: 32,
            horizon: 64,
            minibatch: 2048,
            discount: 0.99,
            gae_lambda: 0.98,
            clip: 0.1,
            value_coef: 1.0,
            entropy_coef: 0.01,
            grad_norm_clip: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum AgentKind {
    Random,
    Q(QConfig),
    Linear(LinearConfig),
}

impl AgentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Random => "random",
            AgentKind::Q(_) => "q",
            AgentKind::Linear(_) => "linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExtractorSpec {
    Oracle { eps: f64 },
    Detector,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub episodes: usize,
    pub seed: u64,
    pub shield: bool,
    pub extractor: ExtractorSpec,
    pub agent: AgentKind,
}

/// One learning-curve row.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub ret: f64,
    pub steps: u64,
    pub violations: u64,
    pub interventions: u64,
    pub epsilon_greedy: f64,
    pub seed: u64,
}

impl EpisodeRow {
    pub const CSV_HEADER: &'static str =
        "episode,return,steps,violations,interventions,epsilon_greedy,seed";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.episode,
            self.ret,
            self.steps,
            self.violations,
            self.interventions,
            self.epsilon_greedy,
            self.seed
        )
    }
}

/// A frozen policy produced by training.
#[derive(Debug, Clone)]
pub enum TrainedPolicy {
    Random,
    Q { table: HashMap<(u64, usize), f64>, n_actions: usize },
    Linear { weights: Vec<f64>, n_actions: usize, cfg: LinearConfig },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub rows: Vec<EpisodeRow>,
    pub policy: TrainedPolicy,
    pub total_violations: u64,
    pub total_interventions: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Shield(#[from] ShieldError),
}

impl From<EnvError> for TrainError {
    fn from(e: EnvError) -> Self {
        TrainError::Shield(ShieldError::Env(e))
    }
}

/// Derives an independent stream seed from a master seed and a role tag.
pub fn sub_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn build_extractor(spec: &ExtractorSpec, env: &BenchEnv, seed: u64) -> Extractor {
    match spec {
        ExtractorSpec::Oracle { eps } => Extractor::oracle(*eps, seed),
        ExtractorSpec::Detector => {
            Extractor::Detector(DetectorExtractor::new(env.templates(), env.world_map()))
        }
    }
}

fn needs_render(agent: &AgentKind, extractor: &ExtractorSpec) -> bool {
    matches!(agent, AgentKind::Linear(_)) || matches!(extractor, ExtractorSpec::Detector)
}

// Uniform stepping interface over shielded and raw runs.
enum Runner {
    Shielded(Box<ShieldedEnv<BenchEnv>>),
    Raw { env: BenchEnv, extractor: Extractor, last_obs: Observation, cached: Option<SymbolicState> },
}

impl Runner {
    fn reset(&mut self) -> Observation {
        match self {
            Runner::Shielded(s) => s.reset(),
            Runner::Raw { env, last_obs, cached, .. } => {
                let obs = env.reset();
                *last_obs = obs.clone();
                *cached = None;
                obs
            }
        }
    }

    fn symbolic(&mut self) -> SymbolicState {
        match self {
            Runner::Shielded(s) => s.observe_symbolic().clone(),
            Runner::Raw { env, extractor, last_obs, cached } => {
                if cached.is_none() {
                    let truth = env.true_symbolic_state();
                    *cached = Some(extractor.extract(last_obs, &truth));
                }
                cached.clone().unwrap()
            }
        }
    }

    fn step(&mut self, action: Action) -> Result<EnvStepResult, ShieldError> {
        match self {
            Runner::Shielded(s) => s.step(action),
            Runner::Raw { env, last_obs, cached, .. } => {
                let result = env.step(action)?;
                *last_obs = result.observation.clone();
                *cached = None;
                Ok(result)
            }
        }
    }

    fn interventions(&self) -> u64 {
        match self {
            Runner::Shielded(s) => s.interventions(),
            Runner::Raw { .. } => 0,
        }
    }
}

enum AgentImpl {
    Random(ChaCha8Rng),
    Q(QAgent),
    Linear(LinearAgent),
}

/// Trains an agent for `episodes` episodes and returns the learning curve
/// and the frozen policy. Deterministic under a fixed seed (single-worker
/// loop). Rendering is enabled automatically when the agent or extractor
/// needs frames.
pub fn train(env_cfg: &EnvConfig, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_with_monitor(env_cfg, cfg, None)
}

/// [`train`] with the environment's declared monitor replaced, for config
/// files that name or inline a different one.
pub fn train_with_monitor(
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    monitor_override: Option<&crate::monitor::MonitorSpec>,
) -> Result<TrainOutcome, TrainError> {
    let mut env_cfg = env_cfg.clone();
    env_cfg.set_render(needs_render(&cfg.agent, &cfg.extractor));
    let env = make_env(&env_cfg, sub_seed(cfg.seed, 1))?;
    let env_name = env.name();
    let grid = env.action_grid();
    let extractor = build_extractor(&cfg.extractor, &env, sub_seed(cfg.seed, 2));
    let mut runner = if cfg.shield {
        let shielded = match monitor_override {
            Some(m) => ShieldedEnv::new(
                env,
                m.clone(),
                grid.clone(),
                extractor,
                sub_seed(cfg.seed, 3),
            ),
            None => ShieldedEnv::wrap(env, extractor, sub_seed(cfg.seed, 3)),
        };
        Runner::Shielded(Box::new(shielded))
    } else {
        Runner::Raw { env, extractor, last_obs: Observation::empty(), cached: None }
    };

    let mut agent = match &cfg.agent {
        AgentKind::Random => AgentImpl::Random(ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 4))),
        AgentKind::Q(qc) => AgentImpl::Q(QAgent::new(qc.clone(), grid.len(), sub_seed(cfg.seed, 4))),
        AgentKind::Linear(lc) => {
            AgentImpl::Linear(LinearAgent::new(lc.clone(), grid.len(), sub_seed(cfg.seed, 4)))
        }
    };

    let mut rows = Vec::with_capacity(cfg.episodes);
    let mut total_violations = 0u64;
    for episode in 0..cfg.episodes {
        if let AgentImpl::Q(q) = &mut agent {
            q.begin_episode(episode, cfg.episodes);
        }
        let interventions_before = runner.interventions();
        let mut obs = runner.reset();
        let mut ret = 0.0;
        let mut steps = 0u64;
        let mut violations = 0u64;
        loop {
            let (action_idx, q_key) = match &mut agent {
                AgentImpl::Random(rng) => (rng.random_range(0..grid.len()), None),
                AgentImpl::Q(q) => {
                    let key = state_key(env_name, &runner.symbolic());
                    (q.act(key), Some(key))
                }
                AgentImpl::Linear(l) => (l.act(&obs), None),
            };
            let result = runner.step(grid[action_idx])?;
            match &mut agent {
                AgentImpl::Q(q) => {
                    let next_key = state_key(env_name, &runner.symbolic());
                    q.update(q_key.unwrap(), action_idx, result.reward, next_key, result.done);
                }
                AgentImpl::Linear(l) => l.record_reward(result.reward),
                AgentImpl::Random(_) => {}
            }
            ret += result.reward;
            steps += 1;
            violations += u64::from(result.violated);
            obs = result.observation;
            if result.done || steps >= 1_000_000 {
                break;
            }
        }
        if let AgentImpl::Linear(l) = &mut agent {
            l.end_episode();
        }
        let epsilon_greedy = match &agent {
            AgentImpl::Q(q) => q.epsilon(),
            _ => 0.0,
        };
        total_violations += violations;
        rows.push(EpisodeRow {
            episode,
            ret,
            steps,
            violations,
            interventions: runner.interventions() - interventions_before,
            epsilon_greedy,
            seed: cfg.seed,
        });
    }

    let total_interventions = runner.interventions();
    let policy = match agent {
        AgentImpl::Random(_) => TrainedPolicy::Random,
        AgentImpl::Q(q) => {
            let n_actions = q.n_actions();
            TrainedPolicy::Q { table: q.into_table(), n_actions }
        }
        AgentImpl::Linear(l) => {
            let cfg = match &cfg.agent {
                AgentKind::Linear(lc) => lc.clone(),
                _ => unreachable!(),
            };
            let (weights, _, n_actions) = l.into_weights();
            TrainedPolicy::Linear { weights, n_actions, cfg }
        }
    };
    Ok(TrainOutcome { rows, policy, total_violations, total_interventions })
}

fn act_frozen(
    policy: &TrainedPolicy,
    env_name: &str,
    obs: &Observation,
    sym: &SymbolicState,
    grid_len: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    match policy {
        TrainedPolicy::Random => rng.random_range(0..grid_len),
        TrainedPolicy::Q { table, n_actions } => {
            q::greedy_from_table(table, *n_actions, state_key(env_name, sym))
        }
        TrainedPolicy::Linear { weights, n_actions, cfg } => {
            linear::greedy_from_weights(weights, *n_actions, cfg, obs)
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub median_return: f64,
    pub replicate_mean_returns: Vec<f64>,
    pub total_violations: u64,
    pub total_interventions: u64,
    pub episodes_per_replicate: usize,
}

/// Runs `episodes` frozen-policy episodes split over a worker pool of
/// independent environment instances; deterministic in `seed` regardless of
/// thread count.
pub fn run_frozen_episodes(
    policy: &TrainedPolicy,
    env_cfg: &EnvConfig,
    shield: bool,
    extractor: &ExtractorSpec,
    episodes: usize,
    seed: u64,
) -> Result<(Vec<f64>, u64, u64), TrainError> {
    let mut env_cfg = env_cfg.clone();
    let render = matches!(policy, TrainedPolicy::Linear { .. })
        || matches!(extractor, ExtractorSpec::Detector);
    env_cfg.set_render(render);
    let workers = DEFAULT_ROLLOUT_WORKERS.min(episodes.max(1));
    let per_worker: Vec<Result<(Vec<(usize, f64)>, u64, u64), TrainError>> =
        batch::run_indexed(workers, |w| {
            let wseed = sub_seed(seed, 100 + w as u64);
            let env = make_env(&env_cfg, sub_seed(wseed, 1))?;
            let env_name = env.name();
            let grid = env.action_grid();
            let extractor = build_extractor(extractor, &env, sub_seed(wseed, 2));
            let mut runner = if shield {
                Runner::Shielded(Box::new(ShieldedEnv::wrap(env, extractor, sub_seed(wseed, 3))))
            } else {
                Runner::Raw { env, extractor, last_obs: Observation::empty(), cached: None }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(wseed, 4));
            let mut out = Vec::new();
            let mut violations = 0u64;
            for ep in (w..episodes).step_by(workers) {
                let mut obs = runner.reset();
                let mut ret = 0.0;
                let mut steps = 0u64;
                loop {
                    let sym = runner.symbolic();
                    let idx = act_frozen(policy, env_name, &obs, &sym, grid.len(), &mut rng);
                    let r = runner.step(grid[idx])?;
                    ret += r.reward;
                    steps += 1;
                    violations += u64::from(r.violated);
                    obs = r.observation;
                    if r.done || steps >= 1_000_000 {
                        break;
                    }
                }
                out.push((ep, ret));
            }
            Ok((out, violations, runner.interventions()))
        });

    let mut indexed = Vec::with_capacity(episodes);
    let mut violations = 0u64;
    let mut interventions = 0u64;
    for r in per_worker {
        let (pairs, v, i) = r?;
        indexed.extend(pairs);
        violations += v;
        interventions += i;
    }
    indexed.sort_by_key(|&(ep, _)| ep);
    Ok((indexed.into_iter().map(|(_, ret)| ret).collect(), violations, interventions))
}

/// Evaluates a frozen policy over at least four replicates, reporting the
/// median of the replicate mean returns and the total violation count.
pub fn evaluate(
    policy: &TrainedPolicy,
    env_cfg: &EnvConfig,
    shield: bool,
    extractor: &ExtractorSpec,
    episodes: usize,
    replicates: usize,
    seed: u64,
) -> Result<EvalReport, TrainError> {
    let replicates = replicates.max(4);
    let mut replicate_mean_returns = Vec::with_capacity(replicates);
    let mut total_violations = 0u64;
    let mut total_interventions = 0u64;
    for rep in 0..replicates {
        let (returns, violations, interventions) = run_frozen_episodes(
            policy,
            env_cfg,
            shield,
            extractor,
            episodes,
            sub_seed(seed, 7000 + rep as u64),
        )?;
        let mean = if returns.is_empty() {
            0.0
        } else {
            returns.iter().sum::<f64>() / returns.len() as f64
        };
        replicate_mean_returns.push(mean);
        total_violations += violations;
        total_interventions += interventions;
    }
    Ok(EvalReport {
        median_return: median(&replicate_mean_returns),
        replicate_mean_returns,
        total_violations,
        total_interventions,
        episodes_per_replicate: episodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(agent: AgentKind, shield: bool, episodes: usize) -> TrainConfig {
        TrainConfig {
            episodes,
            seed: 7,
            shield,
            extractor: ExtractorSpec::Oracle { eps: 0.0 },
            agent,
        }
    }

    #[test]
    fn shielded_random_grid_run_has_zero_violations() {
        let cfg = EnvConfig::default_for("xo").unwrap();
        let out = train(&cfg, &quick(AgentKind::Random, true, 300)).unwrap();
        assert_eq!(out.total_violations, 0);
        assert_eq!(out.rows.len(), 300);
    }

    #[test]
    fn unshielded_random_grid_run_hits_hazards() {
        let cfg = EnvConfig::default_for("xo").unwrap();
        let out = train(&cfg, &quick(AgentKind::Random, false, 300)).unwrap();
        assert!(out.total_violations > 0);
        assert_eq!(out.total_interventions, 0);
    }

    #[test]
    fn training_is_deterministic_in_seed() {
        let cfg = EnvConfig::default_for("acc").unwrap();
        let a = train(&cfg, &quick(AgentKind::Q(QConfig::default()), true, 50)).unwrap();
        let b = train(&cfg, &quick(AgentKind::Q(QConfig::default()), true, 50)).unwrap();
        let ra: Vec<f64> = a.rows.iter().map(|r| r.ret).collect();
        let rb: Vec<f64> = b.rows.iter().map(|r| r.ret).collect();
        assert_eq!(ra, rb);
    }

    #[test]
    fn csv_row_schema() {
        let row = EpisodeRow {
            episode: 3,
            ret: 1.5,
            steps: 12,
            violations: 0,
            interventions: 2,
            epsilon_greedy: 0.5,
            seed: 9,
        };
        assert_eq!(EpisodeRow::CSV_HEADER.split(',').count(), row.to_csv().split(',').count());
        assert_eq!(row.to_csv(), "3,1.5,12,0,2,0.5,9");
    }

    // Trained road policy beats a random one on the shaped tracking reward
    // under a paired seed.
    #[test]
    fn q_learning_beats_random_on_gap_tracking() {
        let cfg = EnvConfig::default_for("acc").unwrap();
        let trained = train(
            &cfg,
            &TrainConfig {
                episodes: 2000,
                seed: 11,
                shield: true,
                extractor: ExtractorSpec::Oracle { eps: 0.0 },
                agent: AgentKind::Q(QConfig::default()),
            },
        )
        .unwrap();
        let eval_seed = 1234;
        let learned = evaluate(
            &trained.policy,
            &cfg,
            true,
            &ExtractorSpec::Oracle { eps: 0.0 },
            50,
            4,
            eval_seed,
        )
        .unwrap();
        let random = evaluate(
            &TrainedPolicy::Random,
            &cfg,
            true,
            &ExtractorSpec::Oracle { eps: 0.0 },
            50,
            4,
            eval_seed,
        )
        .unwrap();
        assert!(
            learned.median_return > random.median_return,
            "learned {} vs random {}",
            learned.median_return,
            random.median_return
        );
        assert_eq!(learned.total_violations, 0);
    }

    #[test]
    fn linear_agent_trains_on_frames() {
        let cfg = EnvConfig::default_for("xo").unwrap();
        let out = train(
            &cfg,
            &TrainConfig {
                episodes: 30,
                seed: 5,
                shield: true,
                extractor: ExtractorSpec::Oracle { eps: 0.0 },
                agent: AgentKind::Linear(LinearConfig::default()),
            },
        )
        .unwrap();
        assert_eq!(out.total_violations, 0);
        assert!(matches!(out.policy, TrainedPolicy::Linear { .. }));
    }

    #[test]
    fn frozen_evaluation_is_deterministic() {
        let cfg = EnvConfig::default_for("gf").unwrap();
        let spec = ExtractorSpec::Oracle { eps: 0.0 };
        let a = evaluate(&TrainedPolicy::Random, &cfg, true, &spec, 40, 4, 3).unwrap();
        let b = evaluate(&TrainedPolicy::Random, &cfg, true, &spec, 40, 4, 3).unwrap();
        assert_eq!(a.replicate_mean_returns, b.replicate_mean_returns);
        assert_eq!(a.total_violations, 0);
    }
}
