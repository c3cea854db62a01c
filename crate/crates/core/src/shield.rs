//! Action shielding: wrap an environment so every executed action is
//! admitted by the controller monitor on the extracted symbolic state.
//! Monitor-rejected actions are replaced by a uniform draw from the
//! admitted set; the substitution RNG is a stream of its own, so a policy
//! that never attempts a rejected action sees the exact unshielded
//! trajectory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thiserror::Error;

use crate::envs::SafetyEnv;
use crate::monitor::MonitorSpec;
use crate::perceive::Extractor;
use crate::state::{Action, EnvError, EnvStepResult, Environment, Observation, SymbolicState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShieldError {
    /// No candidate action is admitted in the current state. Shipped
    /// environment/monitor pairs never raise this; it signals a broken
    /// pairing (or a deliberately adversarial one in tests).
    #[error("no safe action available in the current state")]
    EmptySafeSet,
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Record of the most recent substitution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Substitution {
    pub attempted: Action,
    pub executed: Action,
}

/// An environment wrapped with a monitor, an extractor, and a candidate
/// action grid.
#[derive(Debug, Clone)]
pub struct ShieldedEnv<E: Environment> {
    inner: E,
    monitor: MonitorSpec,
    grid: Vec<Action>,
    extractor: Extractor,
    rng: ChaCha8Rng,
    steps: u64,
    interventions: u64,
    last_obs: Observation,
    cached_symbolic: Option<SymbolicState>,
    last_substitution: Option<Substitution>,
}

impl<E: Environment> ShieldedEnv<E> {
    pub fn new(
        inner: E,
        monitor: MonitorSpec,
        grid: Vec<Action>,
        extractor: Extractor,
        seed: u64,
    ) -> Self {
        ShieldedEnv {
            inner,
            monitor,
            grid,
            extractor,
            rng: ChaCha8Rng::seed_from_u64(seed),
            steps: 0,
            interventions: 0,
            last_obs: Observation::empty(),
            cached_symbolic: None,
            last_substitution: None,
        }
    }

    pub fn reset(&mut self) -> Observation {
        let obs = self.inner.reset();
        self.last_obs = obs.clone();
        self.cached_symbolic = None;
        self.last_substitution = None;
        obs
    }

    /// The symbolic state the shield will use for the next decision,
    /// extracting it if it has not been computed for this observation yet.
    pub fn observe_symbolic(&mut self) -> &SymbolicState {
        if self.cached_symbolic.is_none() {
            let truth = self.inner.true_symbolic_state();
            self.cached_symbolic = Some(self.extractor.extract(&self.last_obs, &truth));
        }
        self.cached_symbolic.as_ref().unwrap()
    }

    /// Executes `action` if the monitor admits it; otherwise executes a
    /// uniform draw from the admitted subset of the grid and counts an
    /// intervention. Reward and observation come from the executed action.
    pub fn step(&mut self, action: Action) -> Result<EnvStepResult, ShieldError> {
        self.observe_symbolic();
        let state = self.cached_symbolic.take().unwrap();
        let executed = if self.monitor.eval(&state, &action) {
            action
        } else {
            let safe = self.monitor.safe_action_set(&state, &self.grid);
            if safe.is_empty() {
                return Err(ShieldError::EmptySafeSet);
            }
            let pick = safe[self.rng.random_range(0..safe.len())];
            self.interventions += 1;
            self.last_substitution = Some(Substitution { attempted: action, executed: pick });
            pick
        };
        self.steps += 1;
        let result = self.inner.step(executed)?;
        self.last_obs = result.observation.clone();
        Ok(result)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn interventions(&self) -> u64 {
        self.interventions
    }

    pub fn reset_counters(&mut self) {
        self.steps = 0;
        self.interventions = 0;
    }

    pub fn last_substitution(&self) -> Option<Substitution> {
        self.last_substitution
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }

    pub fn monitor(&self) -> &MonitorSpec {
        &self.monitor
    }

    pub fn grid(&self) -> &[Action] {
        &self.grid
    }
}

impl<E: SafetyEnv> ShieldedEnv<E> {
    /// Wraps a benchmark environment with its own declared monitor and grid.
    pub fn wrap(env: E, extractor: Extractor, seed: u64) -> Self {
        let monitor = env.monitor().clone();
        let grid = env.action_grid();
        Self::new(env, monitor, grid, extractor, seed)
    }
}

/// One step of a recorded trajectory.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub observation: Observation,
    pub attempted: Action,
    pub executed: Action,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeMetrics {
    pub ret: f64,
    pub steps: u64,
    pub interventions: u64,
    pub violations: u64,
}

impl EpisodeMetrics {
    pub const CSV_HEADER: &'static str = "episode,return,steps,interventions,violations,seed";

    pub fn to_csv(&self, episode: usize, seed: u64) -> String {
        format!(
            "{episode},{},{},{},{},{seed}",
            self.ret, self.steps, self.interventions, self.violations
        )
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub trajectory: Vec<StepRecord>,
    pub metrics: EpisodeMetrics,
}

/// Runs one episode of at most `max_steps` steps under `policy`, which maps
/// observations to attempted actions. Returns the trajectory and metrics.
pub fn run_episode<E: Environment>(
    policy: &mut dyn FnMut(&Observation) -> Action,
    env: &mut ShieldedEnv<E>,
    max_steps: usize,
) -> Result<EpisodeResult, ShieldError> {
    let mut obs = env.reset();
    let start_interventions = env.interventions();
    let mut trajectory = Vec::new();
    let mut metrics = EpisodeMetrics::default();
    for _ in 0..max_steps {
        let attempted = policy(&obs);
        let before = env.interventions();
        let result = env.step(attempted)?;
        let executed = if env.interventions() > before {
            env.last_substitution().expect("intervention recorded").executed
        } else {
            attempted
        };
        metrics.ret += result.reward;
        metrics.steps += 1;
        metrics.interventions = env.interventions() - start_interventions;
        metrics.violations += result.violated as u64;
        trajectory.push(StepRecord {
            observation: obs,
            attempted,
            executed,
            reward: result.reward,
        });
        obs = result.observation;
        if result.done {
            break;
        }
    }
    Ok(EpisodeResult { trajectory, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::make_env_named;
    use crate::monitor::{BindingSet, MonitorSpec};
    use crate::state::{SymObject, SymbolicState};
    use std::collections::BTreeMap;

    /// Static test environment: nothing moves, every step pays 1.
    #[derive(Debug, Clone)]
    struct StaticEnv {
        started: bool,
    }

    impl Environment for StaticEnv {
        fn reset(&mut self) -> Observation {
            self.started = true;
            Observation::empty()
        }

        fn step(&mut self, _action: Action) -> Result<EnvStepResult, EnvError> {
            if !self.started {
                return Err(EnvError::StepBeforeReset);
            }
            Ok(EnvStepResult {
                observation: Observation::empty(),
                reward: 1.0,
                done: false,
                violated: false,
            })
        }

        fn true_symbolic_state(&self) -> SymbolicState {
            SymbolicState::new(vec![SymObject { class: 0, x: 0.0, y: 0.0 }], [0.0, 0.0])
        }
    }

    /// Monitor admitting only discrete actions with index >= 2.
    fn index_monitor() -> MonitorSpec {
        MonitorSpec::new(
            "index_ge_2",
            "ax >= 2",
            BTreeMap::new(),
            BindingSet::global(0, vec![("ax".into(), crate::monitor::VarSource::ActionX)])
                .with_move_deltas((0..5).map(|i| (i as f64, 0.0)).collect()),
        )
        .unwrap()
    }

    fn never_monitor() -> MonitorSpec {
        MonitorSpec::new("never", "1 < 0", BTreeMap::new(), BindingSet::global(0, vec![])).unwrap()
    }

    fn shielded_static(monitor: MonitorSpec) -> ShieldedEnv<StaticEnv> {
        let grid: Vec<Action> = (0..5).map(Action::Discrete).collect();
        ShieldedEnv::new(StaticEnv { started: false }, monitor, grid, Extractor::oracle(0.0, 9), 42)
    }

    #[test]
    fn safe_action_passes_through_unchanged() {
        let mut env = shielded_static(index_monitor());
        env.reset();
        env.step(Action::Discrete(3)).unwrap();
        assert_eq!(env.interventions(), 0);
        assert_eq!(env.last_substitution(), None);
    }

    #[test]
    fn unsafe_action_substituted_uniformly() {
        let mut env = shielded_static(index_monitor());
        env.reset();
        let mut counts = [0u64; 5];
        let trials = 10_000;
        for _ in 0..trials {
            env.step(Action::Discrete(0)).unwrap();
            let sub = env.last_substitution().unwrap();
            assert_eq!(sub.attempted, Action::Discrete(0));
            let Action::Discrete(i) = sub.executed else { panic!() };
            assert!(i >= 2, "substitute must come from the admitted set");
            counts[i] += 1;
        }
        assert_eq!(env.interventions(), trials);
        // Three admitted actions: each frequency within 1/3 +- 0.02.
        for &c in &counts[2..] {
            let f = c as f64 / trials as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.02, "frequency {f}");
        }
    }

    #[test]
    fn two_action_substitution_frequency() {
        // Admitted set of exactly two actions: frequencies 0.5 +- 0.02.
        let monitor = MonitorSpec::new(
            "index_ge_3",
            "ax >= 3",
            BTreeMap::new(),
            BindingSet::global(0, vec![("ax".into(), crate::monitor::VarSource::ActionX)])
                .with_move_deltas((0..5).map(|i| (i as f64, 0.0)).collect()),
        )
        .unwrap();
        let mut env = shielded_static(monitor);
        env.reset();
        let mut counts = [0u64; 5];
        let trials = 10_000;
        for _ in 0..trials {
            env.step(Action::Discrete(1)).unwrap();
            let Action::Discrete(i) = env.last_substitution().unwrap().executed else { panic!() };
            counts[i] += 1;
        }
        for &c in &counts[3..] {
            let f = c as f64 / trials as f64;
            assert!((f - 0.5).abs() < 0.02, "frequency {f}");
        }
    }

    #[test]
    fn empty_safe_set_is_reported() {
        let mut env = shielded_static(never_monitor());
        env.reset();
        assert_eq!(env.step(Action::Discrete(0)), Err(ShieldError::EmptySafeSet));
    }

    #[test]
    fn zero_step_episode() {
        let mut env = shielded_static(index_monitor());
        let result = run_episode(&mut |_| Action::Discrete(4), &mut env, 0).unwrap();
        assert_eq!(result.metrics.ret, 0.0);
        assert_eq!(result.metrics.interventions, 0);
        assert!(result.trajectory.is_empty());
    }

    // A policy that never attempts a rejected action sees trajectories
    // identical to the raw environment under the same seed.
    #[test]
    fn transparent_for_safe_policies() {
        for name in ["xo", "gf"] {
            let mut raw = make_env_named(name, 1234).unwrap();
            let shielded_inner = make_env_named(name, 1234).unwrap();
            let brake = match name {
                "xo" => Action::Discrete(4),
                _ => Action::Accel2(0.0, 0.0),
            };
            let mut shielded = ShieldedEnv::wrap(shielded_inner, Extractor::oracle(0.0, 5), 77);
            // Standing still (grid) or zero acceleration from rest (arena)
            // is always admitted from a valid spawn.
            let a = raw.reset();
            let b = shielded.reset();
            assert!(a.bit_eq(&b));
            for _ in 0..30 {
                let ra = raw.step(brake).unwrap();
                let rb = shielded.step(brake).unwrap();
                assert!(ra.observation.bit_eq(&rb.observation), "{name}");
                assert_eq!(ra.reward, rb.reward);
                assert_eq!(shielded.interventions(), 0);
                if ra.done || rb.done {
                    assert_eq!(ra.done, rb.done);
                    break;
                }
            }
        }
    }
}
