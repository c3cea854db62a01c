//! Goal-finding arena: reach the goal disk without touching a hazard.
//! Hazards are hard constraints; touching one ends the episode and counts
//! as a violation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::monitor::builtins;
use crate::monitor::MonitorSpec;
use crate::state::{Action, EnvError, EnvStepResult, Environment, Observation, SymbolicState};

use super::arena::Arena;
use super::config::{ConfigError, GfConfig};

#[derive(Debug, Clone)]
pub struct GfEnv {
    cfg: GfConfig,
    arena: Arena,
    rng: ChaCha8Rng,
    monitor: MonitorSpec,
    grid: Vec<Action>,
    steps: usize,
    started: bool,
    done: bool,
    last_centers: Vec<(u8, i64, i64)>,
}

impl GfEnv {
    pub fn new(cfg: GfConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.arena.validate()?;
        let a = &cfg.arena;
        let monitor =
            builtins::circle_stop_2d(a.accel, a.cycle, a.eps_world(), a.hazard_radius, a.agent_radius)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let grid = Arena::action_grid(a);
        let env = GfEnv {
            arena: Arena::new(a.clone()),
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            monitor,
            grid,
            steps: 0,
            started: false,
            done: true,
            last_centers: Vec::new(),
        };
        let mut probe = env.clone();
        probe.arena.place(&mut probe.rng).map_err(ConfigError::Placement)?;
        Ok(env)
    }

    pub fn monitor(&self) -> &MonitorSpec {
        &self.monitor
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn action_grid(&self) -> &[Action] {
        &self.grid
    }

    pub fn config(&self) -> &GfConfig {
        &self.cfg
    }

    pub fn last_paste_centers(&self) -> &[(u8, i64, i64)] {
        &self.last_centers
    }

    fn check_bounds(&self, action: Action) -> Result<(f64, f64), EnvError> {
        let Action::Accel2(ax, ay) = action else {
            return Err(EnvError::ActionOutOfBounds("arena control is a planar acceleration".into()));
        };
        let a = self.cfg.arena.accel + 1e-12;
        if ax.abs() > a || ay.abs() > a {
            return Err(EnvError::ActionOutOfBounds(format!("accel ({ax}, {ay}) exceeds bound")));
        }
        Ok((ax, ay))
    }

    fn render(&mut self) -> Observation {
        if !self.cfg.arena.render {
            return Observation::empty();
        }
        let mut frame = Observation::new(self.cfg.arena.frame_w, self.cfg.arena.frame_h);
        self.last_centers.clear();
        self.arena.render_base(&mut frame, &mut self.last_centers);
        self.arena.render_agent(&mut frame, &mut self.last_centers);
        frame
    }
}

impl Environment for GfEnv {
    fn reset(&mut self) -> Observation {
        self.arena.place(&mut self.rng).expect("validated at construction");
        self.steps = 0;
        self.started = true;
        self.done = false;
        self.render()
    }

    fn step(&mut self, action: Action) -> Result<EnvStepResult, EnvError> {
        if !self.started {
            return Err(EnvError::StepBeforeReset);
        }
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        let (ax, ay) = self.check_bounds(action)?;
        self.arena.advance(ax, ay);

        let mut reward = self.cfg.reward_step;
        let mut violated = false;
        if self.arena.hazard_hit().is_some() {
            violated = true;
            self.done = true;
        } else if self.arena.goal_reached() {
            reward += self.cfg.reward_goal;
            self.done = true;
        }
        self.steps += 1;
        if self.steps >= self.cfg.arena.max_steps {
            self.done = true;
        }
        Ok(EnvStepResult { observation: self.render(), reward, done: self.done, violated })
    }

    fn true_symbolic_state(&self) -> SymbolicState {
        self.arena.symbolic()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::config::ArenaLayout;

    #[test]
    fn hazard_contact_ends_episode_with_violation() {
        let layout = ArenaLayout {
            spawn: (2.0, 5.0),
            hazards: vec![(5.0, 5.0), (8.0, 2.0), (8.0, 8.0), (2.0, 8.0)],
            goal: (9.0, 5.0),
        };
        let cfg = GfConfig {
            arena: crate::envs::config::ArenaConfig {
                layout: Some(layout),
                ..Default::default()
            },
            ..GfConfig::with_defaults()
        };
        let mut env = GfEnv::new(cfg, 1).unwrap();
        env.reset();
        // Drive straight at the first hazard.
        let mut violated = false;
        for _ in 0..200 {
            let r = env.step(Action::Accel2(1.0, 0.0)).unwrap();
            if r.violated {
                violated = true;
                assert!(r.done);
                break;
            }
            if r.done {
                break;
            }
        }
        assert!(violated);
    }

    #[test]
    fn reaching_goal_pays_and_ends() {
        let layout = ArenaLayout {
            spawn: (2.0, 2.0),
            hazards: vec![(8.0, 8.0)],
            goal: (4.0, 2.0),
        };
        let cfg = GfConfig {
            arena: crate::envs::config::ArenaConfig {
                n_hazards: 1,
                layout: Some(layout),
                ..Default::default()
            },
            ..GfConfig::with_defaults()
        };
        let mut env = GfEnv::new(cfg.clone(), 1).unwrap();
        env.reset();
        let mut reached = false;
        for _ in 0..400 {
            let r = env.step(Action::Accel2(0.5, 0.0)).unwrap();
            if r.done {
                reached = r.reward > 0.5;
                assert!(!r.violated);
                break;
            }
        }
        assert!(reached, "straight run to the goal should pay the goal reward");
    }

    #[test]
    fn out_of_bound_accel_rejected() {
        let mut env = GfEnv::new(GfConfig::with_defaults(), 1).unwrap();
        env.reset();
        assert!(matches!(env.step(Action::Accel2(1.4, 0.0)), Err(EnvError::ActionOutOfBounds(_))));
        assert!(matches!(env.step(Action::Discrete(0)), Err(EnvError::ActionOutOfBounds(_))));
    }
}
