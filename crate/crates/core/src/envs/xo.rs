//! Grid collect/avoid environment: collectibles give +1, hazards give -1
//! and count as violations, every step costs a small penalty, and the
//! episode ends when all collectibles are gone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::monitor::builtins::{self, AGENT_CLASS, HAZARD_CLASS, XO_MOVES};
use crate::monitor::MonitorSpec;
use crate::state::{
    Action, AffineMap, EnvError, EnvStepResult, Environment, Observation, SymObject, SymbolicState,
};

use super::config::{ConfigError, XoConfig};
use super::render;

#[derive(Debug, Clone)]
pub struct XoEnv {
    cfg: XoConfig,
    rng: ChaCha8Rng,
    monitor: MonitorSpec,
    agent: (i64, i64),
    xs: Vec<(i64, i64)>,
    os: Vec<(i64, i64)>,
    steps: usize,
    started: bool,
    done: bool,
    last_centers: Vec<(u8, i64, i64)>,
}

impl XoEnv {
    pub fn new(cfg: XoConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let monitor = builtins::xo_grid(cfg.eps_cells(), XO_MOVES.to_vec())
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let env = XoEnv {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            monitor,
            agent: (0, 0),
            xs: Vec::new(),
            os: Vec::new(),
            steps: 0,
            started: false,
            done: true,
            last_centers: Vec::new(),
        };
        // Fail early if the requested density cannot satisfy the spawn
        // separation; uses a throwaway RNG so the stream is untouched.
        let mut probe = env.clone();
        probe.place().map_err(|e| ConfigError::Placement(e))?;
        Ok(env)
    }

    pub fn monitor(&self) -> &MonitorSpec {
        &self.monitor
    }

    pub fn config(&self) -> &XoConfig {
        &self.cfg
    }

    /// Inflation radius in cells the monitor applies around hazards.
    pub fn inflation(&self) -> i64 {
        self.cfg.eps_cells().ceil() as i64
    }

    fn place(&mut self) -> Result<(), String> {
        let (w, h) = (self.cfg.grid_w as i64, self.cfg.grid_h as i64);
        let infl = self.inflation();
        // All objects keep pairwise Chebyshev distance >= 2: detection
        // peaks then land in non-adjacent heatmap cells, so peak decoding
        // resolves every object and neighboring sprites never composite
        // into a foreign shape.
        let apart = |c: (i64, i64), others: &[(i64, i64)]| {
            others.iter().all(|&(ox, oy)| (c.0 - ox).abs().max((c.1 - oy).abs()) >= 2)
        };
        for _attempt in 0..1000 {
            let mut occupied: Vec<(i64, i64)> = Vec::new();
            let mut os: Vec<(i64, i64)> = Vec::new();
            let mut xs: Vec<(i64, i64)> = Vec::new();
            let mut ok = true;
            for i in 0..self.cfg.n_o + self.cfg.n_x {
                let mut placed = false;
                for _ in 0..200 {
                    let c = (self.rng.random_range(0..w), self.rng.random_range(0..h));
                    if apart(c, &occupied) {
                        occupied.push(c);
                        if i < self.cfg.n_o {
                            os.push(c);
                        } else {
                            xs.push(c);
                        }
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            // Agent spawn: outside every hazard's inflated neighborhood so
            // the stay action is admissible from the start.
            let mut spawn = None;
            for _ in 0..400 {
                let c = (self.rng.random_range(0..w), self.rng.random_range(0..h));
                let clear = apart(c, &occupied)
                    && os
                        .iter()
                        .all(|&(ox, oy)| (c.0 - ox).abs().max((c.1 - oy).abs()) > infl);
                if clear {
                    spawn = Some(c);
                    break;
                }
            }
            if let Some(agent) = spawn {
                self.agent = agent;
                self.xs = xs;
                self.os = os;
                return Ok(());
            }
        }
        Err("grid too dense to place objects with a safe spawn".into())
    }

    fn render(&mut self) -> Observation {
        if !self.cfg.render {
            return Observation::empty();
        }
        let mut frame = Observation::new(self.cfg.frame_w, self.cfg.frame_h);
        self.last_centers.clear();
        let map = self.world_map();
        let x_sprite = render::collect_x();
        for &(x, y) in &self.xs {
            let (px, py) = map.to_px(x as f64, y as f64);
            render::paste(&mut frame, &x_sprite, px, py);
        }
        let o_sprite = render::ring5();
        for &(x, y) in &self.os {
            let (px, py) = map.to_px(x as f64, y as f64);
            let c = render::paste(&mut frame, &o_sprite, px, py);
            self.last_centers.push((HAZARD_CLASS, c.0, c.1));
        }
        let (px, py) = map.to_px(self.agent.0 as f64, self.agent.1 as f64);
        let c = render::paste(&mut frame, &render::agent_plus(), px, py);
        self.last_centers.push((AGENT_CLASS, c.0, c.1));
        frame
    }

    /// Rounded pixel centers used by the last render, per class.
    pub fn last_paste_centers(&self) -> &[(u8, i64, i64)] {
        &self.last_centers
    }

    pub fn world_map(&self) -> AffineMap {
        let cell = self.cfg.cell_px();
        let border = super::config::XO_PX_BORDER;
        AffineMap { sx: cell, sy: cell, tx: border, ty: border }
    }
}

impl Environment for XoEnv {
    fn reset(&mut self) -> Observation {
        self.place().expect("validated at construction");
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
        let Action::Discrete(idx) = action else {
            return Err(EnvError::ActionOutOfBounds("grid moves are discrete".into()));
        };
        if idx >= XO_MOVES.len() {
            return Err(EnvError::ActionOutOfBounds(format!("move index {idx}")));
        }
        let (dx, dy) = XO_MOVES[idx];
        let target = (self.agent.0 + dx as i64, self.agent.1 + dy as i64);
        let in_grid = target.0 >= 0
            && target.1 >= 0
            && target.0 < self.cfg.grid_w as i64
            && target.1 < self.cfg.grid_h as i64;
        if in_grid {
            self.agent = target;
        }

        let mut reward = self.cfg.reward_step;
        let mut violated = false;
        if let Some(i) = self.xs.iter().position(|&c| c == self.agent) {
            self.xs.swap_remove(i);
            reward += self.cfg.reward_x;
        }
        if let Some(i) = self.os.iter().position(|&c| c == self.agent) {
            self.os.swap_remove(i);
            reward += self.cfg.reward_o;
            violated = true;
        }

        self.steps += 1;
        self.done = self.xs.is_empty() || self.steps >= self.cfg.max_steps;
        Ok(EnvStepResult { observation: self.render(), reward, done: self.done, violated })
    }

    fn true_symbolic_state(&self) -> SymbolicState {
        let mut objects =
            vec![SymObject { class: AGENT_CLASS, x: self.agent.0 as f64, y: self.agent.1 as f64 }];
        objects.extend(
            self.os.iter().map(|&(x, y)| SymObject { class: HAZARD_CLASS, x: x as f64, y: y as f64 }),
        );
        SymbolicState::new(objects, [0.0, 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_reset_frame() {
        let mut a = XoEnv::new(XoConfig::default(), 7).unwrap();
        let mut b = XoEnv::new(XoConfig::default(), 7).unwrap();
        assert!(a.reset().bit_eq(&b.reset()));
        let mut c = XoEnv::new(XoConfig::default(), 8).unwrap();
        assert!(!a.reset().bit_eq(&c.reset()));
    }

    #[test]
    fn rejects_bad_actions_and_ordering() {
        let mut env = XoEnv::new(XoConfig::default(), 1).unwrap();
        assert_eq!(env.step(Action::Discrete(0)), Err(EnvError::StepBeforeReset));
        env.reset();
        assert!(matches!(env.step(Action::Discrete(9)), Err(EnvError::ActionOutOfBounds(_))));
        assert!(matches!(env.step(Action::Accel1(0.5)), Err(EnvError::ActionOutOfBounds(_))));
    }

    #[test]
    fn collecting_last_x_ends_with_bonus_minus_penalty() {
        let cfg = XoConfig { n_x: 1, n_o: 0, ..XoConfig::default() };
        let mut env = XoEnv::new(cfg.clone(), 3).unwrap();
        env.reset();
        // Walk straight to the collectible with manual moves.
        let target = env.xs[0];
        let mut last = None;
        for _ in 0..cfg.max_steps {
            let (ax, ay) = env.agent;
            let idx = if target.0 > ax {
                3
            } else if target.0 < ax {
                2
            } else if target.1 > ay {
                1
            } else if target.1 < ay {
                0
            } else {
                4
            };
            let r = env.step(Action::Discrete(idx)).unwrap();
            let done = r.done;
            last = Some(r);
            if done {
                break;
            }
        }
        let last = last.unwrap();
        assert!(last.done);
        assert!((last.reward - (cfg.reward_x + cfg.reward_step)).abs() < 1e-12);
    }

    #[test]
    fn hazard_entry_flags_violation_once() {
        let cfg = XoConfig { n_x: 2, n_o: 1, ..XoConfig::default() };
        let mut env = XoEnv::new(cfg.clone(), 5).unwrap();
        env.reset();
        let target = env.os[0];
        let mut hits = 0;
        for _ in 0..cfg.max_steps {
            let (ax, ay) = env.agent;
            let idx = if target.0 > ax {
                3
            } else if target.0 < ax {
                2
            } else if target.1 > ay {
                1
            } else {
                0
            };
            let r = env.step(Action::Discrete(idx)).unwrap();
            if r.violated {
                hits += 1;
                assert!((r.reward - (cfg.reward_o + cfg.reward_step)).abs() < 1e-12);
                break;
            }
            if r.done {
                break;
            }
        }
        assert_eq!(hits, 1);
        assert!(env.os.is_empty(), "hazard is consumed on entry");
    }

    #[test]
    fn spawn_respects_monitor_inflation() {
        for seed in 0..50 {
            let env = XoEnv::new(XoConfig::default(), seed).unwrap();
            let mut env = env;
            env.reset();
            let infl = env.inflation();
            for &(ox, oy) in &env.os {
                let d = (env.agent.0 - ox).abs().max((env.agent.1 - oy).abs());
                assert!(d > infl, "seed {seed}: spawn inside inflated hazard zone");
            }
        }
    }

    #[test]
    fn replayed_action_sequence_reproduces_rewards() {
        let run = |seed: u64| -> Vec<f64> {
            let mut env = XoEnv::new(XoConfig::default(), seed).unwrap();
            env.reset();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut rewards = Vec::new();
            for _ in 0..40 {
                let a = Action::Discrete(rng.random_range(0..5));
                match env.step(a) {
                    Ok(r) => {
                        rewards.push(r.reward);
                        if r.done {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
            rewards
        };
        assert_eq!(run(7), run(7));
    }
}
