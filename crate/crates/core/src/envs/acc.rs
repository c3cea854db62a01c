//! Leader/follower road environment. The follower chooses a bounded scalar
//! acceleration each cycle and is rewarded for holding the target gap; the
//! leader drives forward with bounded random acceleration and never
//! reverses. Ground-truth violation is a non-positive gap.
//!
//! Positions are reported in window coordinates with the follower anchored,
//! so rendered frames, detections, and symbolic states share one frame of
//! reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::monitor::builtins::{self, AGENT_CLASS, HAZARD_CLASS};
use crate::monitor::{AxisKinematics, MonitorSpec, ObjectMotion, PlantModel};
use crate::state::{
    Action, AffineMap, EnvError, EnvStepResult, Environment, Observation, SymObject, SymbolicState,
};

use super::config::{AccConfig, ConfigError};
use super::render;

#[derive(Debug, Clone)]
pub struct AccEnv {
    cfg: AccConfig,
    rng: ChaCha8Rng,
    monitor: MonitorSpec,
    plant: PlantModel,
    grid: Vec<Action>,
    gap: f64,
    follower_v: f64,
    leader_v: f64,
    steps: usize,
    started: bool,
    done: bool,
    last_centers: Vec<(u8, i64, i64)>,
}

impl AccEnv {
    pub fn new(cfg: AccConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let monitor = builtins::acc_sb(cfg.brake_max, cfg.cycle, cfg.eps_world())
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let plant = PlantModel::new(cfg.cycle, cfg.brake_max, AxisKinematics::ForwardOnly, AGENT_CLASS)
            .with_object(HAZARD_CLASS, ObjectMotion::Bounded { max_speed: cfg.leader_speed_max });
        let (a, b) = (cfg.accel_max, cfg.brake_max);
        let grid = vec![
            Action::Accel1(-b),
            Action::Accel1(-b / 2.0),
            Action::Accel1(0.0),
            Action::Accel1(a / 2.0),
            Action::Accel1(a),
        ];
        Ok(AccEnv {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            monitor,
            plant,
            grid,
            gap: 0.0,
            follower_v: 0.0,
            leader_v: 0.0,
            steps: 0,
            started: false,
            done: true,
            last_centers: Vec::new(),
        })
    }

    pub fn monitor(&self) -> &MonitorSpec {
        &self.monitor
    }

    pub fn plant(&self) -> &PlantModel {
        &self.plant
    }

    pub fn action_grid(&self) -> &[Action] {
        &self.grid
    }

    pub fn config(&self) -> &AccConfig {
        &self.cfg
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn world_map(&self) -> AffineMap {
        let s = self.cfg.px_per_unit();
        AffineMap { sx: s, sy: s, tx: 0.0, ty: self.cfg.frame_h as f64 / 2.0 }
    }

    pub fn last_paste_centers(&self) -> &[(u8, i64, i64)] {
        &self.last_centers
    }

    /// Shaped tracking reward: 1 at the target gap, falling off linearly and
    /// clamped at zero outside the band of one target width.
    pub fn reward_model(gap: f64, target: f64) -> f64 {
        (1.0 - (gap - target).abs() / target).clamp(0.0, 1.0)
    }

    fn render(&mut self) -> Observation {
        if !self.cfg.render {
            return Observation::empty();
        }
        let mut frame = Observation::new(self.cfg.frame_w, self.cfg.frame_h);
        self.last_centers.clear();
        let map = self.world_map();
        let (fx, fy) = map.to_px(self.cfg.follower_anchor, 0.0);
        let c = render::paste(&mut frame, &render::car_striped_v(), fx, fy);
        self.last_centers.push((AGENT_CLASS, c.0, c.1));
        let (lx, ly) = map.to_px(self.cfg.follower_anchor + self.gap, 0.0);
        if lx < frame.width as f64 + 4.0 {
            let c = render::paste(&mut frame, &render::car_striped_h(), lx, ly);
            self.last_centers.push((HAZARD_CLASS, c.0, c.1));
        }
        frame
    }
}

impl Environment for AccEnv {
    fn reset(&mut self) -> Observation {
        self.gap = self.cfg.init_gap;
        self.follower_v = self.cfg.init_speed;
        self.leader_v = self.cfg.init_speed;
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
        let Action::Accel1(a) = action else {
            return Err(EnvError::ActionOutOfBounds("road control is a scalar acceleration".into()));
        };
        if a < -self.cfg.brake_max - 1e-12 || a > self.cfg.accel_max + 1e-12 {
            return Err(EnvError::ActionOutOfBounds(format!(
                "accel {a} outside [-{}, {}]",
                self.cfg.brake_max, self.cfg.accel_max
            )));
        }

        let dt = self.cfg.cycle;
        let (f_adv, f_v) = self.plant.evolve_axis(0.0, self.follower_v, a, dt);
        // Leader accel drawn per cycle, clamped so its speed cap is honored
        // by the same closed-form kinematics.
        let mut la = self.rng.random_range(-self.cfg.leader_accel_bound..=self.cfg.leader_accel_bound);
        la = la.min((self.cfg.leader_speed_max - self.leader_v) / dt);
        let (l_adv, l_v) = self.plant.evolve_axis(0.0, self.leader_v, la, dt);

        self.follower_v = f_v;
        self.leader_v = l_v;
        self.gap += l_adv - f_adv;

        let violated = self.gap <= 0.0;
        let reward = Self::reward_model(self.gap, self.cfg.target_gap);
        self.steps += 1;
        self.done = violated || self.steps >= self.cfg.max_steps;
        Ok(EnvStepResult { observation: self.render(), reward, done: self.done, violated })
    }

    fn true_symbolic_state(&self) -> SymbolicState {
        SymbolicState::new(
            vec![
                SymObject { class: AGENT_CLASS, x: self.cfg.follower_anchor, y: 0.0 },
                SymObject { class: HAZARD_CLASS, x: self.cfg.follower_anchor + self.gap, y: 0.0 },
            ],
            [self.follower_v, 0.0],
        )
    }
}
