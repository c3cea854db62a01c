//! The benchmark environments, each carrying its declared monitor, plant
//! model, discretized action grid, and rendering assets.

pub mod acc;
pub mod arena;
pub mod config;
pub mod gf;
pub mod pm;
pub mod render;
pub mod xo;

pub use acc::AccEnv;
pub use config::{
    AccConfig, ArenaConfig, ArenaLayout, ConfigError, EnvConfig, GfConfig, PmConfig, XoConfig,
};
pub use gf::GfEnv;
pub use pm::PmEnv;
pub use xo::XoEnv;

use crate::monitor::builtins::{AGENT_CLASS, HAZARD_CLASS};
use crate::monitor::{MonitorSpec, PlantModel};
use crate::state::{
    Action, AffineMap, EnvError, EnvStepResult, Environment, Observation, Sprite, SymbolicState,
};

/// Everything a shield or harness needs from an environment beyond stepping:
/// the declared monitor, plant, action grid, perception geometry, and
/// templates.
pub trait SafetyEnv: Environment {
    fn name(&self) -> &'static str;
    fn monitor(&self) -> &MonitorSpec;
    /// None for purely discrete dynamics.
    fn plant(&self) -> Option<&PlantModel>;
    fn action_grid(&self) -> Vec<Action>;
    fn world_map(&self) -> AffineMap;
    /// Monitor margin in world units (cells for the grid task).
    fn declared_eps(&self) -> f64;
    fn safety_classes(&self) -> &'static [u8] {
        &[AGENT_CLASS, HAZARD_CLASS]
    }
    /// Upper bound on simultaneously present safety-relevant objects.
    fn max_objects(&self) -> usize;
    fn templates(&self) -> Vec<(u8, Sprite)>;
    fn frame_size(&self) -> (usize, usize);
    fn render_enabled(&self) -> bool;
    /// Rounded pixel centers pasted by the most recent render, per class.
    fn last_paste_centers(&self) -> Vec<(u8, i64, i64)>;
}

/// Environment selector shared by the runner, config files, and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    Xo,
    Acc,
    Gf,
    Pm,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [EnvKind::Xo, EnvKind::Acc, EnvKind::Gf, EnvKind::Pm];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Xo => "xo",
            EnvKind::Acc => "acc",
            EnvKind::Gf => "gf",
            EnvKind::Pm => "pm",
        }
    }

    pub fn parse(s: &str) -> Option<EnvKind> {
        match s {
            "xo" => Some(EnvKind::Xo),
            "acc" => Some(EnvKind::Acc),
            "gf" => Some(EnvKind::Gf),
            "pm" => Some(EnvKind::Pm),
            _ => None,
        }
    }
}

/// A constructed benchmark environment.
#[derive(Debug, Clone)]
pub enum BenchEnv {
    Xo(XoEnv),
    Acc(AccEnv),
    Gf(GfEnv),
    Pm(PmEnv),
}

macro_rules! each_env {
    ($self:expr, $e:ident => $body:expr) => {
        match $self {
            BenchEnv::Xo($e) => $body,
            BenchEnv::Acc($e) => $body,
            BenchEnv::Gf($e) => $body,
            BenchEnv::Pm($e) => $body,
        }
    };
}

/// Builds an environment from its configuration and seed.
pub fn make_env(cfg: &EnvConfig, seed: u64) -> Result<BenchEnv, ConfigError> {
    Ok(match cfg {
        EnvConfig::Xo(c) => BenchEnv::Xo(XoEnv::new(c.clone(), seed)?),
        EnvConfig::Acc(c) => BenchEnv::Acc(AccEnv::new(c.clone(), seed)?),
        EnvConfig::Gf(c) => BenchEnv::Gf(GfEnv::new(c.clone(), seed)?),
        EnvConfig::Pm(c) => BenchEnv::Pm(PmEnv::new(c.clone(), seed)?),
    })
}

/// Default-configured environment by name.
pub fn make_env_named(name: &str, seed: u64) -> Result<BenchEnv, ConfigError> {
    let cfg = EnvConfig::default_for(name)
        .ok_or_else(|| ConfigError::Invalid(format!("unknown environment `{name}`")))?;
    make_env(&cfg, seed)
}

impl Environment for BenchEnv {
    fn reset(&mut self) -> Observation {
        each_env!(self, e => e.reset())
    }

    fn step(&mut self, action: Action) -> Result<EnvStepResult, EnvError> {
        each_env!(self, e => e.step(action))
    }

    fn true_symbolic_state(&self) -> SymbolicState {
        each_env!(self, e => e.true_symbolic_state())
    }
}

impl SafetyEnv for BenchEnv {
    fn name(&self) -> &'static str {
        match self {
            BenchEnv::Xo(_) => "xo",
            BenchEnv::Acc(_) => "acc",
            BenchEnv::Gf(_) => "gf",
            BenchEnv::Pm(_) => "pm",
        }
    }

    fn monitor(&self) -> &MonitorSpec {
        each_env!(self, e => e.monitor())
    }

    fn plant(&self) -> Option<&PlantModel> {
        match self {
            BenchEnv::Xo(_) => None,
            BenchEnv::Acc(e) => Some(e.plant()),
            BenchEnv::Gf(e) => Some(&e.arena().plant),
            BenchEnv::Pm(e) => Some(&e.arena().plant),
        }
    }

    fn action_grid(&self) -> Vec<Action> {
        match self {
            BenchEnv::Xo(_) => (0..5).map(Action::Discrete).collect(),
            BenchEnv::Acc(e) => e.action_grid().to_vec(),
            BenchEnv::Gf(e) => e.action_grid().to_vec(),
            BenchEnv::Pm(e) => e.action_grid().to_vec(),
        }
    }

    fn world_map(&self) -> AffineMap {
        match self {
            BenchEnv::Xo(e) => e.world_map(),
            BenchEnv::Acc(e) => e.world_map(),
            BenchEnv::Gf(e) => e.arena().world_map(),
            BenchEnv::Pm(e) => e.arena().world_map(),
        }
    }

    fn declared_eps(&self) -> f64 {
        match self {
            BenchEnv::Xo(e) => e.config().eps_cells(),
            BenchEnv::Acc(e) => e.config().eps_world(),
            BenchEnv::Gf(e) => e.config().arena.eps_world(),
            BenchEnv::Pm(e) => e.config().arena.eps_world(),
        }
    }

    fn max_objects(&self) -> usize {
        match self {
            BenchEnv::Xo(e) => 1 + e.config().n_o,
            BenchEnv::Acc(_) => 2,
            BenchEnv::Gf(e) => 1 + e.config().arena.n_hazards,
            BenchEnv::Pm(e) => 1 + e.config().arena.n_hazards,
        }
    }

    fn templates(&self) -> Vec<(u8, Sprite)> {
        // Small sprites carry a transparent border as templates so the dark
        // surround separates cross-class shapes; see `render::padded`.
        match self {
            BenchEnv::Xo(_) => vec![
                (AGENT_CLASS, render::padded(&render::agent_plus(), 2)),
                (HAZARD_CLASS, render::padded(&render::ring5(), 2)),
            ],
            BenchEnv::Acc(_) => vec![
                (AGENT_CLASS, render::car_striped_v()),
                (HAZARD_CLASS, render::car_striped_h()),
            ],
            BenchEnv::Gf(_) | BenchEnv::Pm(_) => vec![
                (AGENT_CLASS, render::padded(&render::agent_plus(), 2)),
                (HAZARD_CLASS, render::padded(&render::disk9(), 1)),
            ],
        }
    }

    fn frame_size(&self) -> (usize, usize) {
        match self {
            BenchEnv::Xo(e) => (e.config().frame_w, e.config().frame_h),
            BenchEnv::Acc(e) => (e.config().frame_w, e.config().frame_h),
            BenchEnv::Gf(e) => (e.config().arena.frame_w, e.config().arena.frame_h),
            BenchEnv::Pm(e) => (e.config().arena.frame_w, e.config().arena.frame_h),
        }
    }

    fn render_enabled(&self) -> bool {
        match self {
            BenchEnv::Xo(e) => e.config().render,
            BenchEnv::Acc(e) => e.config().render,
            BenchEnv::Gf(e) => e.config().arena.render,
            BenchEnv::Pm(e) => e.config().arena.render,
        }
    }

    fn last_paste_centers(&self) -> Vec<(u8, i64, i64)> {
        each_env!(self, e => e.last_paste_centers().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_envs_construct_and_reset() {
        for kind in EnvKind::ALL {
            let mut env = make_env_named(kind.name(), 7).unwrap();
            let obs = env.reset();
            let (w, h) = env.frame_size();
            assert_eq!((obs.width, obs.height), (w, h), "{}", kind.name());
            let state = env.true_symbolic_state();
            state.validate(env.safety_classes(), env.max_objects()).unwrap();
        }
    }

    #[test]
    fn unknown_env_name_is_an_error() {
        assert!(make_env_named("nope", 0).is_err());
    }

    // Rendering an object at symbolic (x, y) puts its sprite center within
    // half a pixel of the affine image of (x, y).
    #[test]
    fn frame_symbolic_consistency() {
        for kind in EnvKind::ALL {
            let mut env = make_env_named(kind.name(), 21).unwrap();
            env.reset();
            let map = env.world_map();
            let state = env.true_symbolic_state();
            let centers = env.last_paste_centers();
            for obj in &state.objects {
                let (px, py) = map.to_px(obj.x, obj.y);
                let hit = centers.iter().any(|&(class, cx, cy)| {
                    class == obj.class
                        && (cx as f64 - px).abs() <= 0.5 + 1e-9
                        && (cy as f64 - py).abs() <= 0.5 + 1e-9
                });
                assert!(hit, "{}: object {:?} not rendered at {:?}", kind.name(), obj, (px, py));
            }
        }
    }

    #[test]
    fn render_can_be_disabled() {
        let mut cfg = EnvConfig::default_for("gf").unwrap();
        cfg.set_render(false);
        let mut env = make_env(&cfg, 1).unwrap();
        let obs = env.reset();
        assert_eq!((obs.width, obs.height), (0, 0));
    }

    #[test]
    fn same_seed_reproduces_frames_across_instances() {
        for kind in EnvKind::ALL {
            let mut a = make_env_named(kind.name(), 7).unwrap();
            let mut b = make_env_named(kind.name(), 7).unwrap();
            assert!(a.reset().bit_eq(&b.reset()), "{}", kind.name());
            // Drive both with the same actions; frames stay identical.
            let grid = a.action_grid();
            for i in 0..10 {
                let act = grid[i % grid.len()];
                let ra = a.step(act);
                let rb = b.step(act);
                match (ra, rb) {
                    (Ok(ra), Ok(rb)) => {
                        assert!(ra.observation.bit_eq(&rb.observation));
                        assert_eq!(ra.reward, rb.reward);
                        if ra.done {
                            break;
                        }
                    }
                    (Err(ea), Err(eb)) => {
                        assert_eq!(ea, eb);
                        break;
                    }
                    _ => panic!("divergent step outcomes"),
                }
            }
        }
    }
}
