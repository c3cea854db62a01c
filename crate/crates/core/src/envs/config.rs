//! Environment configurations with serde-loadable overrides.
//!
//! Defaults that the source papers for these benchmark families leave
//! unspecified (grid sizes, arena extents, hazard counts, episode caps,
//! reward constants for the continuous tasks) are ordinary configuration
//! values here. The monitor margin `eps` defaults to the world-unit
//! equivalent of 2 frame pixels unless overridden.

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("placement failed: {0}")]
    Placement(String),
}

/// Pixel border kept free of grid-cell centers so padded matching
/// templates can always align with a sprite.
pub const XO_PX_BORDER: f64 = 4.0;
/// Same for the planar arenas, sized for the padded hazard template.
pub const ARENA_PX_BORDER: f64 = 5.0;

/// Grid collect/avoid task.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XoConfig {
    pub grid_w: usize,
    pub grid_h: usize,
    pub n_x: usize,
    pub n_o: usize,
    pub reward_x: f64,
    pub reward_o: f64,
    pub reward_step: f64,
    pub max_steps: usize,
    pub frame_w: usize,
    pub frame_h: usize,
    pub render: bool,
    /// Monitor margin in cell units.
    pub eps: Option<f64>,
}

impl Default for XoConfig {
    fn default() -> Self {
        XoConfig {
            grid_w: 10,
            grid_h: 10,
            n_x: 3,
            n_o: 5,
            reward_x: 1.0,
            reward_o: -1.0,
            reward_step: -0.01,
            max_steps: 100,
            frame_w: 64,
            frame_h: 64,
            render: true,
            eps: None,
        }
    }
}

impl XoConfig {
    /// Pixel pitch between neighboring cell centers; cell centers span
    /// `[XO_PX_BORDER, frame - 1 - XO_PX_BORDER]`.
    pub fn cell_px(&self) -> f64 {
        (self.frame_w as f64 - 1.0 - 2.0 * XO_PX_BORDER) / (self.grid_w as f64 - 1.0)
    }

    /// Monitor margin in cells; defaults to 2 pixels through the map.
    pub fn eps_cells(&self) -> f64 {
        self.eps.unwrap_or(2.0 / self.cell_px())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid_w < 3 || self.grid_h < 3 {
            return Err(ConfigError::Invalid("grid must be at least 3x3".into()));
        }
        if self.n_x + self.n_o + 1 > self.grid_w * self.grid_h {
            return Err(ConfigError::Invalid("more objects than cells".into()));
        }
        if self.cell_px() < 5.2 || self.frame_h < self.frame_w * self.grid_h / self.grid_w {
            return Err(ConfigError::Invalid("frame too small for the grid's sprites".into()));
        }
        Ok(())
    }
}

/// Leader/follower road task.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccConfig {
    /// Maximum forward acceleration A.
    pub accel_max: f64,
    /// Maximum braking deceleration B.
    pub brake_max: f64,
    /// Control cycle length T.
    pub cycle: f64,
    pub target_gap: f64,
    pub init_gap: f64,
    pub init_speed: f64,
    /// Leader acceleration is drawn uniformly within this bound each cycle.
    pub leader_accel_bound: f64,
    pub leader_speed_max: f64,
    /// World length of the rendered window.
    pub window: f64,
    /// Window coordinate the follower is anchored at.
    pub follower_anchor: f64,
    pub max_steps: usize,
    pub frame_w: usize,
    pub frame_h: usize,
    pub render: bool,
    /// Monitor margin in world units.
    pub eps: Option<f64>,
}

impl Default for AccConfig {
    fn default() -> Self {
        AccConfig {
            accel_max: 1.0,
            brake_max: 1.0,
            cycle: 0.5,
            target_gap: 10.0,
            init_gap: 10.0,
            init_speed: 2.0,
            leader_accel_bound: 0.5,
            leader_speed_max: 4.0,
            window: 40.0,
            follower_anchor: 4.0,
            max_steps: 100,
            frame_w: 64,
            frame_h: 16,
            render: true,
            eps: None,
        }
    }
}

impl AccConfig {
    pub fn px_per_unit(&self) -> f64 {
        self.frame_w as f64 / self.window
    }

    pub fn eps_world(&self) -> f64 {
        self.eps.unwrap_or(2.0 / self.px_per_unit())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.accel_max <= 0.0 || self.brake_max <= 0.0 || self.cycle <= 0.0 {
            return Err(ConfigError::Invalid("A, B, T must be positive".into()));
        }
        if self.leader_accel_bound > self.accel_max {
            return Err(ConfigError::Invalid(
                "leader acceleration bound must not exceed the follower's".into(),
            ));
        }
        if self.init_speed < 0.0 {
            return Err(ConfigError::Invalid("initial speed must be nonnegative".into()));
        }
        // The initial state must clear the widened guard margin so motion
        // is admissible from the start: 2B(gap - 3 eps) > v^2.
        let margin = 2.0 * self.brake_max * (self.init_gap - 3.0 * self.eps_world());
        if margin <= self.init_speed * self.init_speed {
            return Err(ConfigError::Invalid(
                "initial gap does not clear the guard margin".into(),
            ));
        }
        Ok(())
    }
}

/// Explicit placement override for planar arenas.
#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct ArenaLayout {
    pub spawn: (f64, f64),
    pub hazards: Vec<(f64, f64)>,
    pub goal: (f64, f64),
}

/// Shared geometry and dynamics of the planar arenas.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaConfig {
    /// Square arena side length in world units.
    pub world: f64,
    pub n_hazards: usize,
    pub hazard_radius: f64,
    pub goal_radius: f64,
    pub agent_radius: f64,
    /// Acceleration bound per axis; also the braking deceleration.
    pub accel: f64,
    /// Control cycle length T.
    pub cycle: f64,
    pub max_steps: usize,
    pub frame_w: usize,
    pub frame_h: usize,
    pub render: bool,
    /// Monitor margin in world units.
    pub eps: Option<f64>,
    pub layout: Option<ArenaLayout>,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            world: 10.0,
            n_hazards: 4,
            hazard_radius: 0.6,
            goal_radius: 0.6,
            agent_radius: 0.3,
            accel: 1.0,
            cycle: 0.1,
            max_steps: 200,
            frame_w: 64,
            frame_h: 64,
            render: true,
            eps: None,
            layout: None,
        }
    }
}

impl ArenaConfig {
    /// Pixels per world unit; world coordinates span
    /// `[ARENA_PX_BORDER, frame - 1 - ARENA_PX_BORDER]`.
    pub fn px_per_unit(&self) -> f64 {
        (self.frame_w as f64 - 1.0 - 2.0 * ARENA_PX_BORDER) / self.world
    }

    pub fn eps_world(&self) -> f64 {
        self.eps.unwrap_or(2.0 / self.px_per_unit())
    }

    /// Center separation below which agent and hazard collide.
    pub fn collision_dist(&self) -> f64 {
        self.hazard_radius + self.agent_radius
    }

    /// Center separation below which even the braking fallback is rejected.
    pub fn monitor_margin(&self) -> f64 {
        self.eps_world() + self.collision_dist()
    }

    /// Center separation below which non-brake actions are rejected. The
    /// guard triples the margin on those: a measured agent-to-hazard
    /// distance can err by twice the per-object bound, once now and once at
    /// the next decision.
    pub fn accel_margin(&self) -> f64 {
        3.0 * self.eps_world() + self.collision_dist()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.accel <= 0.0 || self.cycle <= 0.0 {
            return Err(ConfigError::Invalid("accel and cycle must be positive".into()));
        }
        if self.world < 4.0 * (self.hazard_radius + self.agent_radius) {
            return Err(ConfigError::Invalid("arena too small for its radii".into()));
        }
        Ok(())
    }
}

/// Goal-finding task: hard hazards end the episode.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GfConfig {
    pub arena: ArenaConfig,
    pub reward_goal: f64,
    pub reward_step: f64,
}

impl GfConfig {
    pub fn with_defaults() -> Self {
        GfConfig { arena: ArenaConfig::default(), reward_goal: 1.0, reward_step: -0.001 }
    }
}

/// Cleanup task: striking a hazard removes it and spawns collectible
/// messes, so the raw reward rewards the unsafe strategy.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PmConfig {
    pub arena: ArenaConfig,
    pub reward_goal: f64,
    pub reward_mess: f64,
    pub reward_step: f64,
    /// Each strike spawns 1..=max_mess messes.
    pub max_mess: usize,
    pub mess_radius: f64,
    /// Messes present at episode start.
    pub init_mess: usize,
}

impl PmConfig {
    pub fn with_defaults() -> Self {
        PmConfig {
            arena: ArenaConfig::default(),
            reward_goal: 1.0,
            reward_mess: 1.0,
            reward_step: -0.001,
            max_mess: 3,
            mess_radius: 0.25,
            init_mess: 0,
        }
    }

    /// A fixed instance whose goal sits inside a ring of hazards: no
    /// monitor-admissible path touches the goal and no messes exist until a
    /// hazard is struck, so every safe trajectory earns only step penalties
    /// while the strike-and-clean strategy earns mess rewards. Exhibits the
    /// reward-misalignment trade-off deterministically.
    pub fn fortress() -> Self {
        let goal = (7.0, 7.0);
        let ring = 1.2;
        let hazards: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let angle = std::f64::consts::TAU * i as f64 / 6.0;
                (goal.0 + ring * angle.cos(), goal.1 + ring * angle.sin())
            })
            .collect();
        PmConfig {
            arena: ArenaConfig {
                n_hazards: hazards.len(),
                layout: Some(ArenaLayout { spawn: (2.0, 2.0), hazards, goal }),
                ..ArenaConfig::default()
            },
            init_mess: 0,
            ..Self::with_defaults()
        }
    }
}

/// Tagged union used by the runner and the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvConfig {
    Xo(XoConfig),
    Acc(AccConfig),
    Gf(GfConfig),
    Pm(PmConfig),
}

impl EnvConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::Xo(_) => "xo",
            EnvConfig::Acc(_) => "acc",
            EnvConfig::Gf(_) => "gf",
            EnvConfig::Pm(_) => "pm",
        }
    }

    pub fn default_for(name: &str) -> Option<EnvConfig> {
        match name {
            "xo" => Some(EnvConfig::Xo(XoConfig::default())),
            "acc" => Some(EnvConfig::Acc(AccConfig::default())),
            "gf" => Some(EnvConfig::Gf(GfConfig::with_defaults())),
            "pm" => Some(EnvConfig::Pm(PmConfig::with_defaults())),
            _ => None,
        }
    }

    pub fn set_render(&mut self, on: bool) {
        match self {
            EnvConfig::Xo(c) => c.render = on,
            EnvConfig::Acc(c) => c.render = on,
            EnvConfig::Gf(c) => c.arena.render = on,
            EnvConfig::Pm(c) => c.arena.render = on,
        }
    }
}
