//! Shared planar arena: a point agent with per-axis double-integrator
//! dynamics (brake-stop clamp), static disk hazards, a goal disk, and
//! bounding walls that stop motion without ending the episode.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::monitor::builtins::{AGENT_CLASS, HAZARD_CLASS};
use crate::monitor::{AxisKinematics, ObjectMotion, PlantModel};
use crate::state::{Action, AffineMap, Observation, SymObject, SymbolicState};

use super::config::ArenaConfig;
use super::render;

#[derive(Debug, Clone)]
pub struct Arena {
    pub cfg: ArenaConfig,
    pub plant: PlantModel,
    pub pos: (f64, f64),
    pub vel: (f64, f64),
    pub hazards: Vec<(f64, f64)>,
    pub goal: (f64, f64),
}

impl Arena {
    pub fn new(cfg: ArenaConfig) -> Self {
        let plant = PlantModel::new(cfg.cycle, cfg.accel, AxisKinematics::BrakeStop, AGENT_CLASS)
            .with_object(HAZARD_CLASS, ObjectMotion::Static);
        Arena { cfg, plant, pos: (0.0, 0.0), vel: (0.0, 0.0), hazards: Vec::new(), goal: (0.0, 0.0) }
    }

    /// 5x5 acceleration grid over [-accel, accel] per axis.
    pub fn action_grid(cfg: &ArenaConfig) -> Vec<Action> {
        let a = cfg.accel;
        let levels = [-a, -a / 2.0, 0.0, a / 2.0, a];
        let mut grid = Vec::with_capacity(25);
        for &ax in &levels {
            for &ay in &levels {
                grid.push(Action::Accel2(ax, ay));
            }
        }
        grid
    }

    /// Samples (or applies) a placement satisfying the spawn separations:
    /// hazards pairwise apart, goal clear of hazards, spawn clear of the
    /// monitor margin so standing still is admissible from the start.
    pub fn place(&mut self, rng: &mut ChaCha8Rng) -> Result<(), String> {
        let c = &self.cfg;
        let margin = c.monitor_margin();
        let accel_margin = c.accel_margin();
        if let Some(layout) = &c.layout {
            if layout.hazards.len() != c.n_hazards {
                return Err("layout hazard count differs from n_hazards".into());
            }
            for &(hx, hy) in &layout.hazards {
                let d = (layout.spawn.0 - hx).hypot(layout.spawn.1 - hy);
                if d <= margin + 0.05 {
                    return Err("layout spawn violates the monitor margin".into());
                }
            }
            self.hazards = layout.hazards.clone();
            self.goal = layout.goal;
            self.pos = layout.spawn;
            self.vel = (0.0, 0.0);
            return Ok(());
        }

        let lo = c.agent_radius + 0.2;
        let hi = c.world - c.agent_radius - 0.2;
        for _ in 0..1000 {
            let mut hazards: Vec<(f64, f64)> = Vec::new();
            let mut ok = true;
            for _ in 0..c.n_hazards {
                let mut placed = false;
                for _ in 0..200 {
                    let p = (rng.random_range(lo..hi), rng.random_range(lo..hi));
                    // Pairwise separation keeps hazard detection peaks in
                    // non-adjacent heatmap cells (above 2S px even along a
                    // diagonal), so peak decoding resolves every hazard.
                    let clear = hazards
                        .iter()
                        .all(|&(x, y)| (p.0 - x).hypot(p.1 - y) > 2.0 * c.hazard_radius + 1.0);
                    if clear {
                        hazards.push(p);
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
            let goal_clear = |p: (f64, f64), hz: &[(f64, f64)]| {
                hz.iter()
                    .all(|&(x, y)| (p.0 - x).hypot(p.1 - y) > accel_margin + c.goal_radius + 0.3)
            };
            let mut goal = None;
            for _ in 0..200 {
                let p = (rng.random_range(lo..hi), rng.random_range(lo..hi));
                if goal_clear(p, &hazards) {
                    goal = Some(p);
                    break;
                }
            }
            let Some(goal) = goal else { continue };
            let mut spawn = None;
            for _ in 0..200 {
                let p = (rng.random_range(lo..hi), rng.random_range(lo..hi));
                let clear = hazards
                    .iter()
                    .all(|&(x, y)| (p.0 - x).hypot(p.1 - y) > accel_margin + 0.35)
                    && (p.0 - goal.0).hypot(p.1 - goal.1) > c.goal_radius + c.agent_radius + 0.9;
                if clear {
                    spawn = Some(p);
                    break;
                }
            }
            let Some(spawn) = spawn else { continue };
            self.hazards = hazards;
            self.goal = goal;
            self.pos = spawn;
            self.vel = (0.0, 0.0);
            return Ok(());
        }
        Err("arena too dense to satisfy the spawn separations".into())
    }

    /// Advances one control cycle under the given acceleration, with wall
    /// clamping. Walls zero the velocity component that hit them.
    pub fn advance(&mut self, ax: f64, ay: f64) {
        let dt = self.cfg.cycle;
        let (mut x, mut vx) = self.plant.evolve_axis(self.pos.0, self.vel.0, ax, dt);
        let (mut y, mut vy) = self.plant.evolve_axis(self.pos.1, self.vel.1, ay, dt);
        let lo = self.cfg.agent_radius;
        let hi = self.cfg.world - self.cfg.agent_radius;
        if x < lo {
            x = lo;
            vx = 0.0;
        } else if x > hi {
            x = hi;
            vx = 0.0;
        }
        if y < lo {
            y = lo;
            vy = 0.0;
        } else if y > hi {
            y = hi;
            vy = 0.0;
        }
        self.pos = (x, y);
        self.vel = (vx, vy);
    }

    pub fn hazard_hit(&self) -> Option<usize> {
        let r = self.cfg.collision_dist();
        self.hazards
            .iter()
            .position(|&(x, y)| (self.pos.0 - x).hypot(self.pos.1 - y) < r)
    }

    pub fn goal_reached(&self) -> bool {
        let (gx, gy) = self.goal;
        (self.pos.0 - gx).hypot(self.pos.1 - gy) < self.cfg.goal_radius + self.cfg.agent_radius
    }

    pub fn world_map(&self) -> AffineMap {
        let s = self.cfg.px_per_unit();
        let border = super::config::ARENA_PX_BORDER;
        AffineMap { sx: s, sy: s, tx: border, ty: border }
    }

    pub fn symbolic(&self) -> SymbolicState {
        let mut objects = vec![SymObject { class: AGENT_CLASS, x: self.pos.0, y: self.pos.1 }];
        objects.extend(
            self.hazards.iter().map(|&(x, y)| SymObject { class: HAZARD_CLASS, x, y }),
        );
        SymbolicState::new(objects, [self.vel.0, self.vel.1])
    }

    /// Renders hazards, goal, and agent; extra sprite layers (messes) are
    /// drawn by the caller between goal and agent.
    pub fn render_base(
        &self,
        frame: &mut Observation,
        centers: &mut Vec<(u8, i64, i64)>,
    ) {
        let map = self.world_map();
        let disk = render::disk9();
        for &(x, y) in &self.hazards {
            let (px, py) = map.to_px(x, y);
            let c = render::paste(frame, &disk, px, py);
            centers.push((HAZARD_CLASS, c.0, c.1));
        }
        let (gx, gy) = map.to_px(self.goal.0, self.goal.1);
        render::paste(frame, &render::goal_marker9(), gx, gy);
    }

    pub fn render_agent(&self, frame: &mut Observation, centers: &mut Vec<(u8, i64, i64)>) {
        let map = self.world_map();
        let (px, py) = map.to_px(self.pos.0, self.pos.1);
        let c = render::paste(frame, &render::agent_plus(), px, py);
        centers.push((AGENT_CLASS, c.0, c.1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn placement_respects_margins() {
        let cfg = ArenaConfig::default();
        let margin = cfg.monitor_margin();
        for seed in 0..30 {
            let mut arena = Arena::new(cfg.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            arena.place(&mut rng).unwrap();
            assert_eq!(arena.hazards.len(), cfg.n_hazards);
            for &(x, y) in &arena.hazards {
                assert!((arena.pos.0 - x).hypot(arena.pos.1 - y) > margin);
            }
        }
    }

    #[test]
    fn dense_arena_fails_placement() {
        let cfg = ArenaConfig { n_hazards: 60, ..ArenaConfig::default() };
        let mut arena = Arena::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(arena.place(&mut rng).is_err());
    }

    #[test]
    fn walls_stop_motion() {
        let mut arena = Arena::new(ArenaConfig::default());
        arena.pos = (0.5, 5.0);
        arena.vel = (-2.0, 0.0);
        for _ in 0..20 {
            arena.advance(-1.0, 0.0);
        }
        assert!(arena.pos.0 >= arena.cfg.agent_radius - 1e-12);
        assert_eq!(arena.vel.0, 0.0);
    }
}
