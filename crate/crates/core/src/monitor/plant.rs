//! Closed-form constant-acceleration plant over one control cycle, plus the
//! runtime model-consistency check for observed transitions.

use crate::state::{Action, SymbolicState};

/// Per-axis velocity semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKinematics {
    /// Velocity is clamped at zero from below: braking brings the mover to
    /// a stop and cannot push it backwards. Used by the 1-D road model.
    ForwardOnly,
    /// Velocity cannot flip sign under opposing acceleration within a cycle;
    /// from rest, acceleration starts motion in its own direction. Used by
    /// the planar arenas, one axis at a time.
    BrakeStop,
}

/// How a non-agent object class moves between decision points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectMotion {
    Static,
    /// Free motion with a known speed bound.
    Bounded { max_speed: f64 },
}

/// Constant-acceleration kinematics over one control cycle of length at most
/// `cycle`, with maximal braking deceleration `brake` available afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub cycle: f64,
    pub brake: f64,
    pub mode: AxisKinematics,
    pub agent_class: u8,
    /// Motion law per non-agent class.
    pub object_motion: Vec<(u8, ObjectMotion)>,
}

impl PlantModel {
    pub fn new(cycle: f64, brake: f64, mode: AxisKinematics, agent_class: u8) -> Self {
        assert!(cycle > 0.0 && brake > 0.0);
        PlantModel { cycle, brake, mode, agent_class, object_motion: Vec::new() }
    }

    pub fn with_object(mut self, class: u8, motion: ObjectMotion) -> Self {
        self.object_motion.push((class, motion));
        self
    }

    fn motion_of(&self, class: u8) -> ObjectMotion {
        self.object_motion
            .iter()
            .find(|(c, _)| *c == class)
            .map(|(_, m)| *m)
            .unwrap_or(ObjectMotion::Static)
    }

    /// Evolves one axis for `dt` under acceleration `a`, honoring the
    /// velocity clamp of the configured mode. Returns (position, velocity).
    pub fn evolve_axis(&self, x: f64, v: f64, a: f64, dt: f64) -> (f64, f64) {
        debug_assert!(dt >= 0.0);
        let free = |x: f64, v: f64, a: f64, t: f64| (x + v * t + 0.5 * a * t * t, v + a * t);
        match self.mode {
            AxisKinematics::ForwardOnly => {
                debug_assert!(v >= -1e-12);
                if a >= 0.0 || v + a * dt >= 0.0 {
                    free(x, v, a, dt)
                } else {
                    let t_stop = if a == 0.0 { dt } else { v / (-a) };
                    let (xs, _) = free(x, v, a, t_stop.min(dt));
                    (xs, 0.0)
                }
            }
            AxisKinematics::BrakeStop => {
                if v == 0.0 || a * v >= 0.0 {
                    free(x, v, a, dt)
                } else {
                    let t_stop = v.abs() / a.abs();
                    if dt <= t_stop {
                        free(x, v, a, dt)
                    } else {
                        let (xs, _) = free(x, v, a, t_stop);
                        (xs, 0.0)
                    }
                }
            }
        }
    }

    /// Distance covered by braking from `speed` to rest at full `brake`.
    pub fn stop_distance(&self, speed: f64) -> f64 {
        speed * speed / (2.0 * self.brake)
    }

    /// Runtime model-consistency check: true iff some cycle duration
    /// `dt` in (0, cycle] reproduces `next` from (`prev`, `action`) within
    /// `tol` per coordinate. The duration is solved in closed form from the
    /// agent's position equation and then verified on every coordinate,
    /// including the agent velocity and every non-agent object.
    pub fn check_transition(
        &self,
        prev: &SymbolicState,
        action: &Action,
        next: &SymbolicState,
        tol: f64,
    ) -> bool {
        assert!(tol >= 0.0);
        let (Some(p0), Some(p1)) = (prev.first_of(self.agent_class), next.first_of(self.agent_class))
        else {
            return false;
        };
        let Some((ax, ay)) = action.accel_xy() else {
            return false;
        };
        let (vx, vy) = (prev.agent_velocity[0], prev.agent_velocity[1]);

        let mut candidates: Vec<f64> = vec![self.cycle];
        solve_axis_durations(p1.x - p0.x, vx, ax, self.cycle, &mut candidates);
        solve_axis_durations(p1.y - p0.y, vy, ay, self.cycle, &mut candidates);
        // Clamp instants: beyond them the axis position is constant.
        for (v, a) in [(vx, ax), (vy, ay)] {
            if a != 0.0 && v != 0.0 && a * v < 0.0 {
                let t = v.abs() / a.abs();
                if t > 0.0 && t <= self.cycle {
                    candidates.push(t);
                }
            }
        }

        candidates.retain(|&t| t > 0.0 && t <= self.cycle + 1e-12);
        candidates.iter().any(|&dt| self.verify_at(prev, (ax, ay), next, dt.min(self.cycle), tol))
    }

    fn verify_at(
        &self,
        prev: &SymbolicState,
        accel: (f64, f64),
        next: &SymbolicState,
        dt: f64,
        tol: f64,
    ) -> bool {
        let p0 = prev.first_of(self.agent_class).unwrap();
        let p1 = next.first_of(self.agent_class).unwrap();
        let (x, vx) = self.evolve_axis(p0.x, prev.agent_velocity[0], accel.0, dt);
        let (y, vy) = self.evolve_axis(p0.y, prev.agent_velocity[1], accel.1, dt);
        if (x - p1.x).abs() > tol || (y - p1.y).abs() > tol {
            return false;
        }
        if (vx - next.agent_velocity[0]).abs() > tol || (vy - next.agent_velocity[1]).abs() > tol {
            return false;
        }
        // Non-agent objects, paired per class in order of appearance.
        for class in prev.objects.iter().map(|o| o.class).filter(|&c| c != self.agent_class) {
            let before: Vec<_> = prev.objects_of(class).collect();
            let after: Vec<_> = next.objects_of(class).collect();
            if before.len() != after.len() {
                return false;
            }
            let bound = match self.motion_of(class) {
                ObjectMotion::Static => 0.0,
                ObjectMotion::Bounded { max_speed } => max_speed * dt,
            };
            for (b, a) in before.iter().zip(after.iter()) {
                if (b.x - a.x).abs() > bound + tol || (b.y - a.y).abs() > bound + tol {
                    return false;
                }
            }
        }
        true
    }
}

// Roots of x(dt) = dx for the unclamped position equation, pushed into
// `out` when they land in (0, cycle].
fn solve_axis_durations(dx: f64, v: f64, a: f64, cycle: f64, out: &mut Vec<f64>) {
    let push = |t: f64, out: &mut Vec<f64>| {
        if t.is_finite() && t > 0.0 && t <= cycle {
            out.push(t);
        }
    };
    if a.abs() < 1e-12 {
        if v.abs() > 1e-12 {
            push(dx / v, out);
        }
        return;
    }
    // 0.5*a*t^2 + v*t - dx = 0
    let disc = v * v + 2.0 * a * dx;
    if disc < 0.0 {
        return;
    }
    let s = disc.sqrt();
    push((-v + s) / a, out);
    push((-v - s) / a, out);
}
