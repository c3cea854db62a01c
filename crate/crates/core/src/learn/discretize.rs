//! Coarse state keys for the tabular learner, computed from the extracted
//! symbolic state only (no privileged simulator internals).

use crate::monitor::builtins::{AGENT_CLASS, HAZARD_CLASS};
use crate::state::SymbolicState;

fn octant(dx: f64, dy: f64) -> u64 {
    if dx == 0.0 && dy == 0.0 {
        return 8;
    }
    let angle = dy.atan2(dx) + std::f64::consts::PI;
    ((angle / (std::f64::consts::TAU / 8.0)) as u64).min(7)
}

fn nearest_hazard(sym: &SymbolicState) -> Option<(f64, f64, f64)> {
    let agent = sym.first_of(AGENT_CLASS)?;
    sym.objects_of(HAZARD_CLASS)
        .map(|h| {
            let (dx, dy) = (h.x - agent.x, h.y - agent.y);
            (dx, dy, dx.hypot(dy))
        })
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
}

fn pack(fields: &[(u64, u64)]) -> u64 {
    let mut key = 0u64;
    for &(value, cardinality) in fields {
        key = key * cardinality + value.min(cardinality - 1);
    }
    key
}

/// Environment-specific discretization. Grids are deliberately coarse so a
/// table converges in minutes:
/// * grid task: agent cell plus nearest-hazard octant;
/// * road task: 2-unit gap buckets plus 0.5-unit speed buckets;
/// * arenas: 6x6 position cell, speed tercile, velocity octant, and
///   nearest-hazard octant with a near/far bit.
pub fn state_key(env_name: &str, sym: &SymbolicState) -> u64 {
    let Some(agent) = sym.first_of(AGENT_CLASS) else {
        return u64::MAX;
    };
    match env_name {
        "xo" => {
            let (hx, hy, _) = nearest_hazard(sym).unwrap_or((0.0, 0.0, 0.0));
            let oct = if sym.objects_of(HAZARD_CLASS).next().is_some() { octant(hx, hy) } else { 8 };
            pack(&[(agent.x.max(0.0) as u64, 64), (agent.y.max(0.0) as u64, 64), (oct, 9)])
        }
        "acc" => {
            let gap = nearest_hazard(sym).map(|(dx, _, _)| dx).unwrap_or(40.0);
            let gap_bucket = ((gap / 2.0).floor().max(0.0) as u64).min(19);
            let v_bucket = ((sym.speed() / 0.5).floor().max(0.0) as u64).min(15);
            pack(&[(gap_bucket, 20), (v_bucket, 16)])
        }
        _ => {
            let cell = |c: f64| ((c / 10.0 * 6.0).floor().clamp(0.0, 5.0)) as u64;
            let speed = sym.speed();
            let speed_bucket = if speed < 0.3 {
                0
            } else if speed < 0.9 {
                1
            } else {
                2
            };
            let vel_oct = octant(sym.agent_velocity[0], sym.agent_velocity[1]);
            let (hoct, near) = match nearest_hazard(sym) {
                Some((dx, dy, d)) => (octant(dx, dy), u64::from(d < 2.0)),
                None => (8, 0),
            };
            pack(&[
                (cell(agent.x), 6),
                (cell(agent.y), 6),
                (speed_bucket, 3),
                (vel_oct, 9),
                (hoct, 9),
                (near, 2),
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::SymObject;

    fn state(ax: f64, ay: f64, hazards: &[(f64, f64)], vel: [f64; 2]) -> SymbolicState {
        let mut objects = vec![SymObject { class: AGENT_CLASS, x: ax, y: ay }];
        objects.extend(hazards.iter().map(|&(x, y)| SymObject { class: HAZARD_CLASS, x, y }));
        SymbolicState::new(objects, vel)
    }

    #[test]
    fn keys_are_stable_and_distinguish_positions() {
        let a = state(2.0, 3.0, &[(5.0, 5.0)], [0.0, 0.0]);
        assert_eq!(state_key("xo", &a), state_key("xo", &a.clone()));
        let b = state(3.0, 3.0, &[(5.0, 5.0)], [0.0, 0.0]);
        assert_ne!(state_key("xo", &a), state_key("xo", &b));
    }

    #[test]
    fn missing_agent_maps_to_sentinel() {
        let no_agent = SymbolicState::new(vec![], [0.0, 0.0]);
        assert_eq!(state_key("gf", &no_agent), u64::MAX);
    }

    #[test]
    fn gap_buckets_move_with_distance() {
        let near = state(4.0, 0.0, &[(8.0, 0.0)], [2.0, 0.0]);
        let far = state(4.0, 0.0, &[(20.0, 0.0)], [2.0, 0.0]);
        assert_ne!(state_key("acc", &near), state_key("acc", &far));
    }
}
