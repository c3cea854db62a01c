//! Built-in monitors for the benchmark environments.
//!
//! All three are margin-inflated by the declared perception error bound
//! `eps`: enlarging `eps` only shrinks the admitted action set.

use std::collections::BTreeMap;

use super::spec::{BindingSet, MonitorError, MonitorSpec, VarSource};

/// 1-D stopping-bound guard for a follower approaching a hazard ahead.
///
/// An acceleration `a` is admitted when the stopping bound
/// `2B(d - m) > v^2 + (a+B)(aT^2 + 2Tv)` holds at margin `m = 3*eps`, or
/// when `a` is the full brake and the bound holds at margin `eps` (the
/// `(a+B)` term vanishes there). Braking keeps its own premise, so the
/// admitted set stays nonempty along shielded runs; the widened margin on
/// every other action absorbs measurement error of the agent-to-hazard
/// distance, which can reach twice the per-object bound `eps/2` at the
/// current extraction and again at the next one.
pub const ACC_SB_SRC: &str = "(2*B*(d - 3*eps) > v^2 + (a + B)*(a*T^2 + 2*T*v)) \
     || (a = -B && 2*B*(d - eps) > v^2)";

/// Planar stopping-distance guard. An action is admitted if either
///
/// * worst-case reasoning covers it at the widened margin: the distance to
///   the hazard exceeds the one-cycle advance bound `vT + am*T^2/2` plus
///   the braking distance from the worst-case end speed
///   `(v + am*T)^2 / 2B`, or
/// * it is the per-axis full brake (acceleration `B` opposing each axis
///   velocity, zero on an axis at rest) and the plain braking envelope
///   `v^2 / 2B` fits in front of the hazard at the base margin.
///
/// The brake disjunct keeps the admitted set nonempty along shielded
/// trajectories; the widened margin on every other branch covers the
/// distance measurement error, as in the 1-D guard.
pub const CIRCLE_STOP_2D_SRC: &str = "(d - 3*eps - rh - ra > v*T + 0.5*am*T^2 + (v + am*T)^2 / (2*B)) \
     || (((vx > 0 && ax = -B) || (vx < 0 && ax = B) || (vx = 0 && ax = 0)) \
      && ((vy > 0 && ay = -B) || (vy < 0 && ay = B) || (vy = 0 && ay = 0)) \
      && (d - eps - rh - ra > v^2 / (2*B)))";

/// Grid occupancy guard: the destination cell must stay outside every
/// hazard cell inflated by `infl` (Chebyshev distance), where `infl` is the
/// perception bound rounded up to whole cells. Positions are snapped to
/// cells before the check, so sub-half-cell extraction noise cancels.
pub const XO_GRID_SRC: &str =
    "nx - hx > infl || hx - nx > infl || ny - hy > infl || hy - ny > infl";

/// Move deltas for the grid environment: up, down, left, right, stay.
pub const XO_MOVES: [(f64, f64); 5] = [(0.0, -1.0), (0.0, 1.0), (-1.0, 0.0), (1.0, 0.0), (0.0, 0.0)];

/// Agent class id shared by all built-in environments.
pub const AGENT_CLASS: u8 = 0;
/// Hazard / leader class id shared by all built-in environments.
pub const HAZARD_CLASS: u8 = 1;

pub fn acc_sb(brake: f64, cycle: f64, eps: f64) -> Result<MonitorSpec, MonitorError> {
    let params: BTreeMap<String, f64> =
        [("B".into(), brake), ("T".into(), cycle), ("eps".into(), eps)].into();
    MonitorSpec::new(
        "acc_sb",
        ACC_SB_SRC,
        params,
        BindingSet::per_hazard(
            AGENT_CLASS,
            HAZARD_CLASS,
            vec![
                ("d".into(), VarSource::HazardDist),
                ("v".into(), VarSource::AgentSpeed),
                ("a".into(), VarSource::ActionX),
            ],
        ),
    )
}

pub fn circle_stop_2d(
    brake: f64,
    cycle: f64,
    eps: f64,
    hazard_radius: f64,
    agent_radius: f64,
) -> Result<MonitorSpec, MonitorError> {
    let params: BTreeMap<String, f64> = [
        ("B".into(), brake),
        ("T".into(), cycle),
        ("eps".into(), eps),
        ("rh".into(), hazard_radius),
        ("ra".into(), agent_radius),
    ]
    .into();
    MonitorSpec::new(
        "circle_stop_2d",
        CIRCLE_STOP_2D_SRC,
        params,
        BindingSet::per_hazard(
            AGENT_CLASS,
            HAZARD_CLASS,
            vec![
                ("d".into(), VarSource::HazardDist),
                ("v".into(), VarSource::AgentSpeed),
                ("vx".into(), VarSource::AgentVelX),
                ("vy".into(), VarSource::AgentVelY),
                ("ax".into(), VarSource::ActionX),
                ("ay".into(), VarSource::ActionY),
                ("am".into(), VarSource::ActionMag),
            ],
        ),
    )
}

/// `eps` is in cell units; the inflation is `eps.ceil()`.
pub fn xo_grid(eps: f64, move_deltas: Vec<(f64, f64)>) -> Result<MonitorSpec, MonitorError> {
    let params: BTreeMap<String, f64> = [("infl".into(), eps.ceil())].into();
    MonitorSpec::new(
        "xo_grid",
        XO_GRID_SRC,
        params,
        BindingSet::per_hazard(
            AGENT_CLASS,
            HAZARD_CLASS,
            vec![
                ("nx".into(), VarSource::NextCellX),
                ("ny".into(), VarSource::NextCellY),
                ("hx".into(), VarSource::HazardCellX),
                ("hy".into(), VarSource::HazardCellY),
            ],
        )
        .with_move_deltas(move_deltas),
    )
}

/// Default parameter table per built-in monitor name.
pub fn default_params(name: &str) -> Option<BTreeMap<String, f64>> {
    match name {
        "acc_sb" => {
            Some([("B".into(), 1.0), ("T".into(), 0.5), ("eps".into(), 1.25)].into())
        }
        "circle_stop_2d" => Some(
            [
                ("B".into(), 1.0),
                ("T".into(), 0.1),
                ("eps".into(), 0.3125),
                ("rh".into(), 0.6),
                ("ra".into(), 0.3),
            ]
            .into(),
        ),
        "xo_grid" => Some([("eps".into(), 0.3125)].into()),
        _ => None,
    }
}

/// Builds a built-in monitor by name with the default parameters overridden
/// by `overrides`. Returns None for unknown names.
pub fn builtin_by_name(
    name: &str,
    overrides: &BTreeMap<String, f64>,
) -> Option<Result<MonitorSpec, MonitorError>> {
    let mut p = default_params(name)?;
    for (k, v) in overrides {
        p.insert(k.clone(), *v);
    }
    let get = |k: &str| p.get(k).copied().unwrap_or(0.0);
    Some(match name {
        "acc_sb" => acc_sb(get("B"), get("T"), get("eps")),
        "circle_stop_2d" => circle_stop_2d(get("B"), get("T"), get("eps"), get("rh"), get("ra")),
        "xo_grid" => xo_grid(get("eps"), XO_MOVES.to_vec()),
        _ => return None,
    })
}

/// The standard variable bindings each environment family exposes to
/// inline monitor formulas (the same set its built-in guard uses).
pub fn bindings_for(env_name: &str) -> Option<BindingSet> {
    match env_name {
        "xo" => Some(
            BindingSet::per_hazard(
                AGENT_CLASS,
                HAZARD_CLASS,
                vec![
                    ("nx".into(), VarSource::NextCellX),
                    ("ny".into(), VarSource::NextCellY),
                    ("hx".into(), VarSource::HazardCellX),
                    ("hy".into(), VarSource::HazardCellY),
                ],
            )
            .with_move_deltas(XO_MOVES.to_vec()),
        ),
        "acc" => Some(BindingSet::per_hazard(
            AGENT_CLASS,
            HAZARD_CLASS,
            vec![
                ("d".into(), VarSource::HazardDist),
                ("v".into(), VarSource::AgentSpeed),
                ("a".into(), VarSource::ActionX),
            ],
        )),
        "gf" | "pm" => Some(BindingSet::per_hazard(
            AGENT_CLASS,
            HAZARD_CLASS,
            vec![
                ("d".into(), VarSource::HazardDist),
                ("v".into(), VarSource::AgentSpeed),
                ("vx".into(), VarSource::AgentVelX),
                ("vy".into(), VarSource::AgentVelY),
                ("ax".into(), VarSource::ActionX),
                ("ay".into(), VarSource::ActionY),
                ("am".into(), VarSource::ActionMag),
            ],
        )),
        _ => None,
    }
}

/// The built-in monitors under their default parameters.
pub fn builtin_monitors() -> BTreeMap<String, MonitorSpec> {
    ["acc_sb", "circle_stop_2d", "xo_grid"]
        .iter()
        .map(|name| {
            let spec = builtin_by_name(name, &BTreeMap::new())
                .expect("known name")
                .expect("defaults are valid");
            (name.to_string(), spec)
        })
        .collect()
}
