//! Controller monitors: a small constraint DSL over symbolic states and
//! actions, built-in guards for the benchmark environments, and the runtime
//! model-consistency check.

pub mod ast;
pub mod builtins;
pub mod compile;
pub mod parse;
pub mod plant;
pub mod spec;

pub use ast::{Cmp, Formula, Term};
pub use builtins::{builtin_by_name, builtin_monitors, AGENT_CLASS, HAZARD_CLASS};
pub use parse::{parse_formula, ParseError};
pub use plant::{AxisKinematics, ObjectMotion, PlantModel};
pub use spec::{BindingSet, MonitorError, MonitorSpec, VarSource};

use crate::state::{Action, SymbolicState};

/// True iff the monitor admits `action` in `state`. Pure function.
pub fn eval_monitor(m: &MonitorSpec, state: &SymbolicState, action: &Action) -> bool {
    m.eval(state, action)
}

/// Order-preserving filter of `actions` through the monitor.
pub fn safe_action_set(m: &MonitorSpec, state: &SymbolicState, actions: &[Action]) -> Vec<Action> {
    m.safe_action_set(state, actions)
}

/// True iff some cycle duration in (0, T] reproduces `next` from
/// (`prev`, `action`) under the plant, within `tol` per coordinate.
pub fn check_model_monitor(
    plant: &PlantModel,
    prev: &SymbolicState,
    action: &Action,
    next: &SymbolicState,
    tol: f64,
) -> bool {
    plant.check_transition(prev, action, next, tol)
}
