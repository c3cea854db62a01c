//! Monitor specifications: a formula, its parameters, and the bindings that
//! map formula variables onto symbolic-state and action components.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{DivisorError, Formula};
use super::compile::{Compiled, CompileError};
use super::parse::{parse_formula, ParseError};
use crate::state::{Action, SymbolicState};

/// Where a formula variable takes its value from.
///
/// `Hazard*` sources are evaluated once per object of the monitor's hazard
/// class; the monitor verdict is the conjunction over those objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarSource {
    AgentX,
    AgentY,
    AgentVelX,
    AgentVelY,
    AgentSpeed,
    TimeInCycle,
    /// Acceleration components of the action; for discrete actions, the
    /// move delta declared in the binding set.
    ActionX,
    ActionY,
    ActionMag,
    /// Destination cell of a discrete move: agent position snapped to the
    /// nearest cell, plus the move delta.
    NextCellX,
    NextCellY,
    HazardX,
    HazardY,
    /// Euclidean distance from the agent to the hazard.
    HazardDist,
    /// Hazard position snapped to the nearest cell, for grid monitors
    /// (extraction noise below half a cell rounds away).
    HazardCellX,
    HazardCellY,
}

impl VarSource {
    fn is_hazard(self) -> bool {
        matches!(
            self,
            VarSource::HazardX
                | VarSource::HazardY
                | VarSource::HazardDist
                | VarSource::HazardCellX
                | VarSource::HazardCellY
        )
    }

    fn needs_deltas(self) -> bool {
        matches!(self, VarSource::NextCellX | VarSource::NextCellY)
    }
}

/// Variable bindings for a monitor formula.
#[derive(Debug, Clone, PartialEq)]
pub struct BindingSet {
    pub agent_class: u8,
    /// Class whose objects the formula is checked against, one at a time.
    /// None for formulas over global state only.
    pub hazard_class: Option<u8>,
    pub vars: Vec<(String, VarSource)>,
    /// Per-index move deltas for discrete action spaces.
    pub move_deltas: Vec<(f64, f64)>,
}

impl BindingSet {
    pub fn global(agent_class: u8, vars: Vec<(String, VarSource)>) -> Self {
        BindingSet { agent_class, hazard_class: None, vars, move_deltas: Vec::new() }
    }

    pub fn per_hazard(agent_class: u8, hazard_class: u8, vars: Vec<(String, VarSource)>) -> Self {
        BindingSet { agent_class, hazard_class: Some(hazard_class), vars, move_deltas: Vec::new() }
    }

    pub fn with_move_deltas(mut self, deltas: Vec<(f64, f64)>) -> Self {
        self.move_deltas = deltas;
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unbound variable `{0}`: not a parameter and not bound")]
    Unbound(String),
    #[error(transparent)]
    Divisor(#[from] DivisorError),
    #[error("parameter `{0}` is not finite")]
    NonFiniteParam(String),
    #[error("hazard-sourced variable `{0}` without a hazard class")]
    HazardWithoutClass(String),
    #[error("variable `{0}` needs move deltas for discrete actions")]
    MissingDeltas(String),
    #[error("formula too deep to compile")]
    TooDeep,
}

impl From<CompileError> for MonitorError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::UnboundVar(v) => MonitorError::Unbound(v),
            CompileError::TooDeep => MonitorError::TooDeep,
        }
    }
}

/// An evaluable controller monitor: predicate over (symbolic state, action).
///
/// Parameters are folded into the formula at construction, so evaluation is
/// a pure function of the bound state and action components. Immutable and
/// shareable across rollout workers.
#[derive(Debug, Clone)]
pub struct MonitorSpec {
    name: String,
    /// Formula as written, with parameter names still symbolic.
    template: Formula,
    /// Formula after parameter substitution and constant folding.
    formula: Formula,
    params: BTreeMap<String, f64>,
    bindings: BindingSet,
    compiled: Compiled,
    global_fill: Vec<(usize, VarSource)>,
    hazard_fill: Vec<(usize, VarSource)>,
}

impl MonitorSpec {
    pub fn new(
        name: &str,
        formula_text: &str,
        params: BTreeMap<String, f64>,
        bindings: BindingSet,
    ) -> Result<Self, MonitorError> {
        let template = parse_formula(formula_text)?;
        Self::from_formula(name, template, params, bindings)
    }

    pub fn from_formula(
        name: &str,
        template: Formula,
        params: BTreeMap<String, f64>,
        bindings: BindingSet,
    ) -> Result<Self, MonitorError> {
        for (k, v) in &params {
            if !v.is_finite() {
                return Err(MonitorError::NonFiniteParam(k.clone()));
            }
        }
        let formula = template.substitute(&params).fold();
        formula.check_divisors()?;

        let mut slots: BTreeMap<String, u16> = BTreeMap::new();
        let mut global_fill = Vec::new();
        let mut hazard_fill = Vec::new();
        for name in formula.free_vars() {
            let src = bindings
                .vars
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, s)| *s)
                .ok_or_else(|| MonitorError::Unbound(name.clone()))?;
            if src.is_hazard() && bindings.hazard_class.is_none() {
                return Err(MonitorError::HazardWithoutClass(name.clone()));
            }
            if src.needs_deltas() && bindings.move_deltas.is_empty() {
                return Err(MonitorError::MissingDeltas(name.clone()));
            }
            let slot = slots.len() as u16;
            slots.insert(name.clone(), slot);
            if src.is_hazard() {
                hazard_fill.push((slot as usize, src));
            } else {
                global_fill.push((slot as usize, src));
            }
        }
        let compiled = Compiled::compile(&formula, &slots)?;
        Ok(MonitorSpec {
            name: name.to_string(),
            template,
            formula,
            params,
            bindings,
            compiled,
            global_fill,
            hazard_fill,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The formula after parameter folding.
    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    /// The formula as written, with parameter names symbolic.
    pub fn template(&self) -> &Formula {
        &self.template
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn bindings(&self) -> &BindingSet {
        &self.bindings
    }

    fn fill_source(
        &self,
        src: VarSource,
        state: &SymbolicState,
        action: &Action,
        agent: (f64, f64),
    ) -> Option<f64> {
        let action_xy = |a: &Action| -> Option<(f64, f64)> {
            match a {
                Action::Discrete(i) => self.bindings.move_deltas.get(*i).copied(),
                _ => a.accel_xy(),
            }
        };
        Some(match src {
            VarSource::AgentX => agent.0,
            VarSource::AgentY => agent.1,
            VarSource::AgentVelX => state.agent_velocity[0],
            VarSource::AgentVelY => state.agent_velocity[1],
            VarSource::AgentSpeed => state.speed(),
            VarSource::TimeInCycle => state.time_in_cycle,
            VarSource::ActionX => action_xy(action)?.0,
            VarSource::ActionY => action_xy(action)?.1,
            VarSource::ActionMag => {
                let (x, y) = action_xy(action)?;
                x.hypot(y)
            }
            VarSource::NextCellX => agent.0.round() + action_xy(action)?.0,
            VarSource::NextCellY => agent.1.round() + action_xy(action)?.1,
            VarSource::HazardX
            | VarSource::HazardY
            | VarSource::HazardDist
            | VarSource::HazardCellX
            | VarSource::HazardCellY => unreachable!(),
        })
    }

    /// Evaluates the monitor: true iff the formula holds for every object of
    /// the hazard class (vacuously true when none are present).
    ///
    /// Fail-safe: if a required component cannot be resolved (agent object
    /// missing, discrete index without a declared delta), the verdict is
    /// `false`.
    pub fn eval(&self, state: &SymbolicState, action: &Action) -> bool {
        let mut slot_values = [0.0f64; 32];
        let agent = match state.first_of(self.bindings.agent_class) {
            Some(o) => (o.x, o.y),
            None => return false,
        };
        for &(slot, src) in &self.global_fill {
            match self.fill_source(src, state, action, agent) {
                Some(v) => slot_values[slot] = v,
                None => return false,
            }
        }
        match self.bindings.hazard_class {
            None => self.compiled.eval(&slot_values),
            Some(class) => {
                for hazard in state.objects_of(class) {
                    for &(slot, src) in &self.hazard_fill {
                        slot_values[slot] = match src {
                            VarSource::HazardX => hazard.x,
                            VarSource::HazardY => hazard.y,
                            VarSource::HazardCellX => hazard.x.round(),
                            VarSource::HazardCellY => hazard.y.round(),
                            VarSource::HazardDist => {
                                (hazard.x - agent.0).hypot(hazard.y - agent.1)
                            }
                            _ => unreachable!(),
                        };
                    }
                    if !self.compiled.eval(&slot_values) {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Order-preserving sublist of the candidate actions the monitor admits.
    /// An empty result is a legal return.
    pub fn safe_action_set(&self, state: &SymbolicState, actions: &[Action]) -> Vec<Action> {
        actions.iter().copied().filter(|a| self.eval(state, a)).collect()
    }
}
