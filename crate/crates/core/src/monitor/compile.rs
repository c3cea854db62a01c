//! Flat stack-machine compilation of formulas with slot-resolved variables.
//!
//! Monitors are evaluated per candidate action and per hazard inside rollout
//! loops; compiling once avoids string lookups and tree walks on that path.
//! Booleans live on the value stack as 1.0 / 0.0.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{Cmp, Formula, Term};

const MAX_STACK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    PushConst(f64),
    PushSlot(u16),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(u32),
    Cmp(Cmp),
    Not,
    And,
    Or,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("formula too deep for the evaluator stack")]
    TooDeep,
}

/// A compiled formula. Evaluation needs a slot array filled according to
/// the slot map used at compile time.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    ops: Vec<Op>,
    max_depth: usize,
}

impl Compiled {
    pub fn compile(formula: &Formula, slots: &BTreeMap<String, u16>) -> Result<Compiled, CompileError> {
        let mut ops = Vec::new();
        emit_formula(formula, slots, &mut ops)?;
        let max_depth = stack_depth(&ops);
        if max_depth > MAX_STACK {
            return Err(CompileError::TooDeep);
        }
        Ok(Compiled { ops, max_depth })
    }

    /// Evaluates against the given slot values.
    pub fn eval(&self, slot_values: &[f64]) -> bool {
        let mut stack = [0.0f64; MAX_STACK];
        let mut top = 0usize;
        for op in &self.ops {
            match op {
                Op::PushConst(c) => {
                    stack[top] = *c;
                    top += 1;
                }
                Op::PushSlot(i) => {
                    stack[top] = slot_values[*i as usize];
                    top += 1;
                }
                Op::Neg => stack[top - 1] = -stack[top - 1],
                Op::Pow(n) => stack[top - 1] = stack[top - 1].powi(*n as i32),
                Op::Not => stack[top - 1] = if stack[top - 1] == 0.0 { 1.0 } else { 0.0 },
                Op::Add => {
                    top -= 1;
                    stack[top - 1] += stack[top];
                }
                Op::Sub => {
                    top -= 1;
                    stack[top - 1] -= stack[top];
                }
                Op::Mul => {
                    top -= 1;
                    stack[top - 1] *= stack[top];
                }
                Op::Div => {
                    top -= 1;
                    stack[top - 1] /= stack[top];
                }
                Op::Cmp(cmp) => {
                    top -= 1;
                    stack[top - 1] = if cmp.holds(stack[top - 1], stack[top]) { 1.0 } else { 0.0 };
                }
                Op::And => {
                    top -= 1;
                    stack[top - 1] =
                        if stack[top - 1] != 0.0 && stack[top] != 0.0 { 1.0 } else { 0.0 };
                }
                Op::Or => {
                    top -= 1;
                    stack[top - 1] =
                        if stack[top - 1] != 0.0 || stack[top] != 0.0 { 1.0 } else { 0.0 };
                }
            }
        }
        debug_assert_eq!(top, 1);
        stack[0] != 0.0
    }

    pub fn ops_len(&self) -> usize {
        self.ops.len()
    }
}

fn emit_term(t: &Term, slots: &BTreeMap<String, u16>, out: &mut Vec<Op>) -> Result<(), CompileError> {
    match t {
        Term::Const(c) => out.push(Op::PushConst(*c)),
        Term::Var(name) => {
            let slot = slots.get(name).ok_or_else(|| CompileError::UnboundVar(name.clone()))?;
            out.push(Op::PushSlot(*slot));
        }
        Term::Neg(t) => {
            emit_term(t, slots, out)?;
            out.push(Op::Neg);
        }
        Term::Add(a, b) => {
            emit_term(a, slots, out)?;
            emit_term(b, slots, out)?;
            out.push(Op::Add);
        }
        Term::Sub(a, b) => {
            emit_term(a, slots, out)?;
            emit_term(b, slots, out)?;
            out.push(Op::Sub);
        }
        Term::Mul(a, b) => {
            emit_term(a, slots, out)?;
            emit_term(b, slots, out)?;
            out.push(Op::Mul);
        }
        Term::Div(a, b) => {
            emit_term(a, slots, out)?;
            emit_term(b, slots, out)?;
            out.push(Op::Div);
        }
        Term::Pow(t, n) => {
            emit_term(t, slots, out)?;
            out.push(Op::Pow(*n));
        }
    }
    Ok(())
}

fn emit_formula(f: &Formula, slots: &BTreeMap<String, u16>, out: &mut Vec<Op>) -> Result<(), CompileError> {
    match f {
        Formula::Cmp(op, a, b) => {
            emit_term(a, slots, out)?;
            emit_term(b, slots, out)?;
            out.push(Op::Cmp(*op));
        }
        Formula::Not(p) => {
            emit_formula(p, slots, out)?;
            out.push(Op::Not);
        }
        Formula::And(p, q) => {
            emit_formula(p, slots, out)?;
            emit_formula(q, slots, out)?;
            out.push(Op::And);
        }
        Formula::Or(p, q) => {
            emit_formula(p, slots, out)?;
            emit_formula(q, slots, out)?;
            out.push(Op::Or);
        }
        Formula::Implies(p, q) => {
            emit_formula(p, slots, out)?;
            out.push(Op::Not);
            emit_formula(q, slots, out)?;
            out.push(Op::Or);
        }
    }
    Ok(())
}

fn stack_depth(ops: &[Op]) -> usize {
    let mut depth = 0usize;
    let mut max = 0usize;
    for op in ops {
        match op {
            Op::PushConst(_) | Op::PushSlot(_) => depth += 1,
            Op::Neg | Op::Pow(_) | Op::Not => {}
            _ => depth -= 1,
        }
        max = max.max(depth);
    }
    max
}
