//! AST for quantifier-free arithmetic predicates over named real variables.
//!
//! Terms are built from literals, variables, `+ - * /` and powers by a
//! natural constant; formulas combine comparisons with `&& || ! ->`.
//! Division is only admitted when the divisor folds to a nonzero constant,
//! which keeps evaluation total on finite inputs.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Arithmetic term.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Const(f64),
    Var(String),
    Neg(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Div(Box<Term>, Box<Term>),
    /// Power by a fixed natural exponent.
    Pow(Box<Term>, u32),
}

/// Comparison operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Lt,
    Eq,
    Gt,
    Ge,
}

impl Cmp {
    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Cmp::Le => a <= b,
            Cmp::Lt => a < b,
            Cmp::Eq => a == b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Lt => "<",
            Cmp::Eq => "=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

/// Quantifier-free formula over terms.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Cmp(Cmp, Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("division by zero")]
    DivisionByZero,
}

impl Term {
    /// Reference interpreter. The compiled evaluator in `compile` is the
    /// fast path; this one is kept as the independent route for testing.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        match self {
            Term::Const(c) => Ok(*c),
            Term::Var(name) => lookup(name).ok_or_else(|| EvalError::UnboundVar(name.clone())),
            Term::Neg(t) => Ok(-t.eval(lookup)?),
            Term::Add(a, b) => Ok(a.eval(lookup)? + b.eval(lookup)?),
            Term::Sub(a, b) => Ok(a.eval(lookup)? - b.eval(lookup)?),
            Term::Mul(a, b) => Ok(a.eval(lookup)? * b.eval(lookup)?),
            Term::Div(a, b) => {
                let d = b.eval(lookup)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(a.eval(lookup)? / d)
            }
            Term::Pow(t, n) => Ok(t.eval(lookup)?.powi(*n as i32)),
        }
    }

    /// Replaces named variables with constants.
    pub fn substitute(&self, params: &BTreeMap<String, f64>) -> Term {
        match self {
            Term::Const(_) => self.clone(),
            Term::Var(name) => match params.get(name) {
                Some(&v) => Term::Const(v),
                None => self.clone(),
            },
            Term::Neg(t) => Term::Neg(Box::new(t.substitute(params))),
            Term::Add(a, b) => Term::Add(Box::new(a.substitute(params)), Box::new(b.substitute(params))),
            Term::Sub(a, b) => Term::Sub(Box::new(a.substitute(params)), Box::new(b.substitute(params))),
            Term::Mul(a, b) => Term::Mul(Box::new(a.substitute(params)), Box::new(b.substitute(params))),
            Term::Div(a, b) => Term::Div(Box::new(a.substitute(params)), Box::new(b.substitute(params))),
            Term::Pow(t, n) => Term::Pow(Box::new(t.substitute(params)), *n),
        }
    }

    /// Collapses constant subtrees.
    pub fn fold(&self) -> Term {
        macro_rules! fold2 {
            ($a:expr, $b:expr, $op:tt, $ctor:path) => {{
                let (a, b) = ($a.fold(), $b.fold());
                if let (Term::Const(x), Term::Const(y)) = (&a, &b) {
                    if !($op == '/' && *y == 0.0) {
                        return match $op {
                            '+' => Term::Const(x + y),
                            '-' => Term::Const(x - y),
                            '*' => Term::Const(x * y),
                            _ => Term::Const(x / y),
                        };
                    }
                }
                $ctor(Box::new(a), Box::new(b))
            }};
        }
        match self {
            Term::Const(_) | Term::Var(_) => self.clone(),
            Term::Neg(t) => {
                let t = t.fold();
                if let Term::Const(c) = t {
                    Term::Const(-c)
                } else {
                    Term::Neg(Box::new(t))
                }
            }
            Term::Add(a, b) => fold2!(a, b, '+', Term::Add),
            Term::Sub(a, b) => fold2!(a, b, '-', Term::Sub),
            Term::Mul(a, b) => fold2!(a, b, '*', Term::Mul),
            Term::Div(a, b) => fold2!(a, b, '/', Term::Div),
            Term::Pow(t, n) => {
                let t = t.fold();
                if let Term::Const(c) = t {
                    Term::Const(c.powi(*n as i32))
                } else {
                    Term::Pow(Box::new(t), *n)
                }
            }
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(name) => {
                out.insert(name.clone());
            }
            Term::Neg(t) | Term::Pow(t, _) => t.free_vars(out),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    // Precedence levels: 1 add/sub, 2 mul/div, 3 neg, 4 pow, 5 atom.
    fn prec(&self) -> u8 {
        match self {
            Term::Add(..) | Term::Sub(..) => 1,
            Term::Mul(..) | Term::Div(..) => 2,
            Term::Neg(_) => 3,
            Term::Const(c) if *c < 0.0 => 3,
            Term::Pow(..) => 4,
            Term::Const(_) | Term::Var(_) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let me = self.prec();
        if me < min {
            write!(f, "(")?;
        }
        match self {
            Term::Const(c) => write!(f, "{}", c)?,
            Term::Var(name) => write!(f, "{}", name)?,
            Term::Neg(t) => {
                write!(f, "-")?;
                t.fmt_prec(f, 4)?;
            }
            Term::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)?;
            }
            Term::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)?;
            }
            Term::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " * ")?;
                b.fmt_prec(f, 3)?;
            }
            Term::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " / ")?;
                b.fmt_prec(f, 3)?;
            }
            Term::Pow(t, n) => {
                t.fmt_prec(f, 5)?;
                write!(f, "^{}", n)?;
            }
        }
        if me < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Formula {
    /// Reference interpreter; see [`Term::eval`].
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<bool, EvalError> {
        match self {
            Formula::Cmp(op, a, b) => Ok(op.holds(a.eval(lookup)?, b.eval(lookup)?)),
            Formula::Not(p) => Ok(!p.eval(lookup)?),
            Formula::And(p, q) => Ok(p.eval(lookup)? && q.eval(lookup)?),
            Formula::Or(p, q) => Ok(p.eval(lookup)? || q.eval(lookup)?),
            Formula::Implies(p, q) => Ok(!p.eval(lookup)? || q.eval(lookup)?),
        }
    }

    pub fn substitute(&self, params: &BTreeMap<String, f64>) -> Formula {
        match self {
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.substitute(params), b.substitute(params)),
            Formula::Not(p) => Formula::Not(Box::new(p.substitute(params))),
            Formula::And(p, q) => {
                Formula::And(Box::new(p.substitute(params)), Box::new(q.substitute(params)))
            }
            Formula::Or(p, q) => {
                Formula::Or(Box::new(p.substitute(params)), Box::new(q.substitute(params)))
            }
            Formula::Implies(p, q) => {
                Formula::Implies(Box::new(p.substitute(params)), Box::new(q.substitute(params)))
            }
        }
    }

    pub fn fold(&self) -> Formula {
        match self {
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.fold(), b.fold()),
            Formula::Not(p) => Formula::Not(Box::new(p.fold())),
            Formula::And(p, q) => Formula::And(Box::new(p.fold()), Box::new(q.fold())),
            Formula::Or(p, q) => Formula::Or(Box::new(p.fold()), Box::new(q.fold())),
            Formula::Implies(p, q) => Formula::Implies(Box::new(p.fold()), Box::new(q.fold())),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Cmp(_, a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            Formula::Not(p) => p.collect_vars(out),
            Formula::And(p, q) | Formula::Or(p, q) | Formula::Implies(p, q) => {
                p.collect_vars(out);
                q.collect_vars(out);
            }
        }
    }

    /// Validates the division restriction: every divisor must already be a
    /// nonzero, finite constant (fold first).
    pub fn check_divisors(&self) -> Result<(), DivisorError> {
        match self {
            Formula::Cmp(_, a, b) => {
                check_term_divisors(a)?;
                check_term_divisors(b)
            }
            Formula::Not(p) => p.check_divisors(),
            Formula::And(p, q) | Formula::Or(p, q) | Formula::Implies(p, q) => {
                p.check_divisors()?;
                q.check_divisors()
            }
        }
    }

    // Levels: 1 implies, 2 or, 3 and, 4 not, 5 cmp.
    fn prec(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(_) => 4,
            Formula::Cmp(..) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let me = self.prec();
        if me < min {
            write!(f, "(")?;
        }
        match self {
            Formula::Cmp(op, a, b) => write!(f, "{} {} {}", a, op.symbol(), b)?,
            Formula::Not(p) => write!(f, "!({})", p)?,
            Formula::And(p, q) => {
                p.fmt_prec(f, 3)?;
                write!(f, " && ")?;
                q.fmt_prec(f, 4)?;
            }
            Formula::Or(p, q) => {
                p.fmt_prec(f, 2)?;
                write!(f, " || ")?;
                q.fmt_prec(f, 3)?;
            }
            Formula::Implies(p, q) => {
                p.fmt_prec(f, 2)?;
                write!(f, " -> ")?;
                q.fmt_prec(f, 1)?;
            }
        }
        if me < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivisorError {
    #[error("division by non-constant term `{0}`")]
    NonConstant(String),
    #[error("division by zero constant")]
    Zero,
}

fn check_term_divisors(t: &Term) -> Result<(), DivisorError> {
    match t {
        Term::Const(_) | Term::Var(_) => Ok(()),
        Term::Neg(t) | Term::Pow(t, _) => check_term_divisors(t),
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
            check_term_divisors(a)?;
            check_term_divisors(b)
        }
        Term::Div(a, b) => {
            check_term_divisors(a)?;
            match **b {
                Term::Const(c) if c == 0.0 => Err(DivisorError::Zero),
                Term::Const(c) if c.is_finite() => Ok(()),
                Term::Const(_) => Err(DivisorError::Zero),
                ref other => Err(DivisorError::NonConstant(other.to_string())),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(name: &str) -> Term {
        Term::Var(name.into())
    }

    #[test]
    fn eval_basic_arithmetic() {
        // 2*x + y^2 at x=3, y=4 -> 22
        let t = Term::Add(
            Box::new(Term::Mul(Box::new(Term::Const(2.0)), Box::new(var("x")))),
            Box::new(Term::Pow(Box::new(var("y")), 2)),
        );
        let lookup = |n: &str| match n {
            "x" => Some(3.0),
            "y" => Some(4.0),
            _ => None,
        };
        assert_eq!(t.eval(&lookup).unwrap(), 22.0);
    }

    #[test]
    fn unbound_variable_is_reported() {
        let t = var("missing");
        assert_eq!(t.eval(&|_| None), Err(EvalError::UnboundVar("missing".into())));
    }

    #[test]
    fn fold_collapses_constants() {
        // (2*3 + 4) / 2 -> 5
        let t = Term::Div(
            Box::new(Term::Add(
                Box::new(Term::Mul(Box::new(Term::Const(2.0)), Box::new(Term::Const(3.0)))),
                Box::new(Term::Const(4.0)),
            )),
            Box::new(Term::Const(2.0)),
        );
        assert_eq!(t.fold(), Term::Const(5.0));
    }

    #[test]
    fn divisor_checks() {
        let ok = Formula::Cmp(Cmp::Gt, Term::Div(Box::new(var("x")), Box::new(Term::Const(2.0))), Term::Const(0.0));
        assert!(ok.check_divisors().is_ok());
        let by_var = Formula::Cmp(Cmp::Gt, Term::Div(Box::new(var("x")), Box::new(var("y"))), Term::Const(0.0));
        assert!(matches!(by_var.check_divisors(), Err(DivisorError::NonConstant(_))));
        let by_zero =
            Formula::Cmp(Cmp::Gt, Term::Div(Box::new(var("x")), Box::new(Term::Const(0.0))), Term::Const(0.0));
        assert_eq!(by_zero.check_divisors(), Err(DivisorError::Zero));
    }
}
