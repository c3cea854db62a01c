//! Finite MDPs with per-action safety labels, the safety-wrapping
//! construction (substitute unsafe actions by a uniform safe draw in both
//! the transition kernel and the reward), policy projection back onto the
//! safe simplex, and brute-force verification that wrapping preserves safe
//! policies and optimal safe values.

pub mod equivalence;
pub mod solve;
pub mod textio;

pub use equivalence::{
    gridworld_case, random_mdp, run_equivalence_suite, two_state_chain, verify_policy_equivalence,
    EquivalenceReport, SuiteReport,
};
pub use solve::{policy_kernel, policy_reward, policy_value, value_iteration, value_iteration_restricted};

use thiserror::Error;

/// Row-stochastic tolerance for constructor validation.
pub const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("transition row (s={state}, a={action}) sums to {sum}, not 1")]
    BadRow { state: usize, action: usize, sum: f64 },
    #[error("negative probability at (s={state}, a={action})")]
    NegativeProb { state: usize, action: usize },
    #[error("gamma must lie in (0, 1)")]
    BadGamma,
    #[error("state {0} reachable through safe actions has no safe action")]
    DeadEnd(usize),
    #[error("state {0} has no safe action")]
    NoSafeAction(usize),
    #[error("initial state {0} out of range")]
    BadInitial(usize),
    #[error("policy row {0} is not a distribution")]
    BadPolicyRow(usize),
    #[error("dimension mismatch")]
    Dimensions,
}

/// Explicit finite MDP with a per-(state, action) safety checker.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    /// Transition probabilities, `[s][a][s']` flattened.
    trans: Vec<f64>,
    /// Rewards, `[s][a]` flattened.
    reward: Vec<f64>,
    gamma: f64,
    /// Safety checker, `[s][a]` flattened; true means safe.
    safe: Vec<bool>,
    initial: Vec<usize>,
}

impl FiniteMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        trans: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        safe: Vec<bool>,
        initial: Vec<usize>,
    ) -> Result<Self, MdpError> {
        if trans.len() != n_states * n_actions * n_states
            || reward.len() != n_states * n_actions
            || safe.len() != n_states * n_actions
        {
            return Err(MdpError::Dimensions);
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(MdpError::BadGamma);
        }
        for &s in &initial {
            if s >= n_states {
                return Err(MdpError::BadInitial(s));
            }
        }
        let mdp = FiniteMdp { n_states, n_actions, trans, reward, gamma, safe, initial };
        for s in 0..n_states {
            for a in 0..n_actions {
                let mut sum = 0.0;
                for s2 in 0..n_states {
                    let p = mdp.t(s, a, s2);
                    if p < 0.0 {
                        return Err(MdpError::NegativeProb { state: s, action: a });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_TOL {
                    return Err(MdpError::BadRow { state: s, action: a, sum });
                }
            }
        }
        mdp.check_safe_closure()?;
        Ok(mdp)
    }

    // Every state reachable from the initial set through safe actions must
    // itself offer a safe action.
    fn check_safe_closure(&self) -> Result<(), MdpError> {
        let mut seen = vec![false; self.n_states];
        let mut stack: Vec<usize> = self.initial.clone();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(s) = stack.pop() {
            if self.safe_actions(s).is_empty() {
                return Err(MdpError::DeadEnd(s));
            }
            for a in self.safe_actions(s) {
                for s2 in 0..self.n_states {
                    if self.t(s, a, s2) > 0.0 && !seen[s2] {
                        seen[s2] = true;
                        stack.push(s2);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn t(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.trans[(s * self.n_actions + a) * self.n_states + s2]
    }

    pub fn r(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn is_safe(&self, s: usize, a: usize) -> bool {
        self.safe[s * self.n_actions + a]
    }

    pub fn safe_actions(&self, s: usize) -> Vec<usize> {
        (0..self.n_actions).filter(|&a| self.is_safe(s, a)).collect()
    }

    pub fn all_safe(&self) -> bool {
        self.safe.iter().all(|&b| b)
    }

    /// The safety-wrapped MDP: safe rows are untouched; an unsafe action's
    /// transition row and reward become the uniform average over the safe
    /// actions of that state. Every action of the result is safe.
    ///
    /// Errors if any state has no safe action at all.
    pub fn wrap(&self) -> Result<FiniteMdp, MdpError> {
        for s in 0..self.n_states {
            if self.safe_actions(s).is_empty() {
                return Err(MdpError::NoSafeAction(s));
            }
        }
        let mut trans = self.trans.clone();
        let mut reward = self.reward.clone();
        for s in 0..self.n_states {
            let safe = self.safe_actions(s);
            let inv = 1.0 / safe.len() as f64;
            for a in 0..self.n_actions {
                if self.is_safe(s, a) {
                    continue;
                }
                for s2 in 0..self.n_states {
                    let mut p = 0.0;
                    for &sa in &safe {
                        p += self.t(s, sa, s2);
                    }
                    trans[(s * self.n_actions + a) * self.n_states + s2] = p * inv;
                }
                let mut r = 0.0;
                for &sa in &safe {
                    r += self.r(s, sa);
                }
                reward[s * self.n_actions + a] = r * inv;
            }
        }
        FiniteMdp::new(
            self.n_states,
            self.n_actions,
            trans,
            reward,
            self.gamma,
            vec![true; self.n_states * self.n_actions],
            self.initial.clone(),
        )
    }
}

/// Row-stochastic policy over a finite MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self, MdpError> {
        if probs.len() != n_states * n_actions {
            return Err(MdpError::Dimensions);
        }
        for s in 0..n_states {
            let row = &probs[s * n_actions..(s + 1) * n_actions];
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > ROW_TOL {
                return Err(MdpError::BadPolicyRow(s));
            }
        }
        Ok(TabularPolicy { n_states, n_actions, probs })
    }

    pub fn p(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// True iff the policy puts zero mass on every unsafe action.
    pub fn is_safe_for(&self, mdp: &FiniteMdp) -> bool {
        (0..self.n_states)
            .all(|s| (0..self.n_actions).all(|a| mdp.is_safe(s, a) || self.p(s, a) == 0.0))
    }

    /// Deterministic policy from a greedy action table.
    pub fn deterministic(n_states: usize, n_actions: usize, actions: &[usize]) -> Self {
        let mut probs = vec![0.0; n_states * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * n_actions + a] = 1.0;
        }
        TabularPolicy { n_states, n_actions, probs }
    }
}

/// Projects a wrapped-environment policy onto the safe simplex of the
/// original MDP: each safe action keeps its probability plus an equal share
/// of the total unsafe mass; unsafe actions get zero.
pub fn project_policy(policy: &TabularPolicy, mdp: &FiniteMdp) -> Result<TabularPolicy, MdpError> {
    if policy.n_states != mdp.n_states || policy.n_actions != mdp.n_actions {
        return Err(MdpError::Dimensions);
    }
    let mut probs = vec![0.0; policy.probs.len()];
    for s in 0..mdp.n_states {
        let safe = mdp.safe_actions(s);
        if safe.is_empty() {
            return Err(MdpError::NoSafeAction(s));
        }
        let unsafe_mass: f64 =
            (0..mdp.n_actions).filter(|&a| !mdp.is_safe(s, a)).map(|a| policy.p(s, a)).sum();
        let share = unsafe_mass / safe.len() as f64;
        for &a in &safe {
            probs[s * mdp.n_actions + a] = policy.p(s, a) + share;
        }
        // Renormalize away accumulated rounding so the constructor's
        // stochasticity check stays exact.
        let sum: f64 = probs[s * mdp.n_actions..(s + 1) * mdp.n_actions].iter().sum();
        if sum > 0.0 {
            for a in 0..mdp.n_actions {
                probs[s * mdp.n_actions + a] /= sum;
            }
        }
    }
    TabularPolicy::new(mdp.n_states, mdp.n_actions, probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Deterministic 1-state-out chain used across the module tests:
    // s0 --a0 (safe, r=1)--> s1 absorbing; a1 unsafe (r=10) self-loops.
    fn chain() -> FiniteMdp {
        two_state_chain()
    }

    #[test]
    fn wrap_keeps_safe_rows_identical() {
        let e = chain();
        let w = e.wrap().unwrap();
        for s2 in 0..2 {
            assert_eq!(e.t(0, 0, s2), w.t(0, 0, s2));
        }
        assert_eq!(e.r(0, 0), w.r(0, 0));
    }

    #[test]
    fn wrap_averages_unsafe_rows_over_safe_ones() {
        // Three actions at s0: a0 -> s1, a1 -> s2 (both safe, deterministic),
        // a2 unsafe. The wrapped a2 row is the 50/50 mixture.
        let n_s = 3;
        let n_a = 3;
        let mut trans = vec![0.0; n_s * n_a * n_s];
        let mut set_t = |s: usize, a: usize, s2: usize, p: f64| {
            trans[(s * n_a + a) * n_s + s2] = p;
        };
        set_t(0, 0, 1, 1.0);
        set_t(0, 1, 2, 1.0);
        set_t(0, 2, 0, 1.0);
        for s in 1..3 {
            for a in 0..3 {
                set_t(s, a, s, 1.0);
            }
        }
        let mut reward = vec![0.0; n_s * n_a];
        reward[0 * n_a + 0] = 1.0;
        reward[0 * n_a + 1] = 3.0;
        reward[0 * n_a + 2] = 100.0;
        let mut safe = vec![true; n_s * n_a];
        safe[0 * n_a + 2] = false;
        let e = FiniteMdp::new(n_s, n_a, trans, reward, 0.9, safe, vec![0]).unwrap();
        let w = e.wrap().unwrap();
        assert_eq!(w.t(0, 2, 1), 0.5);
        assert_eq!(w.t(0, 2, 2), 0.5);
        assert_eq!(w.t(0, 2, 0), 0.0);
        // R'(s0, a2) = mean(1, 3) = 2.
        assert_eq!(w.r(0, 2), 2.0);
        assert!(w.all_safe());
    }

    #[test]
    fn wrap_is_idempotent() {
        let w = chain().wrap().unwrap();
        assert_eq!(w.wrap().unwrap(), w);
    }

    #[test]
    fn wrap_without_safe_action_errors() {
        let trans = vec![1.0, 1.0]; // single state, two self-loop actions
        let e = FiniteMdp::new(1, 2, vec![1.0, 1.0], vec![0.0, 0.0], 0.9, vec![true, false], vec![0]);
        let e = e.unwrap();
        assert!(e.wrap().is_ok());
        let _ = trans;
        let bad =
            FiniteMdp::new(1, 2, vec![1.0, 1.0], vec![0.0, 0.0], 0.9, vec![false, false], vec![0]);
        assert_eq!(bad.unwrap_err(), MdpError::DeadEnd(0));
    }

    #[test]
    fn projection_redistributes_unsafe_mass() {
        // One state, three self-loop actions, a2 unsafe.
        let e = FiniteMdp::new(
            1,
            3,
            vec![1.0, 1.0, 1.0],
            vec![0.0; 3],
            0.9,
            vec![true, true, false],
            vec![0],
        )
        .unwrap();
        let pi = TabularPolicy::new(1, 3, vec![0.2, 0.5, 0.3]).unwrap();
        let g = project_policy(&pi, &e).unwrap();
        assert!((g.p(0, 0) - 0.35).abs() < 1e-15);
        assert!((g.p(0, 1) - 0.65).abs() < 1e-15);
        assert_eq!(g.p(0, 2), 0.0);
        assert!(g.is_safe_for(&e));

        // All mass on the unsafe action splits evenly.
        let pi = TabularPolicy::new(1, 3, vec![0.0, 0.0, 1.0]).unwrap();
        let g = project_policy(&pi, &e).unwrap();
        assert!((g.p(0, 0) - 0.5).abs() < 1e-15);
        assert!((g.p(0, 1) - 0.5).abs() < 1e-15);

        // A policy already safe is unchanged.
        let pi = TabularPolicy::new(1, 3, vec![0.7, 0.3, 0.0]).unwrap();
        let g = project_policy(&pi, &e).unwrap();
        assert_eq!(g, pi);
    }

    #[test]
    fn bad_rows_rejected() {
        let r = FiniteMdp::new(1, 1, vec![0.9], vec![0.0], 0.9, vec![true], vec![0]);
        assert!(matches!(r, Err(MdpError::BadRow { .. })));
        let r = FiniteMdp::new(1, 1, vec![1.0], vec![0.0], 1.0, vec![true], vec![0]);
        assert_eq!(r.unwrap_err(), MdpError::BadGamma);
        let r = TabularPolicy::new(1, 2, vec![0.6, 0.6]);
        assert!(matches!(r, Err(MdpError::BadPolicyRow(0))));
    }
}
