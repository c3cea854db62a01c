//! Brute-force verification that safety wrapping preserves policies and
//! values:
//!
//! 1. safe-policy invariance: a safe policy induces the identical kernel
//!    and expected rewards in the original and wrapped MDPs;
//! 2. projection equivalence: any policy of the wrapped MDP matches its
//!    safe projection in the original, kernel and rewards alike;
//! 3. optimal-value equality: the wrapped optimum equals the safe-restricted
//!    optimum of the original.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::batch;

use super::solve::{policy_kernel, policy_reward, value_iteration, value_iteration_restricted};
use super::textio;
use super::{project_policy, FiniteMdp, MdpError, TabularPolicy};

/// Exactness bound for the kernel and reward identities.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub safe_policy_kernel_err: f64,
    pub safe_policy_reward_err: f64,
    pub projection_kernel_err: f64,
    pub projection_reward_err: f64,
    pub optimal_value_gap: f64,
    pub pass: bool,
    /// Serialized offending MDP when a check fails.
    pub counterexample: Option<String>,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Random policy over `mdp`; when `safe_only`, mass is spread over safe
/// actions exclusively.
pub fn random_policy(rng: &mut ChaCha8Rng, mdp: &FiniteMdp, safe_only: bool) -> TabularPolicy {
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    let mut probs = vec![0.0; n_s * n_a];
    for s in 0..n_s {
        let support: Vec<usize> =
            if safe_only { mdp.safe_actions(s) } else { (0..n_a).collect() };
        let weights: Vec<f64> = support.iter().map(|_| -rng.random::<f64>().ln()).collect();
        let total: f64 = weights.iter().sum();
        for (&a, w) in support.iter().zip(&weights) {
            probs[s * n_a + a] = w / total;
        }
        // Exact renormalization for the constructor's tolerance.
        let sum: f64 = probs[s * n_a..(s + 1) * n_a].iter().sum();
        for a in 0..n_a {
            probs[s * n_a + a] /= sum;
        }
    }
    TabularPolicy::new(n_s, n_a, probs).expect("normalized rows")
}

/// Random MDP with up to the given sizes; every state keeps at least one
/// safe action and rows are exactly stochastic within constructor bounds.
pub fn random_mdp(rng: &mut ChaCha8Rng, max_states: usize, max_actions: usize) -> FiniteMdp {
    let n_s = rng.random_range(2..=max_states.max(2));
    let n_a = rng.random_range(2..=max_actions.max(2));
    let mut trans = vec![0.0; n_s * n_a * n_s];
    let mut reward = vec![0.0; n_s * n_a];
    let mut safe = vec![false; n_s * n_a];
    for s in 0..n_s {
        for a in 0..n_a {
            let support = rng.random_range(1..=n_s.min(4));
            let mut weights: Vec<(usize, f64)> = (0..support)
                .map(|_| (rng.random_range(0..n_s), -rng.random::<f64>().ln()))
                .collect();
            let total: f64 = weights.iter().map(|(_, w)| w).sum();
            for (_, w) in &mut weights {
                *w /= total;
            }
            for (s2, w) in &weights {
                trans[(s * n_a + a) * n_s + s2] += *w;
            }
            // Renormalize the accumulated row exactly.
            let row = &mut trans[(s * n_a + a) * n_s..(s * n_a + a + 1) * n_s];
            let sum: f64 = row.iter().sum();
            for p in row.iter_mut() {
                *p /= sum;
            }
            reward[s * n_a + a] = rng.random_range(-1.0..1.0);
            safe[s * n_a + a] = rng.random_bool(0.7);
        }
        if (0..n_a).all(|a| !safe[s * n_a + a]) {
            safe[s * n_a + rng.random_range(0..n_a)] = true;
        }
    }
    let gamma = if rng.random_bool(0.5) { 0.9 } else { 0.95 };
    FiniteMdp::new(n_s, n_a, trans, reward, gamma, safe, vec![0]).expect("generated rows valid")
}

/// Hand-built case: s0 --a0 (safe, reward 1)--> s1 absorbing with zero
/// reward; a1 at s0 is unsafe with a tempting reward and self-loops.
pub fn two_state_chain() -> FiniteMdp {
    let n_s = 2;
    let n_a = 2;
    let mut trans = vec![0.0; n_s * n_a * n_s];
    trans[(0 * n_a + 0) * n_s + 1] = 1.0; // s0, a0 -> s1
    trans[(0 * n_a + 1) * n_s + 0] = 1.0; // s0, a1 -> s0 (unsafe)
    trans[(1 * n_a + 0) * n_s + 1] = 1.0;
    trans[(1 * n_a + 1) * n_s + 1] = 1.0;
    let reward = vec![1.0, 10.0, 0.0, 0.0];
    let safe = vec![true, false, true, true];
    FiniteMdp::new(n_s, n_a, trans, reward, 0.9, safe, vec![0]).unwrap()
}

/// Hand-built case: 3x3 gridworld with one hazard cell; moves into the
/// hazard are unsafe, the goal corner is absorbing and rewarding.
pub fn gridworld_case() -> FiniteMdp {
    let side = 3usize;
    let n_s = side * side;
    let n_a = 4; // up, down, left, right
    let hazard = 4usize; // center cell
    let goal = 8usize; // bottom-right corner
    let step = |s: usize, a: usize| -> usize {
        let (x, y) = (s % side, s / side);
        let (nx, ny) = match a {
            0 => (x, y.saturating_sub(1)),
            1 => (x, (y + 1).min(side - 1)),
            2 => (x.saturating_sub(1), y),
            _ => ((x + 1).min(side - 1), y),
        };
        ny * side + nx
    };
    let mut trans = vec![0.0; n_s * n_a * n_s];
    let mut reward = vec![0.0; n_s * n_a];
    let mut safe = vec![true; n_s * n_a];
    for s in 0..n_s {
        for a in 0..n_a {
            let s2 = if s == goal { goal } else { step(s, a) };
            trans[(s * n_a + a) * n_s + s2] = 1.0;
            reward[s * n_a + a] = if s != goal && s2 == goal {
                1.0
            } else if s2 == hazard {
                -1.0
            } else {
                -0.01
            };
            if s2 == hazard && s != hazard {
                safe[s * n_a + a] = false;
            }
        }
    }
    FiniteMdp::new(n_s, n_a, trans, reward, 0.9, safe, vec![0]).unwrap()
}

/// Runs the three checks on one MDP with `n_policies` sampled policies per
/// direction. `tol` bounds the optimal-value gap; the kernel and reward
/// identities are held to [`EXACT_TOL`].
pub fn verify_policy_equivalence(
    mdp: &FiniteMdp,
    tol: f64,
    n_policies: usize,
    seed: u64,
) -> Result<EquivalenceReport, MdpError> {
    let wrapped = mdp.wrap()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut safe_kernel_err = 0.0f64;
    let mut safe_reward_err = 0.0f64;
    for _ in 0..n_policies {
        let pi = random_policy(&mut rng, mdp, true);
        debug_assert!(pi.is_safe_for(mdp));
        safe_kernel_err =
            safe_kernel_err.max(max_abs_diff(&policy_kernel(mdp, &pi), &policy_kernel(&wrapped, &pi)));
        safe_reward_err =
            safe_reward_err.max(max_abs_diff(&policy_reward(mdp, &pi), &policy_reward(&wrapped, &pi)));
    }

    let mut proj_kernel_err = 0.0f64;
    let mut proj_reward_err = 0.0f64;
    for _ in 0..n_policies {
        let pi_wrapped = random_policy(&mut rng, &wrapped, false);
        let pi = project_policy(&pi_wrapped, mdp)?;
        debug_assert!(pi.is_safe_for(mdp));
        proj_kernel_err = proj_kernel_err
            .max(max_abs_diff(&policy_kernel(&wrapped, &pi_wrapped), &policy_kernel(mdp, &pi)));
        proj_reward_err = proj_reward_err
            .max(max_abs_diff(&policy_reward(&wrapped, &pi_wrapped), &policy_reward(mdp, &pi)));
    }

    let solve_tol = (tol * 1e-3).min(1e-12);
    let (v_wrapped, _) = value_iteration(&wrapped, solve_tol);
    let (v_restricted, _) = value_iteration_restricted(mdp, solve_tol)?;
    let value_gap = max_abs_diff(&v_wrapped, &v_restricted);

    let pass = safe_kernel_err <= EXACT_TOL
        && safe_reward_err <= EXACT_TOL
        && proj_kernel_err <= EXACT_TOL
        && proj_reward_err <= EXACT_TOL
        && value_gap <= tol;
    Ok(EquivalenceReport {
        safe_policy_kernel_err: safe_kernel_err,
        safe_policy_reward_err: safe_reward_err,
        projection_kernel_err: proj_kernel_err,
        projection_reward_err: proj_reward_err,
        optimal_value_gap: value_gap,
        pass,
        counterexample: if pass { None } else { Some(textio::to_text(mdp)) },
    })
}

/// Aggregate over the suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub instances: usize,
    pub policies_per_instance: usize,
    pub tol: f64,
    pub max_safe_policy_err: f64,
    pub max_projection_err: f64,
    pub max_value_gap: f64,
    pub failures: usize,
    pub pass: bool,
    pub counterexample: Option<String>,
}

impl SuiteReport {
    pub fn summary(&self) -> String {
        format!(
            "instances={} policies={} safe_policy_err={:.3e} projection_err={:.3e} value_gap={:.3e} failures={} => {}",
            self.instances,
            self.policies_per_instance,
            self.max_safe_policy_err,
            self.max_projection_err,
            self.max_value_gap,
            self.failures,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Runs the checks on `instances` random MDPs (bounded by `max_states`,
/// `max_actions`) plus the hand-built cases. Deterministic in `seed`.
pub fn run_equivalence_suite(
    instances: usize,
    max_states: usize,
    max_actions: usize,
    tol: f64,
    n_policies: usize,
    seed: u64,
) -> SuiteReport {
    let reports = batch::run_indexed(instances + 2, |i| {
        let mdp = match i {
            0 => two_state_chain(),
            1 => gridworld_case(),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9E3779B97F4A7C15u64.wrapping_mul(i as u64)));
                random_mdp(&mut rng, max_states, max_actions)
            }
        };
        verify_policy_equivalence(&mdp, tol, n_policies, seed.wrapping_add(i as u64))
            .expect("generated MDPs admit wrapping")
    });

    let mut out = SuiteReport {
        instances: instances + 2,
        policies_per_instance: n_policies,
        tol,
        max_safe_policy_err: 0.0,
        max_projection_err: 0.0,
        max_value_gap: 0.0,
        failures: 0,
        pass: true,
        counterexample: None,
    };
    for r in reports {
        out.max_safe_policy_err = out
            .max_safe_policy_err
            .max(r.safe_policy_kernel_err)
            .max(r.safe_policy_reward_err);
        out.max_projection_err =
            out.max_projection_err.max(r.projection_kernel_err).max(r.projection_reward_err);
        out.max_value_gap = out.max_value_gap.max(r.optimal_value_gap);
        if !r.pass {
            out.failures += 1;
            out.pass = false;
            if out.counterexample.is_none() {
                out.counterexample = r.counterexample;
            }
        }
    }
    out
}
