//! Tabular solvers: value iteration (optionally restricted to safe
//! actions), iterative policy evaluation, and policy-induced kernels.

use super::{FiniteMdp, MdpError, TabularPolicy};

fn residual_threshold(mdp: &FiniteMdp, tol: f64) -> f64 {
    // ||V_k - V*||_inf <= gamma / (1 - gamma) * residual, so iterating to
    // this residual guarantees `tol` accuracy of the returned values.
    tol * (1.0 - mdp.gamma()) / mdp.gamma()
}

fn sweep(mdp: &FiniteMdp, values: &[f64], actions: &dyn Fn(usize) -> Vec<usize>) -> (Vec<f64>, Vec<usize>) {
    let mut next = vec![0.0; mdp.n_states()];
    let mut greedy = vec![0usize; mdp.n_states()];
    for s in 0..mdp.n_states() {
        let mut best = f64::NEG_INFINITY;
        let mut best_a = 0usize;
        for a in actions(s) {
            let mut q = mdp.r(s, a);
            for s2 in 0..mdp.n_states() {
                let p = mdp.t(s, a, s2);
                if p > 0.0 {
                    q += mdp.gamma() * p * values[s2];
                }
            }
            if q > best {
                best = q;
                best_a = a;
            }
        }
        next[s] = best;
        greedy[s] = best_a;
    }
    (next, greedy)
}

fn iterate(
    mdp: &FiniteMdp,
    tol: f64,
    actions: &dyn Fn(usize) -> Vec<usize>,
) -> (Vec<f64>, Vec<usize>) {
    assert!(tol > 0.0);
    let threshold = residual_threshold(mdp, tol);
    let mut values = vec![0.0; mdp.n_states()];
    let mut greedy = vec![0usize; mdp.n_states()];
    for _ in 0..5_000_000u64 {
        let (next, g) = sweep(mdp, &values, actions);
        let residual = values
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        values = next;
        greedy = g;
        if residual < threshold {
            break;
        }
    }
    (values, greedy)
}

/// Optimal values and a greedy policy (ties broken by lowest action index)
/// with sup-norm accuracy `tol`.
pub fn value_iteration(mdp: &FiniteMdp, tol: f64) -> (Vec<f64>, Vec<usize>) {
    iterate(mdp, tol, &|_s| (0..mdp.n_actions()).collect())
}

/// Value iteration over safe actions only. Errors if some state has no
/// safe action.
pub fn value_iteration_restricted(mdp: &FiniteMdp, tol: f64) -> Result<(Vec<f64>, Vec<usize>), MdpError> {
    for s in 0..mdp.n_states() {
        if mdp.safe_actions(s).is_empty() {
            return Err(MdpError::NoSafeAction(s));
        }
    }
    Ok(iterate(mdp, tol, &|s| mdp.safe_actions(s)))
}

/// State-transition kernel P(s'|s) induced by a policy: rows are
/// policy-weighted mixtures of the action rows, in fixed action order.
pub fn policy_kernel(mdp: &FiniteMdp, policy: &TabularPolicy) -> Vec<f64> {
    let n = mdp.n_states();
    let mut kernel = vec![0.0; n * n];
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let w = policy.p(s, a);
            if w == 0.0 {
                continue;
            }
            for s2 in 0..n {
                kernel[s * n + s2] += w * mdp.t(s, a, s2);
            }
        }
    }
    kernel
}

/// Expected one-step reward per state under a policy.
pub fn policy_reward(mdp: &FiniteMdp, policy: &TabularPolicy) -> Vec<f64> {
    (0..mdp.n_states())
        .map(|s| (0..mdp.n_actions()).map(|a| policy.p(s, a) * mdp.r(s, a)).sum())
        .collect()
}

/// Iterative evaluation of V^pi with sup-norm accuracy `tol`.
pub fn policy_value(mdp: &FiniteMdp, policy: &TabularPolicy, tol: f64) -> Vec<f64> {
    assert!(tol > 0.0);
    let kernel = policy_kernel(mdp, policy);
    let rewards = policy_reward(mdp, policy);
    let n = mdp.n_states();
    let threshold = residual_threshold(mdp, tol);
    let mut values = vec![0.0; n];
    for _ in 0..5_000_000u64 {
        let mut next = vec![0.0; n];
        let mut residual = 0.0f64;
        for s in 0..n {
            let mut v = rewards[s];
            for s2 in 0..n {
                let p = kernel[s * n + s2];
                if p > 0.0 {
                    v += mdp.gamma() * p * values[s2];
                }
            }
            residual = residual.max((v - values[s]).abs());
            next[s] = v;
        }
        values = next;
        if residual < threshold {
            break;
        }
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::equivalence::two_state_chain;

    #[test]
    fn absorbing_zero_reward_mdp_has_zero_values() {
        let e = FiniteMdp::new(2, 1, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 0.9, vec![true; 2], vec![0])
            .unwrap();
        let (v, _) = value_iteration(&e, 1e-12);
        assert!(v.iter().all(|&x| x.abs() < 1e-12));
    }

    // Closed form: one +1 step into an absorbing zero-reward state.
    #[test]
    fn two_state_chain_value_is_one() {
        let e = two_state_chain();
        let (v, greedy) = value_iteration_restricted(&e, 1e-12).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-9);
        assert!(v[1].abs() < 1e-12);
        assert_eq!(greedy[0], 0);
        // Wrapped: the unsafe action inherits the safe row, values agree.
        let w = e.wrap().unwrap();
        let (vw, _) = value_iteration(&w, 1e-12);
        assert!((vw[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn greedy_ties_break_to_lowest_index() {
        // Two identical actions.
        let e = FiniteMdp::new(
            1,
            2,
            vec![1.0, 1.0],
            vec![0.5, 0.5],
            0.5,
            vec![true, true],
            vec![0],
        )
        .unwrap();
        let (_, greedy) = value_iteration(&e, 1e-10);
        assert_eq!(greedy[0], 0);
    }

    #[test]
    fn policy_value_matches_geometric_series() {
        // Single state, self-loop, reward 1: V = 1 / (1 - gamma).
        let e = FiniteMdp::new(1, 1, vec![1.0], vec![1.0], 0.9, vec![true], vec![0]).unwrap();
        let pi = TabularPolicy::new(1, 1, vec![1.0]).unwrap();
        let v = policy_value(&e, &pi, 1e-10);
        assert!((v[0] - 10.0).abs() < 1e-8);
    }

    // Monte-Carlo cross-check of iterative policy evaluation on random
    // 5-state MDPs: estimates agree within three standard errors plus the
    // horizon-truncation bias.
    #[test]
    fn policy_value_matches_monte_carlo() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..3 {
            let e = crate::mdp::random_mdp(&mut rng, 5, 3);
            let pi = crate::mdp::equivalence::random_policy(&mut rng, &e, false);
            let v = policy_value(&e, &pi, 1e-10);
            let gamma = e.gamma();
            let horizon = ((1e-4f64.ln()) / gamma.ln()).ceil() as usize;
            let start = 0usize;
            let episodes = 20_000;
            let mut returns = Vec::with_capacity(episodes);
            for _ in 0..episodes {
                let mut s = start;
                let mut g = 0.0;
                let mut discount = 1.0;
                for _ in 0..horizon {
                    // Sample an action then a successor.
                    let mut u: f64 = rng.random();
                    let mut a = 0;
                    for cand in 0..e.n_actions() {
                        let p = pi.p(s, cand);
                        if u < p {
                            a = cand;
                            break;
                        }
                        u -= p;
                        a = cand;
                    }
                    g += discount * e.r(s, a);
                    discount *= gamma;
                    let mut u2: f64 = rng.random();
                    let mut s2 = 0;
                    for cand in 0..e.n_states() {
                        let p = e.t(s, a, cand);
                        if u2 < p {
                            s2 = cand;
                            break;
                        }
                        u2 -= p;
                        s2 = cand;
                    }
                    s = s2;
                }
                returns.push(g);
            }
            let mean: f64 = returns.iter().sum::<f64>() / episodes as f64;
            let var: f64 =
                returns.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / episodes as f64;
            let sigma = (var / episodes as f64).sqrt();
            let bias = 1e-4 / (1.0 - gamma);
            assert!(
                (mean - v[start]).abs() <= 3.0 * sigma + bias + 1e-6,
                "mc {mean} vs dp {} (3 sigma {})",
                v[start],
                3.0 * sigma
            );
        }
    }
}
