//! Linear-softmax policy gradient over downsampled pixels, with a running
//! mean baseline. The desk-scale stand-in for a full pixel learner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use serde::Deserialize;

use crate::state::Observation;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    pub lr: f64,
    pub gamma: f64,
    /// Frames are mean-pooled to this square side before the linear map.
    pub feat_side: usize,
    pub temperature: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig { lr: 0.05, gamma: 0.99, feat_side: 8, temperature: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct LinearAgent {
    cfg: LinearConfig,
    /// Weights, `[feature][action]` flattened; last feature is the bias.
    weights: Vec<f64>,
    n_features: usize,
    n_actions: usize,
    rng: ChaCha8Rng,
    episode: Vec<(Vec<f64>, usize, f64)>,
    baseline: f64,
    episodes_seen: u64,
}

impl LinearAgent {
    pub fn new(cfg: LinearConfig, n_actions: usize, seed: u64) -> Self {
        let n_features = cfg.feat_side * cfg.feat_side + 1;
        LinearAgent {
            cfg,
            weights: vec![0.0; n_features * n_actions],
            n_features,
            n_actions,
            rng: ChaCha8Rng::seed_from_u64(seed),
            episode: Vec::new(),
            baseline: 0.0,
            episodes_seen: 0,
        }
    }

    pub fn features(cfg: &LinearConfig, frame: &Observation) -> Vec<f64> {
        pool_features(cfg.feat_side, frame)
    }

    fn probs(&self, feat: &[f64]) -> Vec<f64> {
        let mut logits = vec![0.0f64; self.n_actions];
        for (i, &f) in feat.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            for a in 0..self.n_actions {
                logits[a] += f * self.weights[i * self.n_actions + a];
            }
        }
        softmax(&logits, self.cfg.temperature)
    }

    pub fn act(&mut self, frame: &Observation) -> usize {
        let feat = pool_features(self.cfg.feat_side, frame);
        let probs = self.probs(&feat);
        let mut u: f64 = self.rng.random();
        let mut choice = self.n_actions - 1;
        for (a, &p) in probs.iter().enumerate() {
            if u < p {
                choice = a;
                break;
            }
            u -= p;
        }
        self.episode.push((feat, choice, 0.0));
        choice
    }

    pub fn record_reward(&mut self, reward: f64) {
        if let Some(last) = self.episode.last_mut() {
            last.2 = reward;
        }
    }

    /// Policy-gradient step over the finished episode.
    pub fn end_episode(&mut self) -> f64 {
        let mut returns = vec![0.0; self.episode.len()];
        let mut g = 0.0;
        for (i, &(_, _, r)) in self.episode.iter().enumerate().rev() {
            g = r + self.cfg.gamma * g;
            returns[i] = g;
        }
        let episode_return = returns.first().copied().unwrap_or(0.0);
        self.episodes_seen += 1;
        let k = self.episodes_seen.min(100) as f64;
        self.baseline += (episode_return - self.baseline) / k;

        let steps = std::mem::take(&mut self.episode);
        for ((feat, action, _), g_t) in steps.into_iter().zip(returns) {
            let adv = g_t - self.baseline;
            let probs = self.probs(&feat);
            for (i, &f) in feat.iter().enumerate() {
                if f == 0.0 {
                    continue;
                }
                for a in 0..self.n_actions {
                    let indicator = f64::from(a == action);
                    self.weights[i * self.n_actions + a] +=
                        self.cfg.lr * adv * f * (indicator - probs[a]);
                }
            }
        }
        episode_return
    }

    pub fn into_weights(self) -> (Vec<f64>, usize, usize) {
        (self.weights, self.n_features, self.n_actions)
    }
}

/// Deterministic argmax action for a frozen linear policy.
pub fn greedy_from_weights(
    weights: &[f64],
    n_actions: usize,
    cfg: &LinearConfig,
    frame: &Observation,
) -> usize {
    let feat = pool_features(cfg.feat_side, frame);
    let mut best = 0usize;
    let mut best_logit = f64::NEG_INFINITY;
    for a in 0..n_actions {
        let logit: f64 = feat.iter().enumerate().map(|(i, &f)| f * weights[i * n_actions + a]).sum();
        if logit > best_logit {
            best_logit = logit;
            best = a;
        }
    }
    best
}

fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let t = temperature.max(1e-6);
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| ((l - max) / t).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn pool_features(side: usize, frame: &Observation) -> Vec<f64> {
    let mut feat = vec![0.0f64; side * side + 1];
    *feat.last_mut().unwrap() = 1.0; // bias
    if frame.width == 0 || frame.height == 0 {
        return feat;
    }
    let mut counts = vec![0u32; side * side];
    for y in 0..frame.height {
        let fy = (y * side / frame.height).min(side - 1);
        for x in 0..frame.width {
            let fx = (x * side / frame.width).min(side - 1);
            feat[fy * side + fx] += frame.get(x, y) as f64;
            counts[fy * side + fx] += 1;
        }
    }
    for i in 0..side * side {
        if counts[i] > 0 {
            feat[i] /= counts[i] as f64;
        }
    }
    feat
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_a_distribution() {
        let p = softmax(&[1.0, 2.0, 3.0], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[2] > p[1] && p[1] > p[0]);
    }

    #[test]
    fn pooling_keeps_unit_range_and_bias() {
        let mut frame = Observation::new(64, 64);
        frame.set(10, 10, 1.0);
        let feat = pool_features(8, &frame);
        assert_eq!(feat.len(), 65);
        assert_eq!(*feat.last().unwrap(), 1.0);
        assert!(feat.iter().all(|&f| (0.0..=1.0).contains(&f)));
    }

    // A bandit with one rewarding action: the gradient learner should
    // concentrate probability on it.
    #[test]
    fn policy_gradient_learns_a_bandit() {
        let mut agent = LinearAgent::new(LinearConfig { lr: 0.5, ..Default::default() }, 3, 5);
        let frame = Observation::new(8, 8);
        for _ in 0..300 {
            let a = agent.act(&frame);
            agent.record_reward(if a == 1 { 1.0 } else { 0.0 });
            agent.end_episode();
        }
        let (w, _, n) = agent.into_weights();
        let got = greedy_from_weights(&w, n, &LinearConfig::default(), &frame);
        assert_eq!(got, 1);
    }
}
