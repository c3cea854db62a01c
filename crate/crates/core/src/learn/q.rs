//! Tabular Q-learning over discretized symbolic states.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of the training run over which exploration anneals.
    pub eps_decay_fraction: f64,
    /// Initial table value; a positive value drives early exploration.
    pub optimistic_init: f64,
}

impl Default for QConfig {
    fn default() -> Self {
        QConfig {
            alpha: 0.2,
            gamma: 0.99,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_fraction: 0.5,
            optimistic_init: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QAgent {
    cfg: QConfig,
    table: HashMap<(u64, usize), f64>,
    n_actions: usize,
    rng: ChaCha8Rng,
    epsilon: f64,
}

impl QAgent {
    pub fn new(cfg: QConfig, n_actions: usize, seed: u64) -> Self {
        let epsilon = cfg.eps_start;
        QAgent { cfg, table: HashMap::new(), n_actions, rng: ChaCha8Rng::seed_from_u64(seed), epsilon }
    }

    pub fn begin_episode(&mut self, episode: usize, total_episodes: usize) {
        let decay = (total_episodes as f64 * self.cfg.eps_decay_fraction).max(1.0);
        let t = (episode as f64 / decay).min(1.0);
        self.epsilon = self.cfg.eps_start + (self.cfg.eps_end - self.cfg.eps_start) * t;
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn q(&self, key: u64, a: usize) -> f64 {
        *self.table.get(&(key, a)).unwrap_or(&self.cfg.optimistic_init)
    }

    /// Greedy action with lowest-index tie break.
    pub fn greedy(&self, key: u64) -> usize {
        let mut best = 0usize;
        let mut best_q = f64::NEG_INFINITY;
        for a in 0..self.n_actions {
            let q = self.q(key, a);
            if q > best_q {
                best_q = q;
                best = a;
            }
        }
        best
    }

    pub fn act(&mut self, key: u64) -> usize {
        if self.rng.random::<f64>() < self.epsilon {
            self.rng.random_range(0..self.n_actions)
        } else {
            self.greedy(key)
        }
    }

    pub fn update(&mut self, key: u64, action: usize, reward: f64, next_key: u64, done: bool) {
        let target = if done {
            reward
        } else {
            let best_next = (0..self.n_actions).map(|a| self.q(next_key, a)).fold(f64::MIN, f64::max);
            reward + self.cfg.gamma * best_next
        };
        let q = self.q(key, action);
        self.table.insert((key, action), q + self.cfg.alpha * (target - q));
    }

    pub fn into_table(self) -> HashMap<(u64, usize), f64> {
        self.table
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
}

/// Greedy lookup against a frozen table; unseen states fall back to action 0.
pub fn greedy_from_table(table: &HashMap<(u64, usize), f64>, n_actions: usize, key: u64) -> usize {
    let mut best = 0usize;
    let mut best_q = f64::NEG_INFINITY;
    for a in 0..n_actions {
        let q = *table.get(&(key, a)).unwrap_or(&0.0);
        if q > best_q {
            best_q = q;
            best = a;
        }
    }
    best
}
