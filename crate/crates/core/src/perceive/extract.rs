//! Symbolic extraction: the noisy position oracle and the template-matching
//! detector, behind one interface for the shield.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::state::{AffineMap, Observation, Sprite, SymObject, SymbolicState};

use super::heatmap::{decode_peaks, DEFAULT_STRIDE, DEFAULT_TAU};
use super::template::template_detect;

/// Perturbs every object position uniformly within the closed disk of
/// radius `eps`; classes, counts, velocity, and cycle time are preserved.
pub fn noisy_oracle(truth: &SymbolicState, eps: f64, rng: &mut impl Rng) -> SymbolicState {
    assert!(eps >= 0.0);
    let mut out = truth.clone();
    if eps == 0.0 {
        return out;
    }
    for o in &mut out.objects {
        let r = eps * rng.random::<f64>().sqrt();
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        o.x += r * theta.cos();
        o.y += r * theta.sin();
    }
    out
}

/// Oracle-backed extractor with its own RNG stream.
#[derive(Debug, Clone)]
pub struct OracleExtractor {
    pub eps: f64,
    rng: ChaCha8Rng,
}

impl OracleExtractor {
    pub fn new(eps: f64, seed: u64) -> Self {
        OracleExtractor { eps, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

/// Detector-backed extractor: template correlation, peak decoding, then the
/// pixel-to-world affine map. Agent velocity and cycle time are taken from
/// odometry (the simulator state), matching a robot that knows its own
/// speed but perceives object positions visually.
#[derive(Debug, Clone)]
pub struct DetectorExtractor {
    pub templates: Vec<(u8, Sprite)>,
    pub map: AffineMap,
    pub stride: usize,
    pub tau: f32,
}

impl DetectorExtractor {
    pub fn new(templates: Vec<(u8, Sprite)>, map: AffineMap) -> Self {
        DetectorExtractor { templates, map, stride: DEFAULT_STRIDE, tau: DEFAULT_TAU }
    }
}

/// The symbolic mapping used by a shield: frame (plus trusted odometry) to
/// object positions.
#[derive(Debug, Clone)]
pub enum Extractor {
    /// Ground truth with bounded uniform position noise.
    Oracle(OracleExtractor),
    /// Template detection over the rendered frame.
    Detector(DetectorExtractor),
}

impl Extractor {
    pub fn oracle(eps: f64, seed: u64) -> Self {
        Extractor::Oracle(OracleExtractor::new(eps, seed))
    }

    pub fn extract(&mut self, frame: &Observation, truth: &SymbolicState) -> SymbolicState {
        match self {
            Extractor::Oracle(o) => noisy_oracle(truth, o.eps, &mut o.rng),
            Extractor::Detector(d) => {
                let z = template_detect(frame, &d.templates, d.stride, d.tau);
                let objects = decode_peaks(&z, d.tau)
                    .into_iter()
                    .map(|det| {
                        let (x, y) = d.map.to_world(det.x, det.y);
                        SymObject { class: det.class, x, y }
                    })
                    .collect();
                SymbolicState {
                    objects,
                    agent_velocity: truth.agent_velocity,
                    time_in_cycle: truth.time_in_cycle,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn truth() -> SymbolicState {
        SymbolicState::new(
            vec![
                SymObject { class: 0, x: 1.0, y: 2.0 },
                SymObject { class: 1, x: 5.0, y: 6.0 },
            ],
            [0.5, -0.25],
        )
    }

    #[test]
    fn zero_eps_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(noisy_oracle(&truth(), 0.0, &mut rng), truth());
    }

    #[test]
    fn displacement_never_exceeds_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = truth();
        let eps = 0.5;
        let mut max_disp = 0.0f64;
        for _ in 0..100_000 {
            let noisy = noisy_oracle(&t, eps, &mut rng);
            for (a, b) in t.objects.iter().zip(&noisy.objects) {
                max_disp = max_disp.max((a.x - b.x).hypot(a.y - b.y));
            }
        }
        assert!(max_disp <= eps, "max displacement {max_disp}");
        // The bound is essentially attained, so the disk is not undersampled.
        assert!(max_disp > 0.9 * eps);
    }

    #[test]
    fn classes_counts_and_odometry_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = truth();
        let noisy = noisy_oracle(&t, 1.0, &mut rng);
        assert_eq!(noisy.objects.len(), t.objects.len());
        for (a, b) in t.objects.iter().zip(&noisy.objects) {
            assert_eq!(a.class, b.class);
        }
        assert_eq!(noisy.agent_velocity, t.agent_velocity);
        assert_eq!(noisy.time_in_cycle, t.time_in_cycle);
    }
}
