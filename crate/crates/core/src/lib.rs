//! Runtime-shielded safe exploration at desk scale.
//!
//! The crate provides four image-rendered benchmark environments, a small
//! constraint DSL for controller monitors over extracted object positions,
//! an action-shielding wrapper that substitutes monitor-unsafe actions with
//! uniformly sampled safe ones, perception utilities (heatmap labels, focal
//! loss, peak decoding, template matching, a noisy position oracle), tabular
//! learners, and a finite-MDP model of the shielding construction together
//! with brute-force checks of its policy-equivalence properties.
//!
//! With the default `parallel` feature, batch sweeps run on rayon; disabling
//! it yields a fully sequential build with the same results.

pub mod batch;
pub mod envs;
pub mod learn;
pub mod mdp;
pub mod monitor;
pub mod perceive;
pub mod pgm;
pub mod shield;
pub mod state;
pub mod stats;

pub use state::{Action, EnvError, EnvStepResult, Environment, Observation, SymObject, SymbolicState};
