//! Shared domain types: symbolic states, actions, observations, environments.

use thiserror::Error;

/// One safety-relevant object: a small-integer class tag and a planar
/// position in world units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymObject {
    pub class: u8,
    pub x: f64,
    pub y: f64,
}

/// High-level state extracted from (or tracked alongside) an observation:
/// positions of the safety-relevant objects, the agent's own velocity, and
/// the time elapsed in the current control cycle.
///
/// Object positions may come from the simulator, from a noisy oracle, or
/// from an image detector; velocity and cycle time are trusted odometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicState {
    pub objects: Vec<SymObject>,
    pub agent_velocity: [f64; 2],
    pub time_in_cycle: f64,
}

impl SymbolicState {
    pub fn new(objects: Vec<SymObject>, agent_velocity: [f64; 2]) -> Self {
        Self { objects, agent_velocity, time_in_cycle: 0.0 }
    }

    pub fn objects_of(&self, class: u8) -> impl Iterator<Item = &SymObject> {
        self.objects.iter().filter(move |o| o.class == class)
    }

    pub fn first_of(&self, class: u8) -> Option<&SymObject> {
        self.objects_of(class).next()
    }

    /// Euclidean speed of the agent.
    pub fn speed(&self) -> f64 {
        self.agent_velocity[0].hypot(self.agent_velocity[1])
    }

    /// Checks the declared-class and object-count bounds of an environment.
    pub fn validate(&self, declared_classes: &[u8], max_objects: usize) -> Result<(), StateError> {
        if self.objects.len() > max_objects {
            return Err(StateError::TooManyObjects { count: self.objects.len(), max: max_objects });
        }
        for o in &self.objects {
            if !declared_classes.contains(&o.class) {
                return Err(StateError::UndeclaredClass(o.class));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("object count {count} exceeds declared bound {max}")]
    TooManyObjects { count: usize, max: usize },
    #[error("object class {0} is not declared safety-relevant")]
    UndeclaredClass(u8),
}

/// A control decision: a discrete action index or an acceleration command
/// (scalar for 1-D environments, planar otherwise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Discrete(usize),
    Accel1(f64),
    Accel2(f64, f64),
}

impl Action {
    /// Acceleration components; discrete actions carry none.
    pub fn accel_xy(&self) -> Option<(f64, f64)> {
        match *self {
            Action::Discrete(_) => None,
            Action::Accel1(a) => Some((a, 0.0)),
            Action::Accel2(x, y) => Some((x, y)),
        }
    }

    pub fn magnitude(&self) -> f64 {
        match self.accel_xy() {
            Some((x, y)) => x.hypot(y),
            None => 0.0,
        }
    }
}

/// Grayscale frame, `height` rows by `width` columns, values in [0, 1].
/// Pixel (x, y) lives at index `y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl Observation {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, pixels: vec![0.0; width * height] }
    }

    /// Zero-sized placeholder used when rendering is disabled.
    pub fn empty() -> Self {
        Self { width: 0, height: 0, pixels: Vec::new() }
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.pixels[y * self.width + x] = v.clamp(0.0, 1.0);
    }

    /// Bitwise equality of the pixel buffers.
    pub fn bit_eq(&self, other: &Observation) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .pixels
                .iter()
                .zip(&other.pixels)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Small grayscale stamp used both by the renderers and as a matching
/// template. Zero pixels are transparent when pasted.
#[derive(Debug, Clone, PartialEq)]
pub struct Sprite {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl Sprite {
    /// Builds a sprite from rows of `#` (bright) and `.` (transparent).
    /// All rows must have equal length.
    pub fn from_pattern(rows: &[&str], value: f32) -> Sprite {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut pixels = Vec::with_capacity(width * height);
        for row in rows {
            assert_eq!(row.len(), width, "ragged sprite pattern");
            for c in row.chars() {
                pixels.push(if c == '#' { value } else { 0.0 });
            }
        }
        Sprite { width, height, pixels }
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    /// View as a frame, e.g. for PGM export.
    pub fn to_frame(&self) -> Observation {
        Observation { width: self.width, height: self.height, pixels: self.pixels.clone() }
    }

    /// Builds a sprite from a frame, e.g. one loaded from PGM.
    pub fn from_frame(frame: &Observation) -> Sprite {
        Sprite { width: frame.width, height: frame.height, pixels: frame.pixels.clone() }
    }
}

/// Outcome of one environment step. `violated` is the simulator's
/// ground-truth safety flag; it exists for evaluation harnesses only and is
/// never consumed by a learner or a shield.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub violated: bool,
}

/// Affine world-to-pixel mapping, `px = sx * x + tx`, `py = sy * y + ty`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub sx: f64,
    pub sy: f64,
    pub tx: f64,
    pub ty: f64,
}

impl AffineMap {
    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        (self.sx * x + self.tx, self.sy * y + self.ty)
    }

    pub fn to_world(&self, px: f64, py: f64) -> (f64, f64) {
        ((px - self.tx) / self.sx, (py - self.ty) / self.sy)
    }

    /// Pixel radius corresponding to a world-unit radius (uniform scale).
    pub fn px_per_unit(&self) -> f64 {
        self.sx.abs()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("action out of bounds: {0}")]
    ActionOutOfBounds(String),
    #[error("step called before reset")]
    StepBeforeReset,
    #[error("step called on a finished episode")]
    EpisodeFinished,
}

/// Minimal environment interface. Implementations are deterministic given
/// their construction seed and the action sequence.
pub trait Environment {
    fn reset(&mut self) -> Observation;
    fn step(&mut self, action: Action) -> Result<EnvStepResult, EnvError>;
    /// Simulator ground truth, exposed for test harnesses and the noisy
    /// position oracle only.
    fn true_symbolic_state(&self) -> SymbolicState;
}
