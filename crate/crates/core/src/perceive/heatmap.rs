//! Detection heatmaps and peak decoding.

use crate::state::Observation;

/// Default downscaling stride between frame pixels and heatmap cells.
pub const DEFAULT_STRIDE: usize = 4;
/// Default detection threshold.
pub const DEFAULT_TAU: f32 = 0.5;

/// A detection decoded from a heatmap: class id and sub-pixel center in
/// original-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub class: u8,
    pub x: f64,
    pub y: f64,
}

/// Stride-downscaled detector output: `cells_x` by `cells_y` cells, each
/// holding `n_classes` center probabilities in [0, 1] followed by two
/// sub-stride offsets in [0, stride).
///
/// Cell (i, j) covers frame pixels `[i*S, (i+1)*S) x [j*S, (j+1)*S)`; a
/// detection at that cell converts to frame coordinates as
/// `x = i*S + off_x`, `y = j*S + off_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub cells_x: usize,
    pub cells_y: usize,
    pub n_classes: usize,
    pub stride: usize,
    values: Vec<f32>,
}

impl Heatmap {
    pub fn new(cells_x: usize, cells_y: usize, n_classes: usize, stride: usize) -> Self {
        Heatmap {
            cells_x,
            cells_y,
            n_classes,
            stride,
            values: vec![0.0; cells_x * cells_y * (n_classes + 2)],
        }
    }

    /// Heatmap dimensions for a frame of the given pixel size.
    pub fn for_frame(width: usize, height: usize, n_classes: usize, stride: usize) -> Self {
        Self::new(width / stride, height / stride, n_classes, stride)
    }

    fn idx(&self, i: usize, j: usize, ch: usize) -> usize {
        (j * self.cells_x + i) * (self.n_classes + 2) + ch
    }

    pub fn prob(&self, i: usize, j: usize, class: usize) -> f32 {
        self.values[self.idx(i, j, class)]
    }

    pub fn set_prob(&mut self, i: usize, j: usize, class: usize, v: f32) {
        debug_assert!((0.0..=1.0).contains(&v));
        let at = self.idx(i, j, class);
        self.values[at] = v;
    }

    pub fn offsets(&self, i: usize, j: usize) -> (f32, f32) {
        (self.values[self.idx(i, j, self.n_classes)], self.values[self.idx(i, j, self.n_classes + 1)])
    }

    pub fn set_offsets(&mut self, i: usize, j: usize, ox: f32, oy: f32) {
        debug_assert!(ox >= 0.0 && (ox as usize) < self.stride);
        debug_assert!(oy >= 0.0 && (oy as usize) < self.stride);
        let a = self.idx(i, j, self.n_classes);
        let b = self.idx(i, j, self.n_classes + 1);
        self.values[a] = ox;
        self.values[b] = oy;
    }

    /// One probability channel as a unit-range frame, for PGM dumps.
    pub fn channel_frame(&self, class: usize) -> Observation {
        let mut obs = Observation::new(self.cells_x, self.cells_y);
        for j in 0..self.cells_y {
            for i in 0..self.cells_x {
                obs.set(i, j, self.prob(i, j, class));
            }
        }
        obs
    }
}

/// Decodes peaks: a detection is emitted for class `k` at cell (i, j) iff
/// the probability is at least `tau` and equals the 3x3 zero-padded max
/// around the cell. Plateau ties keep only the first cell in row-major
/// order. Cell coordinates convert through that cell's offsets.
pub fn decode_peaks(z: &Heatmap, tau: f32) -> Vec<Detection> {
    let mut out = Vec::new();
    for k in 0..z.n_classes {
        for j in 0..z.cells_y {
            for i in 0..z.cells_x {
                let v = z.prob(i, j, k);
                if v < tau {
                    continue;
                }
                let mut is_peak = true;
                'scan: for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let ni = i as i64 + di;
                        let nj = j as i64 + dj;
                        // Zero padding: outside neighbors never suppress.
                        if ni < 0 || nj < 0 || ni >= z.cells_x as i64 || nj >= z.cells_y as i64 {
                            continue;
                        }
                        let nv = z.prob(ni as usize, nj as usize, k);
                        let earlier = (nj, ni) < (j as i64, i as i64);
                        if nv > v || (nv == v && earlier) {
                            is_peak = false;
                            break 'scan;
                        }
                    }
                }
                if is_peak {
                    let (ox, oy) = z.offsets(i, j);
                    out.push(Detection {
                        class: k as u8,
                        x: (i * z.stride) as f64 + ox as f64,
                        y: (j * z.stride) as f64 + oy as f64,
                    });
                }
            }
        }
    }
    out
}
