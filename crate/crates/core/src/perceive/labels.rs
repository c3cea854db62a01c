//! Dense label maps for center-point detection training targets.

/// Per-class label image: `h` rows by `w` columns, values in [0, 1], with a
/// unit peak at each object center. Pixel (x, y) lives at `y * w + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub h: usize,
    pub w: usize,
    pub values: Vec<f64>,
}

impl LabelMap {
    pub fn zeros(h: usize, w: usize) -> Self {
        LabelMap { h, w, values: vec![0.0; h * w] }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.w + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.w + x] = v;
    }
}

/// Builds the label map for one object class by taking, at every pixel, the
/// pointwise maximum over per-center Gaussian bumps with covariance
/// diag(w/2, h/2) along (x, y).
///
/// Each bump is normalized to peak at exactly 1 at its center so that the
/// positive branch of the focal loss has support; the raw density never
/// reaches 1.
pub fn create_labels(centers: &[(f64, f64)], h: usize, w: usize) -> LabelMap {
    let mut map = LabelMap::zeros(h, w);
    if h == 0 || w == 0 {
        return map;
    }
    let var_x = w as f64 / 2.0;
    let var_y = h as f64 / 2.0;
    for &(cx, cy) in centers {
        debug_assert!(cx >= 0.0 && cx < w as f64 && cy >= 0.0 && cy < h as f64);
        for y in 0..h {
            for x in 0..w {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let bump = (-0.5 * (dx * dx / var_x + dy * dy / var_y)).exp();
                let cur = map.get(x, y);
                if bump > cur {
                    map.set(x, y, bump);
                }
            }
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_is_exactly_one() {
        let m = create_labels(&[(3.0, 4.0)], 8, 8);
        assert_eq!(m.get(3, 4), 1.0);
        assert!(m.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    // With an 8x8 map the covariance is diag(4, 4); two pixels from the
    // center along one axis the ratio to the peak is exp(-0.5 * 4/4).
    #[test]
    fn gaussian_ratio_at_offset_two() {
        let m = create_labels(&[(3.0, 4.0)], 8, 8);
        let expected = (-0.5f64).exp();
        assert!((m.get(5, 4) - expected).abs() < 1e-12);
        assert!((m.get(3, 6) - expected).abs() < 1e-12);
    }

    #[test]
    fn overlapping_bumps_take_pointwise_max() {
        let a = create_labels(&[(2.0, 4.0)], 8, 8);
        let b = create_labels(&[(5.0, 4.0)], 8, 8);
        let both = create_labels(&[(2.0, 4.0), (5.0, 4.0)], 8, 8);
        for i in 0..both.values.len() {
            assert_eq!(both.values[i], a.values[i].max(b.values[i]));
        }
    }

    #[test]
    fn empty_center_list_gives_zero_map() {
        let m = create_labels(&[], 4, 4);
        assert!(m.values.iter().all(|&v| v == 0.0));
    }
}
