//! Template matching: zero-mean normalized cross-correlation of class
//! sprites over a frame, reduced into a detection heatmap.

use crate::state::{Observation, Sprite};

use super::heatmap::Heatmap;

/// Normalized cross-correlation of `tpl` with the patch whose top-left
/// corner is (u, v). Returns 0 for flat patches.
fn ncc_at(frame: &Observation, tpl: &Sprite, tpl_mean: f64, tpl_var: f64, u: usize, v: usize) -> f64 {
    let n = (tpl.width * tpl.height) as f64;
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut cross = 0.0f64;
    for ty in 0..tpl.height {
        let row = (v + ty) * frame.width + u;
        for tx in 0..tpl.width {
            let p = frame.pixels[row + tx] as f64;
            sum += p;
            sum_sq += p * p;
            cross += p * tpl.get(tx, ty) as f64;
        }
    }
    let patch_mean = sum / n;
    let patch_var = sum_sq - n * patch_mean * patch_mean;
    if patch_var < 1e-9 || tpl_var < 1e-9 {
        return 0.0;
    }
    let cov = cross - n * patch_mean * tpl_mean;
    cov / (patch_var * tpl_var).sqrt()
}

/// Runs per-class template correlation over the frame and folds the scores
/// into a heatmap at the given stride: each cell's class probability is the
/// best (clamped) correlation whose template center falls in the cell, and
/// the cell offsets point at the best-scoring center across classes.
///
/// Feeding the result through peak decoding recovers sprite centers.
/// Templates must be strictly smaller than the frame and have odd sizes so
/// their center pixel is well defined.
pub fn template_detect(frame: &Observation, templates: &[(u8, Sprite)], stride: usize, tau_hint: f32) -> Heatmap {
    let n_classes = templates.iter().map(|(c, _)| *c as usize + 1).max().unwrap_or(0);
    let mut z = Heatmap::for_frame(frame.width, frame.height, n_classes, stride);
    let mut best_any = vec![f32::NEG_INFINITY; z.cells_x * z.cells_y];
    let _ = tau_hint;

    for (class, tpl) in templates {
        assert!(tpl.width < frame.width && tpl.height < frame.height, "template larger than frame");
        assert!(tpl.width % 2 == 1 && tpl.height % 2 == 1, "template sides must be odd");
        let n = (tpl.width * tpl.height) as f64;
        let tpl_sum: f64 = tpl.pixels.iter().map(|&p| p as f64).sum();
        let tpl_mean = tpl_sum / n;
        let tpl_var: f64 =
            tpl.pixels.iter().map(|&p| (p as f64) * (p as f64)).sum::<f64>() - n * tpl_mean * tpl_mean;
        let (half_w, half_h) = (tpl.width / 2, tpl.height / 2);

        for v in 0..=(frame.height - tpl.height) {
            for u in 0..=(frame.width - tpl.width) {
                let score = ncc_at(frame, tpl, tpl_mean, tpl_var, u, v) as f32;
                if score <= 0.0 {
                    continue;
                }
                let (cx, cy) = (u + half_w, v + half_h);
                let (i, j) = (cx / stride, cy / stride);
                if i >= z.cells_x || j >= z.cells_y {
                    continue;
                }
                let clamped = score.min(1.0);
                if clamped > z.prob(i, j, *class as usize) {
                    z.set_prob(i, j, *class as usize, clamped);
                }
                let cell = j * z.cells_x + i;
                if clamped > best_any[cell] {
                    best_any[cell] = clamped;
                    z.set_offsets(i, j, (cx - i * stride) as f32, (cy - j * stride) as f32);
                }
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perceive::heatmap::{decode_peaks, DEFAULT_STRIDE, DEFAULT_TAU};
    use crate::state::Sprite;

    fn plus() -> Sprite {
        Sprite::from_pattern(&["..#..", "..#..", "#####", "..#..", "..#.."], 1.0)
    }

    fn cross() -> Sprite {
        Sprite::from_pattern(&["#...#", ".#.#.", "..#..", ".#.#.", "#...#"], 1.0)
    }

    fn paste(frame: &mut Observation, s: &Sprite, cx: usize, cy: usize) {
        for y in 0..s.height {
            for x in 0..s.width {
                let v = s.get(x, y);
                if v > 0.0 {
                    frame.set(cx + x - s.width / 2, cy + y - s.height / 2, v);
                }
            }
        }
    }

    #[test]
    fn pasted_sprite_recovered_within_tolerance() {
        let mut frame = Observation::new(64, 64);
        paste(&mut frame, &plus(), 23, 41);
        let z = template_detect(&frame, &[(0, plus())], DEFAULT_STRIDE, DEFAULT_TAU);
        let det = decode_peaks(&z, DEFAULT_TAU);
        assert_eq!(det.len(), 1);
        let err = (det[0].x - 23.0).hypot(det[0].y - 41.0);
        assert!(err <= 2.0, "position error {err}");
    }

    #[test]
    fn empty_background_yields_no_detections() {
        let frame = Observation::new(64, 64);
        let z = template_detect(&frame, &[(0, plus()), (1, cross())], DEFAULT_STRIDE, DEFAULT_TAU);
        assert!(decode_peaks(&z, DEFAULT_TAU).is_empty());
    }

    #[test]
    fn two_separated_identical_sprites_give_two_detections() {
        let mut frame = Observation::new(64, 64);
        paste(&mut frame, &cross(), 16, 16);
        paste(&mut frame, &cross(), 16 + 3 * DEFAULT_STRIDE, 16);
        let z = template_detect(&frame, &[(0, cross())], DEFAULT_STRIDE, DEFAULT_TAU);
        let det = decode_peaks(&z, DEFAULT_TAU);
        assert_eq!(det.len(), 2);
    }

    #[test]
    fn classes_are_not_confused() {
        let mut frame = Observation::new(64, 64);
        paste(&mut frame, &plus(), 20, 20);
        paste(&mut frame, &cross(), 44, 44);
        let z = template_detect(&frame, &[(0, plus()), (1, cross())], DEFAULT_STRIDE, DEFAULT_TAU);
        let det = decode_peaks(&z, DEFAULT_TAU);
        assert_eq!(det.len(), 2);
        let d0 = det.iter().find(|d| d.class == 0).unwrap();
        let d1 = det.iter().find(|d| d.class == 1).unwrap();
        assert!((d0.x - 20.0).hypot(d0.y - 20.0) <= 2.0);
        assert!((d1.x - 44.0).hypot(d1.y - 44.0) <= 2.0);
    }
}
