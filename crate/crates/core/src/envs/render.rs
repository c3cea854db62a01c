//! Sprites and frame composition. One sprite per object class pasted onto a
//! black background; the same sprites double as matching templates.
//!
//! Every sprite carries internal contrast (no constant fills) so that
//! zero-mean correlation against it is well defined, and the shapes are
//! pairwise dissimilar enough to stay below the detection threshold on the
//! wrong class.

use crate::state::{Observation, Sprite};

pub fn agent_plus() -> Sprite {
    Sprite::from_pattern(&["..#..", "..#..", "#####", "..#..", "..#.."], 1.0)
}

/// Collectible marker (distractor for the detector).
pub fn collect_x() -> Sprite {
    Sprite::from_pattern(&["#...#", ".#.#.", "..#..", ".#.#.", "#...#"], 0.85)
}

/// Grid hazard ring.
pub fn ring5() -> Sprite {
    Sprite::from_pattern(&[".###.", "#...#", "#...#", "#...#", ".###."], 1.0)
}

/// Arena hazard disk.
pub fn disk9() -> Sprite {
    Sprite::from_pattern(
        &[
            "..#####..",
            ".#######.",
            "#########",
            "#########",
            "#########",
            "#########",
            "#########",
            ".#######.",
            "..#####..",
        ],
        1.0,
    )
}

/// Goal marker (distractor): a diagonal cross, deliberately unlike the
/// axis-aligned agent cross and the round hazards.
pub fn goal_marker9() -> Sprite {
    Sprite::from_pattern(
        &[
            "#.......#",
            ".#.....#.",
            "..#...#..",
            "...#.#...",
            "....#....",
            "...#.#...",
            "..#...#..",
            ".#.....#.",
            "#.......#",
        ],
        0.9,
    )
}

/// Surrounds a sprite with a transparent border. Renders identically (zero
/// pixels are transparent) but as a template the border pins down the dark
/// surround, which separates otherwise-correlated shapes.
pub fn padded(s: &Sprite, border: usize) -> Sprite {
    let (w, h) = (s.width + 2 * border, s.height + 2 * border);
    let mut pixels = vec![0.0f32; w * h];
    for y in 0..s.height {
        for x in 0..s.width {
            pixels[(y + border) * w + (x + border)] = s.get(x, y);
        }
    }
    Sprite { width: w, height: h, pixels }
}

/// Road follower: vertical stripes.
pub fn car_striped_v() -> Sprite {
    Sprite::from_pattern(
        &["#.#.#", "#.#.#", "#.#.#", "#.#.#", "#.#.#", "#.#.#", "#.#.#", "#.#.#", "#.#.#"],
        1.0,
    )
}

/// Road leader: horizontal stripes.
pub fn car_striped_h() -> Sprite {
    Sprite::from_pattern(
        &["#####", ".....", "#####", ".....", "#####", ".....", "#####", ".....", "#####"],
        1.0,
    )
}

/// Pastes a sprite centered at real pixel coordinates, rounding to the
/// nearest pixel (within half a pixel of the requested center) and clipping
/// at the frame border. Nonzero sprite pixels overwrite by maximum.
/// Returns the rounded center actually used.
pub fn paste(frame: &mut Observation, sprite: &Sprite, cx: f64, cy: f64) -> (i64, i64) {
    let cx = cx.round() as i64;
    let cy = cy.round() as i64;
    let half_w = (sprite.width / 2) as i64;
    let half_h = (sprite.height / 2) as i64;
    for sy in 0..sprite.height as i64 {
        for sx in 0..sprite.width as i64 {
            let v = sprite.get(sx as usize, sy as usize);
            if v <= 0.0 {
                continue;
            }
            let x = cx - half_w + sx;
            let y = cy - half_h + sy;
            if x < 0 || y < 0 || x >= frame.width as i64 || y >= frame.height as i64 {
                continue;
            }
            let cur = frame.get(x as usize, y as usize);
            if v > cur {
                frame.set(x as usize, y as usize, v);
            }
        }
    }
    (cx, cy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paste_is_clipped_and_centered() {
        let mut f = Observation::new(16, 16);
        let s = agent_plus();
        let (cx, cy) = paste(&mut f, &s, 7.6, 8.4);
        assert_eq!((cx, cy), (8, 8));
        assert_eq!(f.get(8, 8), 1.0);
        // Clipping at the corner must not panic.
        paste(&mut f, &s, 0.0, 0.0);
        assert_eq!(f.get(0, 0), 1.0);
    }

    #[test]
    fn sprites_have_internal_contrast() {
        for s in [
            agent_plus(),
            collect_x(),
            ring5(),
            disk9(),
            goal_marker9(),
            car_striped_v(),
            car_striped_h(),
        ] {
            let n = (s.width * s.height) as f64;
            let mean: f64 = s.pixels.iter().map(|&p| p as f64).sum::<f64>() / n;
            let var: f64 =
                s.pixels.iter().map(|&p| (p as f64 - mean).powi(2)).sum::<f64>() / n;
            assert!(var > 0.01, "sprite lacks contrast");
        }
    }
}
