//! Binary PGM (P5, maxval 255) encoding for frames and sprites.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::state::Observation;

/// Encodes a frame as binary PGM. Values are scaled to 0..=255.
pub fn encode(obs: &Observation) -> Vec<u8> {
    let mut out = Vec::with_capacity(obs.pixels.len() + 32);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", obs.width, obs.height).as_bytes());
    for p in &obs.pixels {
        out.push((p.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    out
}

pub fn write_file(obs: &Observation, path: &Path) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(obs))
}

/// Decodes a binary PGM back into a unit-range frame.
pub fn decode(bytes: &[u8]) -> Result<Observation, String> {
    let mut pos = 0usize;
    let mut fields = Vec::new();
    // Header: magic, width, height, maxval; '#' starts a comment line.
    while fields.len() < 4 && pos < bytes.len() {
        while pos < bytes.len() && (bytes[pos] as char).is_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !(bytes[pos] as char).is_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|e| e.to_string())?.to_owned());
    }
    if fields.len() < 4 || fields[0] != "P5" {
        return Err("not a binary PGM (P5) file".into());
    }
    let width: usize = fields[1].parse().map_err(|_| "bad width")?;
    let height: usize = fields[2].parse().map_err(|_| "bad height")?;
    let maxval: f32 = fields[3].parse().map_err(|_| "bad maxval")?;
    if maxval <= 0.0 || maxval > 255.0 {
        return Err("unsupported maxval".into());
    }
    pos += 1; // single whitespace after maxval
    let need = width * height;
    if bytes.len() < pos + need {
        return Err("truncated pixel data".into());
    }
    let pixels = bytes[pos..pos + need].iter().map(|&b| b as f32 / maxval).collect();
    Ok(Observation { width, height, pixels })
}

pub fn read_file(path: &Path) -> Result<Observation, String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_within_quantization() {
        let mut obs = Observation::new(3, 2);
        obs.set(0, 0, 0.0);
        obs.set(1, 0, 0.5);
        obs.set(2, 1, 1.0);
        let back = decode(&encode(&obs)).unwrap();
        assert_eq!((back.width, back.height), (3, 2));
        for (a, b) in obs.pixels.iter().zip(&back.pixels) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
    }

    #[test]
    fn rejects_non_pgm() {
        assert!(decode(b"P6\n1 1\n255\n ").is_err());
    }
}
