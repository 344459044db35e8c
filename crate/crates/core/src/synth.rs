//! Deterministic synthetic datasets for tests and the acceptance suite.
//!
//! `textures`: smooth random regions that differ only by a small mean shift
//! under heavy noise, so single pixels and tiny windows are ambiguous and
//! accuracy must come from wide-window statistics. `bars`: thick bars whose
//! interiors match the background distribution, visible only through their
//! outlines. `xor_blobs`: the canonical 2-D feature-space XOR point set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::grid::{ImagePlane, LabelMap};

/// Per-class mean shift of the texture field, in intensity units.
const TEXTURE_SHIFT: f64 = 0.024;
/// Half-width of the uniform pixel noise.
const TEXTURE_NOISE: f64 = 0.47;
/// Spacing of the smooth random field's control nodes, in pixels.
const TEXTURE_FIELD_CELL: usize = 32;

pub struct SynthItem {
    pub image: ImagePlane,
    pub labels: LabelMap,
}

/// Smooth random field: bilinear interpolation of coarse control nodes.
fn smooth_field(size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let nodes = size.div_ceil(TEXTURE_FIELD_CELL) + 1;
    let grid: Vec<f64> = (0..nodes * nodes).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut out = vec![0.0; size * size];
    let scale = (nodes - 1) as f64 / size as f64;
    for r in 0..size {
        for c in 0..size {
            let fr = (r as f64 + 0.5) * scale - 0.5;
            let fc = (c as f64 + 0.5) * scale - 0.5;
            let fr = fr.clamp(0.0, (nodes - 1) as f64);
            let fc = fc.clamp(0.0, (nodes - 1) as f64);
            let r0 = fr.floor() as usize;
            let c0 = fc.floor() as usize;
            let r1 = (r0 + 1).min(nodes - 1);
            let c1 = (c0 + 1).min(nodes - 1);
            let tr = fr - r0 as f64;
            let tc = fc - c0 as f64;
            let top = grid[r0 * nodes + c0] * (1.0 - tc) + grid[r0 * nodes + c1] * tc;
            let bot = grid[r1 * nodes + c0] * (1.0 - tc) + grid[r1 * nodes + c1] * tc;
            out[r * size + c] = top * (1.0 - tr) + bot * tr;
        }
    }
    out
}

/// Splits field values into `classes` regions of roughly equal area.
fn field_classes(field: &[f64], classes: usize) -> Vec<u8> {
    let mut sorted = field.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cuts: Vec<f64> = (1..classes)
        .map(|k| sorted[k * field.len() / classes])
        .collect();
    field
        .iter()
        .map(|&v| cuts.iter().take_while(|&&c| v >= c).count() as u8)
        .collect()
}

/// Noise-texture dataset: `class_count` regions (2 or 3) whose pixel means
/// differ by a shift far below the noise amplitude.
pub fn textures(count: usize, size: usize, class_count: usize, seed: u64) -> Result<Vec<SynthItem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(count);
    for _ in 0..count {
        let field = smooth_field(size, &mut rng);
        let labels = field_classes(&field, class_count);
        let center = (class_count - 1) as f64 / 2.0;
        let values: Vec<f64> = labels
            .iter()
            .map(|&l| {
                let shift = (l as f64 - center) * 2.0 * TEXTURE_SHIFT;
                let noise = (rng.random::<f64>() - 0.5) * 2.0 * TEXTURE_NOISE;
                (0.5 + shift + noise).clamp(0.0, 1.0)
            })
            .collect();
        items.push(SynthItem {
            image: ImagePlane::gray(size, size, values)?,
            labels: LabelMap::new(size, size, class_count, labels)?,
        });
    }
    Ok(items)
}

/// Bars dataset: rectangles whose interiors match the background noise; the
/// only appearance cue is a one-pixel outline, so labeling an interior pixel
/// requires completing the shape from context.
pub fn bars(count: usize, size: usize, seed: u64) -> Result<Vec<SynthItem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = |rng: &mut ChaCha8Rng| 0.5 + (rng.random::<f64>() - 0.5) * 0.4;
    let mut items = Vec::with_capacity(count);
    for _ in 0..count {
        let mut values: Vec<f64> = (0..size * size).map(|_| noise(&mut rng)).collect();
        let mut labels = vec![0u8; size * size];
        let mut placed = 0;
        let mut attempts = 0;
        while placed < 2 && attempts < 50 {
            attempts += 1;
            let horizontal = rng.random::<bool>();
            let thickness = rng.random_range(6..=9);
            let length = rng.random_range(size / 2..=size - 8);
            let (bw, bh) = if horizontal {
                (length, thickness)
            } else {
                (thickness, length)
            };
            let r0 = rng.random_range(0..=size - bh);
            let c0 = rng.random_range(0..=size - bw);
            // keep bars disjoint so interiors stay outline-free
            let overlaps = (r0..r0 + bh)
                .any(|r| (c0..c0 + bw).any(|c| labels[r * size + c] == 1));
            if overlaps {
                continue;
            }
            placed += 1;
            for r in r0..r0 + bh {
                for c in c0..c0 + bw {
                    labels[r * size + c] = 1;
                    let on_outline = r == r0 || r == r0 + bh - 1 || c == c0 || c == c0 + bw - 1;
                    if on_outline {
                        values[r * size + c] = (values[r * size + c] - 0.35).clamp(0.0, 1.0);
                    }
                }
            }
        }
        items.push(SynthItem {
            image: ImagePlane::gray(size, size, values)?,
            labels: LabelMap::new(size, size, 2, labels)?,
        });
    }
    Ok(items)
}

/// 2-D XOR point set: four uniform blobs at (+-1, +-1); the label is the
/// XOR of the coordinate signs, so no single half-space separates it.
pub fn xor_blobs(count: usize, seed: u64) -> (FeatureMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(count * 2);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let sx = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let sy = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let x = sx + (rng.random::<f64>() - 0.5) * 0.9;
        let y = sy + (rng.random::<f64>() - 0.5) * 0.9;
        values.push(x);
        values.push(y);
        labels.push(f64::from((sx > 0.0) != (sy > 0.0)));
    }
    let matrix = FeatureMatrix::new(count, 2, values, vec!["x".into(), "y".into()])
        .expect("generator produces finite values");
    (matrix, labels)
}
