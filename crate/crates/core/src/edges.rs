//! Edge post-processing: multi-scale inference averaging and non-maximum
//! suppression for thinned boundary maps.

use crate::error::{ChmError, Result};
use crate::grid::{ImagePlane, ProbabilityMap};
use crate::hierarchy::{self, ChmModel};
use crate::pyramid::{resize_bilinear_image, resize_map_to};

/// Anything that turns an image into a single probability map. Binary CHM
/// models implement this; tests substitute stubs.
pub trait PixelLabeler {
    fn label_image(&self, image: &ImagePlane) -> Result<ProbabilityMap>;
}

impl PixelLabeler for ChmModel {
    fn label_image(&self, image: &ImagePlane) -> Result<ProbabilityMap> {
        if self.classes().len() != 1 {
            return Err(ChmError::InvalidConfig(
                "multiscale inference expects a binary model".into(),
            ));
        }
        Ok(hierarchy::infer(self, image)?.pop().expect("one class"))
    }
}

const MULTISCALE_FACTORS: [f64; 3] = [0.5, 1.0, 2.0];

/// Runs the labeler on half, original and double resolution versions of the
/// image, resizes the outputs back and averages them.
pub fn multiscale_infer<L: PixelLabeler>(model: &L, image: &ImagePlane) -> Result<ProbabilityMap> {
    let (w, h) = (image.width(), image.height());
    let mut acc = vec![0.0; w * h];
    for &scale in &MULTISCALE_FACTORS {
        let scaled = if scale == 1.0 {
            image.clone()
        } else {
            resize_bilinear_image(image, scale)
        };
        let out = model.label_image(&scaled)?;
        let back = if out.width() == w && out.height() == h {
            out
        } else {
            resize_map_to(&out, w, h)
        };
        for (a, v) in acc.iter_mut().zip(back.values()) {
            *a += v;
        }
    }
    let inv = 1.0 / MULTISCALE_FACTORS.len() as f64;
    for a in &mut acc {
        *a = (*a * inv).clamp(0.0, 1.0);
    }
    ProbabilityMap::new(w, h, acc)
}

const NMS_SIGMA: f64 = 2.0;

fn gaussian_smooth(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    let mut tmp = vec![0.0; values.len()];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let cc = (c as isize + k as isize - radius).clamp(0, width as isize - 1) as usize;
                acc += values[r * width + cc] * t;
            }
            tmp[r * width + c] = acc;
        }
    }
    let mut out = vec![0.0; values.len()];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let rr = (r as isize + k as isize - radius).clamp(0, height as isize - 1) as usize;
                acc += tmp[rr * width + c] * t;
            }
            out[r * width + c] = acc;
        }
    }
    out
}

fn sample_bilinear(values: &[f64], width: usize, height: usize, r: f64, c: f64) -> f64 {
    let r = r.clamp(0.0, (height - 1) as f64);
    let c = c.clamp(0.0, (width - 1) as f64);
    let r0 = r.floor() as usize;
    let c0 = c.floor() as usize;
    let r1 = (r0 + 1).min(height - 1);
    let c1 = (c0 + 1).min(width - 1);
    let tr = r - r0 as f64;
    let tc = c - c0 as f64;
    let top = values[r0 * width + c0] * (1.0 - tc) + values[r0 * width + c1] * tc;
    let bot = values[r1 * width + c0] * (1.0 - tc) + values[r1 * width + c1] * tc;
    top * (1.0 - tr) + bot * tr
}

/// Thins a soft boundary map: a pixel survives only if it is a local
/// maximum along the gradient direction of the smoothed map, compared
/// against its two bilinear neighbors one pixel away. The comparison is
/// strict against the forward neighbor and non-strict against the backward
/// one, so plateaus die. Survivors keep their input value exactly.
pub fn nms_thin(map: &ProbabilityMap) -> ProbabilityMap {
    let (w, h) = (map.width(), map.height());
    let smoothed = gaussian_smooth(map.values(), w, h, NMS_SIGMA);
    let at = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        smoothed[r * w + c]
    };
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let v = map.value(r, c);
            if v == 0.0 {
                continue;
            }
            let (ri, ci) = (r as isize, c as isize);
            let gr = (at(ri + 1, ci) - at(ri - 1, ci)) / 2.0;
            let gc = (at(ri, ci + 1) - at(ri, ci - 1)) / 2.0;
            let mag_sq = gr * gr + gc * gc;
            // exactly-zero gradient: fall back to the column direction so
            // the degenerate case is invariant under rescaling
            let (dr, dc) = if mag_sq == 0.0 {
                (0.0, 1.0)
            } else {
                let mag = mag_sq.sqrt();
                (gr / mag, gc / mag)
            };
            let forward = sample_bilinear(map.values(), w, h, r as f64 + dr, c as f64 + dc);
            let backward = sample_bilinear(map.values(), w, h, r as f64 - dr, c as f64 - dc);
            if v > forward && v >= backward {
                out[r * w + c] = v;
            }
        }
    }
    ProbabilityMap::new(w, h, out).expect("survivors keep valid values")
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ConstantLabeler(f64);

    impl PixelLabeler for ConstantLabeler {
        fn label_image(&self, image: &ImagePlane) -> Result<ProbabilityMap> {
            ProbabilityMap::constant(image.width(), image.height(), self.0)
        }
    }

    /// Returns a map that depends on resolution so the three scales differ.
    struct ScaleProbe;

    impl PixelLabeler for ScaleProbe {
        fn label_image(&self, image: &ImagePlane) -> Result<ProbabilityMap> {
            let v = match image.width() {
                8 => 0.3,
                16 => 0.6,
                32 => 0.9,
                _ => 0.0,
            };
            ProbabilityMap::constant(image.width(), image.height(), v)
        }
    }

    /// Identity labeler: the output map is the input's first channel.
    struct IdentityLabeler;

    impl PixelLabeler for IdentityLabeler {
        fn label_image(&self, image: &ImagePlane) -> Result<ProbabilityMap> {
            ProbabilityMap::new(image.width(), image.height(), image.channel(0).to_vec())
        }
    }

    #[test]
    fn identical_scale_outputs_pass_through() {
        let img = ImagePlane::gray(10, 10, vec![0.5; 100]).unwrap();
        let out = multiscale_infer(&ConstantLabeler(0.42), &img).unwrap();
        assert_eq!((out.width(), out.height()), (10, 10));
        assert!(out.values().iter().all(|&v| (v - 0.42).abs() < 1e-12));
    }

    #[test]
    fn averages_the_three_scales() {
        // 16x16 input: scales produce 8, 16 and 32 wide constants
        let img = ImagePlane::gray(16, 16, vec![0.5; 256]).unwrap();
        let out = multiscale_infer(&ScaleProbe, &img).unwrap();
        assert!(out.values().iter().all(|&v| (v - 0.6).abs() < 1e-12));
    }

    #[test]
    fn commutes_with_horizontal_flip_for_equivariant_stub() {
        let (w, h) = (13usize, 9usize);
        let values: Vec<f64> = (0..w * h).map(|i| ((i * 29) % 101) as f64 / 100.0).collect();
        let img = ImagePlane::gray(w, h, values.clone()).unwrap();
        let mut flipped = vec![0.0; w * h];
        for r in 0..h {
            for c in 0..w {
                flipped[r * w + c] = values[r * w + (w - 1 - c)];
            }
        }
        let img_flipped = ImagePlane::gray(w, h, flipped).unwrap();
        let a = multiscale_infer(&IdentityLabeler, &img).unwrap();
        let b = multiscale_infer(&IdentityLabeler, &img_flipped).unwrap();
        for r in 0..h {
            for c in 0..w {
                assert!(
                    (a.value(r, c) - b.value(r, w - 1 - c)).abs() < 1e-12,
                    "mismatch at ({r},{c})"
                );
            }
        }
    }

    fn band_map(width: usize, height: usize, cols: &[(usize, f64)]) -> ProbabilityMap {
        let mut values = vec![0.0; width * height];
        for r in 0..height {
            for &(c, v) in cols {
                values[r * width + c] = v;
            }
        }
        ProbabilityMap::new(width, height, values).unwrap()
    }

    #[test]
    fn thin_line_is_unchanged() {
        let map = band_map(9, 7, &[(4, 1.0)]);
        assert_eq!(nms_thin(&map), map);
    }

    #[test]
    fn ramp_band_thins_to_peak_column() {
        let map = band_map(9, 7, &[(3, 0.5), (4, 1.0), (5, 0.5)]);
        let thin = nms_thin(&map);
        for r in 0..7 {
            assert_eq!(thin.value(r, 4), 1.0, "peak survives row {r}");
            assert_eq!(thin.value(r, 3), 0.0, "left flank suppressed row {r}");
            assert_eq!(thin.value(r, 5), 0.0, "right flank suppressed row {r}");
        }
    }

    #[test]
    fn constant_map_fully_suppressed() {
        let map = ProbabilityMap::constant(8, 8, 0.7).unwrap();
        assert!(nms_thin(&map).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_bounded_by_input_and_survivors_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (w, h) = (12usize, 10usize);
            let values: Vec<f64> = (0..w * h).map(|_| rng.random::<f64>()).collect();
            let map = ProbabilityMap::new(w, h, values).unwrap();
            let thin = nms_thin(&map);
            for (t, v) in thin.values().iter().zip(map.values()) {
                assert!(t <= v);
                assert!(*t == 0.0 || t == v);
            }
        }
    }

    #[test]
    fn survivor_set_invariant_under_halving() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let (w, h) = (16usize, 12usize);
        let values: Vec<f64> = (0..w * h).map(|_| rng.random::<f64>()).collect();
        let map = ProbabilityMap::new(w, h, values.clone()).unwrap();
        // scaling by a power of two rescales every float exactly
        let half = ProbabilityMap::new(w, h, values.iter().map(|v| v * 0.5).collect()).unwrap();
        let thin_full = nms_thin(&map);
        let thin_half = nms_thin(&half);
        for (a, b) in thin_full.values().iter().zip(thin_half.values()) {
            assert_eq!(*a > 0.0, *b > 0.0);
        }
    }
}
