//! Resolution operators: 2x2-average downsampling, 2x2 max-pooling,
//! duplicate upsampling and bilinear resize.
//!
//! Odd dimensions are handled by replicating the last row/column before each
//! halving step, which preserves constants and keeps the ceil-halving law
//! exact. Applying an operator zero times is the identity.

use crate::error::{ChmError, Result};
use crate::grid::{ImagePlane, ProbabilityMap, Pyramid};

fn halve_dims(w: usize, h: usize) -> (usize, usize) {
    (w.div_ceil(2), h.div_ceil(2))
}

/// Reads (row, col) from a plane, replicating the last row/column when the
/// index falls on the padded edge of an odd dimension.
#[inline]
fn padded(plane: &[f64], w: usize, h: usize, row: usize, col: usize) -> f64 {
    plane[row.min(h - 1) * w + col.min(w - 1)]
}

fn pool_plane_once(plane: &[f64], w: usize, h: usize, max: bool) -> (Vec<f64>, usize, usize) {
    let (ow, oh) = halve_dims(w, h);
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            let a = padded(plane, w, h, 2 * r, 2 * c);
            let b = padded(plane, w, h, 2 * r, 2 * c + 1);
            let d = padded(plane, w, h, 2 * r + 1, 2 * c);
            let e = padded(plane, w, h, 2 * r + 1, 2 * c + 1);
            out[r * ow + c] = if max {
                a.max(b).max(d).max(e)
            } else {
                (a + b + d + e) / 4.0
            };
        }
    }
    (out, ow, oh)
}

fn pool_plane(plane: &[f64], w: usize, h: usize, times: usize, max: bool) -> (Vec<f64>, usize, usize) {
    let mut data = plane.to_vec();
    let (mut cw, mut ch) = (w, h);
    for _ in 0..times {
        let (next, nw, nh) = pool_plane_once(&data, cw, ch, max);
        data = next;
        cw = nw;
        ch = nh;
    }
    (data, cw, ch)
}

/// Downsamples `times` halving steps by averaging each 2x2 window,
/// independently per channel.
pub fn downsample_image(image: &ImagePlane, times: usize) -> ImagePlane {
    if times == 0 {
        return image.clone();
    }
    let mut planes = Vec::with_capacity(image.channels());
    let (mut ow, mut oh) = (image.width(), image.height());
    for ch in 0..image.channels() {
        let (data, w, h) = pool_plane(image.channel(ch), image.width(), image.height(), times, false);
        ow = w;
        oh = h;
        planes.push(data);
    }
    let values: Vec<f64> = planes.into_iter().flatten().collect();
    ImagePlane::new(ow, oh, image.channels(), values).expect("pooling preserves validity")
}

/// Downsamples a probability map by 2x2 averaging.
pub fn downsample_map(map: &ProbabilityMap, times: usize) -> ProbabilityMap {
    if times == 0 {
        return map.clone();
    }
    let (data, w, h) = pool_plane(map.values(), map.width(), map.height(), times, false);
    ProbabilityMap::new(w, h, data).expect("averaging preserves range")
}

/// Max-pools a probability map `times` halving steps.
pub fn maxpool_map(map: &ProbabilityMap, times: usize) -> ProbabilityMap {
    if times == 0 {
        return map.clone();
    }
    let (data, w, h) = pool_plane(map.values(), map.width(), map.height(), times, true);
    ProbabilityMap::new(w, h, data).expect("max preserves range")
}

fn upsample_plane_once(plane: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let (ow, oh) = (w * 2, h * 2);
    let mut out = vec![0.0; ow * oh];
    for r in 0..h {
        for c in 0..w {
            let v = plane[r * w + c];
            out[2 * r * ow + 2 * c] = v;
            out[2 * r * ow + 2 * c + 1] = v;
            out[(2 * r + 1) * ow + 2 * c] = v;
            out[(2 * r + 1) * ow + 2 * c + 1] = v;
        }
    }
    (out, ow, oh)
}

/// Upsamples by pixel duplication `times` doubling steps.
pub fn upsample_map(map: &ProbabilityMap, times: usize) -> ProbabilityMap {
    let mut data = map.values().to_vec();
    let (mut w, mut h) = (map.width(), map.height());
    for _ in 0..times {
        let (next, nw, nh) = upsample_plane_once(&data, w, h);
        data = next;
        w = nw;
        h = nh;
    }
    ProbabilityMap::new(w, h, data).expect("duplication preserves range")
}

/// Upsamples then crops to the given dimensions, which inverts the
/// ceil-halving law exactly. Errors when the target exceeds the produced
/// grid.
pub fn upsample_map_to(
    map: &ProbabilityMap,
    times: usize,
    target_width: usize,
    target_height: usize,
) -> Result<ProbabilityMap> {
    let up = upsample_map(map, times);
    if target_width > up.width() || target_height > up.height() {
        return Err(ChmError::CropTooLarge {
            target_width,
            target_height,
            width: up.width(),
            height: up.height(),
        });
    }
    if target_width == up.width() && target_height == up.height() {
        return Ok(up);
    }
    let mut values = Vec::with_capacity(target_width * target_height);
    for r in 0..target_height {
        let start = r * up.width();
        values.extend_from_slice(&up.values()[start..start + target_width]);
    }
    ProbabilityMap::new(target_width, target_height, values)
}

fn resize_plane_to(plane: &[f64], w: usize, h: usize, ow: usize, oh: usize) -> Vec<f64> {
    let mut out = vec![0.0; ow * oh];
    let sx = w as f64 / ow as f64;
    let sy = h as f64 / oh as f64;
    for r in 0..oh {
        // half-pixel-centered source coordinates, clamped to the grid
        let fy = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = fy - y0 as f64;
        for c in 0..ow {
            let fx = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = fx - x0 as f64;
            let top = plane[y0 * w + x0] * (1.0 - tx) + plane[y0 * w + x1] * tx;
            let bot = plane[y1 * w + x0] * (1.0 - tx) + plane[y1 * w + x1] * tx;
            out[r * ow + c] = (top * (1.0 - ty) + bot * ty).clamp(0.0, 1.0);
        }
    }
    out
}

fn scaled_dims(w: usize, h: usize, scale: f64) -> (usize, usize) {
    let ow = ((w as f64 * scale).round() as usize).max(1);
    let oh = ((h as f64 * scale).round() as usize).max(1);
    (ow, oh)
}

/// Bilinear resize by a positive scale factor; output dims round(scale * dims),
/// minimum 1.
pub fn resize_bilinear_image(image: &ImagePlane, scale: f64) -> ImagePlane {
    assert!(scale > 0.0, "scale must be positive");
    let (ow, oh) = scaled_dims(image.width(), image.height(), scale);
    resize_image_to(image, ow, oh)
}

pub fn resize_image_to(image: &ImagePlane, ow: usize, oh: usize) -> ImagePlane {
    let mut values = Vec::with_capacity(ow * oh * image.channels());
    for ch in 0..image.channels() {
        values.extend(resize_plane_to(
            image.channel(ch),
            image.width(),
            image.height(),
            ow,
            oh,
        ));
    }
    ImagePlane::new(ow, oh, image.channels(), values).expect("bilinear stays in range")
}

pub fn resize_bilinear_map(map: &ProbabilityMap, scale: f64) -> ProbabilityMap {
    assert!(scale > 0.0, "scale must be positive");
    let (ow, oh) = scaled_dims(map.width(), map.height(), scale);
    resize_map_to(map, ow, oh)
}

pub fn resize_map_to(map: &ProbabilityMap, ow: usize, oh: usize) -> ProbabilityMap {
    let values = resize_plane_to(map.values(), map.width(), map.height(), ow, oh);
    ProbabilityMap::new(ow, oh, values).expect("bilinear stays in range")
}

/// Builds the image pyramid used by the hierarchy: level 1 is the input,
/// level l is downsampled l-1 times.
pub fn image_pyramid(image: &ImagePlane, levels: usize) -> Pyramid<ImagePlane> {
    let mut out = Vec::with_capacity(levels);
    out.push(image.clone());
    for _ in 1..levels {
        out.push(downsample_image(out.last().unwrap(), 1));
    }
    Pyramid::from_levels(out).expect("halving obeys the ceil law")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(rows: &[Vec<f64>]) -> ProbabilityMap {
        ProbabilityMap::from_rows(rows).unwrap()
    }

    #[test]
    fn downsample_averages_window() {
        let g = map(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let d = downsample_map(&g, 1);
        assert_eq!((d.width(), d.height()), (1, 1));
        assert_eq!(d.value(0, 0), 0.5);
    }

    #[test]
    fn downsample_zero_is_identity() {
        let g = map(&[vec![0.25, 0.75], vec![0.5, 1.0]]);
        assert_eq!(downsample_map(&g, 0), g);
    }

    #[test]
    fn replicate_pad_preserves_constants() {
        let g = ProbabilityMap::constant(3, 3, 1.0).unwrap();
        let d = downsample_map(&g, 1);
        assert_eq!((d.width(), d.height()), (2, 2));
        assert!(d.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn maxpool_takes_window_max() {
        let g = map(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(maxpool_map(&g, 1).value(0, 0), 1.0);
        let z = map(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(maxpool_map(&z, 1).value(0, 0), 0.0);
    }

    #[test]
    fn maxpool_two_steps_propagates_single_one() {
        // single 1 at (3,3) of a 4x4 grid survives two pooling passes
        let mut rows = vec![vec![0.0; 4]; 4];
        rows[3][3] = 1.0;
        let g = map(&rows);
        let p = maxpool_map(&g, 2);
        assert_eq!((p.width(), p.height()), (1, 1));
        assert_eq!(p.value(0, 0), 1.0);
    }

    #[test]
    fn upsample_duplicates() {
        let g = map(&[vec![0.5]]);
        let u = upsample_map(&g, 1);
        assert_eq!((u.width(), u.height()), (2, 2));
        assert!(u.values().iter().all(|&v| v == 0.5));
        assert_eq!(upsample_map(&g, 0), g);
    }

    #[test]
    fn upsample_crops_back_to_original_dims() {
        let g = map(&[vec![0.1, 0.2, 0.3], vec![0.4, 0.5, 0.6], vec![0.7, 0.8, 0.9]]);
        let d = downsample_map(&g, 1);
        let u = upsample_map_to(&d, 1, 3, 3).unwrap();
        assert_eq!((u.width(), u.height()), (3, 3));
        // oversized crop target is an error
        assert!(upsample_map_to(&d, 1, 5, 5).is_err());
    }

    #[test]
    fn bilinear_identity_at_scale_one() {
        let g = map(&[vec![0.1, 0.9], vec![0.3, 0.7]]);
        assert_eq!(resize_bilinear_map(&g, 1.0), g);
    }

    #[test]
    fn bilinear_constant_stays_constant() {
        let g = ProbabilityMap::constant(3, 2, 0.42).unwrap();
        let r = resize_bilinear_map(&g, 2.0);
        assert!(r.values().iter().all(|&v| (v - 0.42).abs() < 1e-15));
    }

    #[test]
    fn bilinear_upscale_monotone_rows() {
        // closed-form half-pixel weights on a 2x2 horizontal ramp
        let g = map(&[vec![0.0, 1.0], vec![0.0, 1.0]]);
        let r = resize_bilinear_map(&g, 2.0);
        assert_eq!((r.width(), r.height()), (4, 4));
        for row in 0..4 {
            let vals: Vec<f64> = (0..4).map(|c| r.value(row, c)).collect();
            assert_eq!(vals, vec![0.0, 0.25, 0.75, 1.0]);
        }
    }

    #[test]
    fn image_pyramid_follows_ceil_law() {
        let img = ImagePlane::gray(7, 5, vec![0.5; 35]).unwrap();
        let pyr = image_pyramid(&img, 4);
        let dims: Vec<(usize, usize)> = pyr.levels().iter().map(|p| (p.width(), p.height())).collect();
        assert_eq!(dims, vec![(7, 5), (4, 3), (2, 2), (1, 1)]);
    }

    // Independent brute-force oracle: materializes the replicate-padded
    // grid and scans every 2x2 window.
    fn pool_oracle(rows: &[Vec<f64>], max: bool) -> Vec<Vec<f64>> {
        let h = rows.len();
        let w = rows[0].len();
        let (ph, pw) = (h + h % 2, w + w % 2);
        let mut padded = vec![vec![0.0; pw]; ph];
        for r in 0..ph {
            for c in 0..pw {
                padded[r][c] = rows[r.min(h - 1)][c.min(w - 1)];
            }
        }
        let mut out = vec![vec![0.0; pw / 2]; ph / 2];
        for r in 0..ph / 2 {
            for c in 0..pw / 2 {
                let vals = [
                    padded[2 * r][2 * c],
                    padded[2 * r][2 * c + 1],
                    padded[2 * r + 1][2 * c],
                    padded[2 * r + 1][2 * c + 1],
                ];
                out[r][c] = if max {
                    vals.iter().cloned().fold(f64::MIN, f64::max)
                } else {
                    (vals[0] + vals[1] + vals[2] + vals[3]) / 4.0
                };
            }
        }
        out
    }

    fn dyadic_grid() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..=9, 1usize..=9).prop_flat_map(|(w, h)| {
            proptest::collection::vec(
                proptest::collection::vec((0u16..=256).prop_map(|k| k as f64 / 256.0), w),
                h,
            )
        })
    }

    proptest! {
        #[test]
        fn pooling_matches_oracle(rows in dyadic_grid(), times in 0usize..=3, max in proptest::bool::ANY) {
            let g = map(&rows);
            let pooled = if max { maxpool_map(&g, times) } else { downsample_map(&g, times) };
            let mut oracle = rows.clone();
            for _ in 0..times {
                oracle = pool_oracle(&oracle, max);
            }
            prop_assert_eq!(pooled.height(), oracle.len());
            prop_assert_eq!(pooled.width(), oracle[0].len());
            for r in 0..oracle.len() {
                for c in 0..oracle[0].len() {
                    prop_assert_eq!(pooled.value(r, c), oracle[r][c]);
                }
            }
        }

        #[test]
        fn maxpool_dominates_average(rows in dyadic_grid(), times in 0usize..=3) {
            let g = map(&rows);
            let mx = maxpool_map(&g, times);
            let av = downsample_map(&g, times);
            for (a, b) in mx.values().iter().zip(av.values()) {
                prop_assert!(a >= b);
            }
        }

        #[test]
        fn binary_maps_stay_binary_under_maxpool(rows in (1usize..=9, 1usize..=9).prop_flat_map(|(w, h)| {
            proptest::collection::vec(proptest::collection::vec((0u8..=1).prop_map(f64::from), w), h)
        }), times in 0usize..=3) {
            let g = map(&rows);
            let p = maxpool_map(&g, times);
            prop_assert!(p.values().iter().all(|&v| v == 0.0 || v == 1.0));
        }

        #[test]
        fn operators_agree_on_constants(value in 0.0f64..=1.0, w in 1usize..=9, h in 1usize..=9, times in 0usize..=3) {
            let g = ProbabilityMap::constant(w, h, value).unwrap();
            let mx = maxpool_map(&g, times);
            let av = downsample_map(&g, times);
            for (a, b) in mx.values().iter().zip(av.values()) {
                prop_assert_eq!(a, b);
            }
        }
    }
}
