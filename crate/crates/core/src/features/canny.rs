//! Canny edge indicator plane. Gaussian smoothing at sigma 1, Sobel
//! gradients, 4-direction non-maximum suppression, and hysteresis with
//! per-image percentile thresholds (70th/90th of gradient magnitude).

const SIGMA: f64 = 1.0;
const LOW_PERCENTILE: f64 = 0.70;
const HIGH_PERCENTILE: f64 = 0.90;

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

fn smooth(plane: &[f64], width: usize, height: usize) -> Vec<f64> {
    let taps = gaussian_taps(SIGMA);
    let radius = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; width * height];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let cc = (c as isize + k as isize - radius).clamp(0, width as isize - 1) as usize;
                acc += plane[r * width + cc] * t;
            }
            tmp[r * width + c] = acc;
        }
    }
    let mut out = vec![0.0; width * height];
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

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Binary edge indicator as 0/1 reals.
pub fn canny_edges(plane: &[f64], width: usize, height: usize) -> Vec<f64> {
    let n = width * height;
    if width < 3 || height < 3 {
        return vec![0.0; n];
    }
    let smoothed = smooth(plane, width, height);
    let at = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, height as isize - 1) as usize;
        let c = c.clamp(0, width as isize - 1) as usize;
        smoothed[r * width + c]
    };

    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut mag = vec![0.0; n];
    for r in 0..height {
        for c in 0..width {
            let (ri, ci) = (r as isize, c as isize);
            let sx = (at(ri - 1, ci + 1) + 2.0 * at(ri, ci + 1) + at(ri + 1, ci + 1))
                - (at(ri - 1, ci - 1) + 2.0 * at(ri, ci - 1) + at(ri + 1, ci - 1));
            let sy = (at(ri + 1, ci - 1) + 2.0 * at(ri + 1, ci) + at(ri + 1, ci + 1))
                - (at(ri - 1, ci - 1) + 2.0 * at(ri - 1, ci) + at(ri - 1, ci + 1));
            gx[r * width + c] = sx;
            gy[r * width + c] = sy;
            mag[r * width + c] = sx.hypot(sy);
        }
    }

    // thin to local maxima along the quantized gradient direction
    let mut thin = vec![0.0; n];
    for r in 1..height - 1 {
        for c in 1..width - 1 {
            let i = r * width + c;
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (a, b) = if !(22.5..157.5).contains(&angle) {
                (mag[i - 1], mag[i + 1])
            } else if angle < 67.5 {
                (mag[i - width - 1], mag[i + width + 1])
            } else if angle < 112.5 {
                (mag[i - width], mag[i + width])
            } else {
                (mag[i - width + 1], mag[i + width - 1])
            };
            if mag[i] >= a && mag[i] >= b {
                thin[i] = mag[i];
            }
        }
    }

    let mut sorted = mag.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let low = percentile(&sorted, LOW_PERCENTILE);
    let high = percentile(&sorted, HIGH_PERCENTILE);

    // hysteresis: strong seeds, then flood through weak neighbors
    let mut out = vec![0.0; n];
    let mut stack = Vec::new();
    for r in 1..height - 1 {
        for c in 1..width - 1 {
            let i = r * width + c;
            if thin[i] > high && out[i] == 0.0 {
                out[i] = 1.0;
                stack.push((r, c));
                while let Some((rr, cc)) = stack.pop() {
                    for dr in -1isize..=1 {
                        for dc in -1isize..=1 {
                            let nr = rr as isize + dr;
                            let nc = cc as isize + dc;
                            if nr < 1
                                || nc < 1
                                || nr >= height as isize - 1
                                || nc >= width as isize - 1
                            {
                                continue;
                            }
                            let j = nr as usize * width + nc as usize;
                            if thin[j] > low && out[j] == 0.0 {
                                out[j] = 1.0;
                                stack.push((nr as usize, nc as usize));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_edges() {
        let plane = vec![0.5; 20 * 20];
        assert!(canny_edges(&plane, 20, 20).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_edge_is_detected() {
        let w = 20;
        let plane: Vec<f64> = (0..w * w).map(|i| if i % w < w / 2 { 0.0 } else { 1.0 }).collect();
        let edges = canny_edges(&plane, w, w);
        assert!(edges.contains(&1.0));
        // detections hug the step, not the far borders
        for r in 0..w {
            assert_eq!(edges[r * w + 1], 0.0);
            assert_eq!(edges[r * w + w - 2], 0.0);
        }
    }

    #[test]
    fn degenerate_sizes_are_finite() {
        assert!(canny_edges(&[0.3], 1, 1).iter().all(|v| v.is_finite()));
        assert!(canny_edges(&[0.3, 0.7], 2, 1).iter().all(|&v| v == 0.0));
    }
}
