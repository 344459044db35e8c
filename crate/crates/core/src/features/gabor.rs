//! Even-symmetric Gabor filter bank: 4 orientations x 2 wavelengths,
//! magnitude responses, kernels normalized to unit absolute mass.

use crate::exec;

pub const GABOR_ORIENTATIONS: usize = 4;
pub const GABOR_WAVELENGTHS: [f64; 2] = [4.0, 8.0];
const GABOR_ASPECT: f64 = 0.8;

struct Kernel {
    radius: usize,
    taps: Vec<f64>,
}

fn build_kernel(theta: f64, wavelength: f64) -> Kernel {
    let sigma = 0.5 * wavelength;
    let radius = (2.0 * sigma).ceil() as usize;
    let side = 2 * radius + 1;
    let mut taps = vec![0.0; side * side];
    let (sin_t, cos_t) = theta.sin_cos();
    for dy in -(radius as isize)..=(radius as isize) {
        for dx in -(radius as isize)..=(radius as isize) {
            let x = dx as f64;
            let y = dy as f64;
            let xp = x * cos_t + y * sin_t;
            let yp = -x * sin_t + y * cos_t;
            let envelope = (-(xp * xp + GABOR_ASPECT * GABOR_ASPECT * yp * yp)
                / (2.0 * sigma * sigma))
                .exp();
            let v = envelope * (2.0 * std::f64::consts::PI * xp / wavelength).cos();
            taps[(dy + radius as isize) as usize * side + (dx + radius as isize) as usize] = v;
        }
    }
    // remove the DC component so constant regions respond with zero,
    // then normalize to unit absolute mass
    let mean = taps.iter().sum::<f64>() / taps.len() as f64;
    for t in &mut taps {
        *t -= mean;
    }
    let abs_mass: f64 = taps.iter().map(|t| t.abs()).sum();
    for t in &mut taps {
        *t /= abs_mass;
    }
    Kernel { radius, taps }
}

/// Magnitude responses of the full bank; 8 planes in
/// (orientation-major, wavelength-minor) order.
pub fn gabor_bank(plane: &[f64], width: usize, height: usize) -> Vec<Vec<f64>> {
    let mut kernels = Vec::with_capacity(GABOR_ORIENTATIONS * GABOR_WAVELENGTHS.len());
    for o in 0..GABOR_ORIENTATIONS {
        let theta = o as f64 * std::f64::consts::PI / GABOR_ORIENTATIONS as f64;
        for &wavelength in &GABOR_WAVELENGTHS {
            kernels.push(build_kernel(theta, wavelength));
        }
    }
    kernels
        .iter()
        .map(|k| convolve_abs(plane, width, height, k))
        .collect()
}

fn convolve_abs(plane: &[f64], width: usize, height: usize, kernel: &Kernel) -> Vec<f64> {
    let radius = kernel.radius as isize;
    let side = 2 * kernel.radius + 1;
    let mut out = vec![0.0; width * height];
    exec::fill_chunks(&mut out, width, |r, row_out| {
        for (c, out_v) in row_out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for dy in -radius..=radius {
                let rr = (r as isize + dy).clamp(0, height as isize - 1) as usize;
                let krow = (dy + radius) as usize * side;
                for dx in -radius..=radius {
                    let cc = (c as isize + dx).clamp(0, width as isize - 1) as usize;
                    acc += plane[rr * width + cc] * kernel.taps[krow + (dx + radius) as usize];
                }
            }
            *out_v = acc.abs();
        }
    });
    out
}
