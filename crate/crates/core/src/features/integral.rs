//! Integral image over a replicate-padded plane, plus Haar box filters.

/// Summed-area table of a plane padded by `pad` pixels of edge replication
/// on every side. Box sums are addressed in original image coordinates and
/// may extend `pad` pixels beyond the image.
pub struct PaddedIntegral {
    pad: usize,
    stride: usize,
    table: Vec<f64>,
}

impl PaddedIntegral {
    pub fn new(plane: &[f64], width: usize, height: usize, pad: usize) -> Self {
        let pw = width + 2 * pad;
        let ph = height + 2 * pad;
        let stride = pw + 1;
        let mut table = vec![0.0; stride * (ph + 1)];
        for r in 0..ph {
            let src_r = r.saturating_sub(pad).min(height - 1);
            let mut row_sum = 0.0;
            for c in 0..pw {
                let src_c = c.saturating_sub(pad).min(width - 1);
                row_sum += plane[src_r * width + src_c];
                table[(r + 1) * stride + c + 1] = table[r * stride + c + 1] + row_sum;
            }
        }
        Self { pad, stride, table }
    }

    /// Sum over rows `r0..r1`, cols `c0..c1` (exclusive ends) in original
    /// coordinates; the window must stay within the padded extent.
    pub fn box_sum(&self, r0: isize, c0: isize, r1: isize, c1: isize) -> f64 {
        let p = self.pad as isize;
        debug_assert!(r0 >= -p && c0 >= -p && r1 >= r0 && c1 >= c0);
        let r0 = (r0 + p) as usize;
        let c0 = (c0 + p) as usize;
        let r1 = (r1 + p) as usize;
        let c1 = (c1 + p) as usize;
        let s = self.stride;
        self.table[r1 * s + c1] + self.table[r0 * s + c0]
            - self.table[r0 * s + c1]
            - self.table[r1 * s + c0]
    }
}

pub const HAAR_SIZES: [usize; 3] = [4, 8, 16];
/// Filters per window size: 2-rect horizontal, 2-rect vertical,
/// 4-rect checkerboard.
pub const HAAR_KINDS: usize = 3;
pub const HAAR_PAD: usize = 8;

/// Haar responses at one pixel for every (kind, size) pair, normalized by
/// window area. A constant plane yields all zeros.
pub fn haar_at(integral: &PaddedIntegral, row: usize, col: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), HAAR_KINDS * HAAR_SIZES.len());
    let r = row as isize;
    let c = col as isize;
    for (si, &size) in HAAR_SIZES.iter().enumerate() {
        let half = (size / 2) as isize;
        let area = (size * size) as f64;
        let (r0, r1) = (r - half, r + half);
        let (c0, c1) = (c - half, c + half);
        let left = integral.box_sum(r0, c0, r1, c);
        let right = integral.box_sum(r0, c, r1, c1);
        let top = integral.box_sum(r0, c0, r, c1);
        let bottom = integral.box_sum(r, c0, r1, c1);
        let tl = integral.box_sum(r0, c0, r, c);
        let tr = integral.box_sum(r0, c, r, c1);
        let bl = integral.box_sum(r, c0, r1, c);
        let br = integral.box_sum(r, c, r1, c1);
        out[si * HAAR_KINDS] = (left - right) / area;
        out[si * HAAR_KINDS + 1] = (top - bottom) / area;
        out[si * HAAR_KINDS + 2] = (tl + br - tr - bl) / area;
    }
}
