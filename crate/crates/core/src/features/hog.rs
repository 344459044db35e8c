//! Histogram-of-oriented-gradients cell descriptors. Each pixel reads the
//! L2-normalized histogram of its own cell; normalization uses the 2x2-cell
//! block anchored at the cell (clamped inside the grid).

pub const HOG_BINS: usize = 9;
const NORM_EPS: f64 = 1e-6;

pub struct CellHistograms {
    cell: usize,
    cells_w: usize,
    bins: Vec<f64>,
}

impl CellHistograms {
    /// Normalized histogram of the cell containing (row, col).
    pub fn at(&self, row: usize, col: usize) -> &[f64] {
        let ci = row / self.cell;
        let cj = col / self.cell;
        let start = (ci * self.cells_w + cj) * HOG_BINS;
        &self.bins[start..start + HOG_BINS]
    }
}

pub fn cell_histograms(plane: &[f64], width: usize, height: usize, cell: usize) -> CellHistograms {
    let cells_w = width.div_ceil(cell);
    let cells_h = height.div_ceil(cell);
    let mut raw = vec![0.0; cells_w * cells_h * HOG_BINS];

    let at = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, height as isize - 1) as usize;
        let c = c.clamp(0, width as isize - 1) as usize;
        plane[r * width + c]
    };
    for r in 0..height {
        for c in 0..width {
            let gx = (at(r as isize, c as isize + 1) - at(r as isize, c as isize - 1)) / 2.0;
            let gy = (at(r as isize + 1, c as isize) - at(r as isize - 1, c as isize)) / 2.0;
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            // unsigned orientation in [0, pi)
            let mut theta = gy.atan2(gx);
            if theta < 0.0 {
                theta += std::f64::consts::PI;
            }
            if theta >= std::f64::consts::PI {
                theta -= std::f64::consts::PI;
            }
            let bin = ((theta / std::f64::consts::PI * HOG_BINS as f64) as usize).min(HOG_BINS - 1);
            let ci = r / cell;
            let cj = c / cell;
            raw[(ci * cells_w + cj) * HOG_BINS + bin] += mag;
        }
    }

    // normalize each cell by its 2x2 block's L2 norm
    let mut bins = vec![0.0; raw.len()];
    for ci in 0..cells_h {
        for cj in 0..cells_w {
            let bi = if cells_h > 1 { ci.min(cells_h - 2) } else { 0 };
            let bj = if cells_w > 1 { cj.min(cells_w - 2) } else { 0 };
            let mut sq = 0.0;
            for r in bi..(bi + 2).min(cells_h) {
                for c in bj..(bj + 2).min(cells_w) {
                    let start = (r * cells_w + c) * HOG_BINS;
                    for b in 0..HOG_BINS {
                        sq += raw[start + b] * raw[start + b];
                    }
                }
            }
            let norm = (sq + NORM_EPS * NORM_EPS).sqrt();
            let start = (ci * cells_w + cj) * HOG_BINS;
            for b in 0..HOG_BINS {
                bins[start + b] = raw[start + b] / norm;
            }
        }
    }
    CellHistograms { cell, cells_w, bins }
}
