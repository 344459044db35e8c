//! Per-pixel feature extraction. Appearance features come from the input
//! image (Haar, HOG, a dense orientation descriptor, Gabor, Canny, position
//! moments and a sparse intensity stencil); context features are stencil
//! samples of classifier output maps and nothing else.

mod canny;
mod gabor;
mod hog;
mod integral;

use std::sync::OnceLock;

use crate::config::FeatureRegistry;
use crate::error::{ChmError, Result};
use crate::exec;
use crate::grid::{ImagePlane, ProbabilityMap};

pub use canny::canny_edges;
pub use gabor::gabor_bank;
pub use hog::{cell_histograms, HOG_BINS};
pub use integral::{haar_at, PaddedIntegral, HAAR_KINDS, HAAR_PAD, HAAR_SIZES};

pub const STENCIL_SAMPLES: usize = 57;
const HOG_CELL: usize = 8;
const DENSE_ORIENT_CELL: usize = 4;
const GABOR_COUNT: usize = gabor::GABOR_ORIENTATIONS * gabor::GABOR_WAVELENGTHS.len();
const POSITION_COUNT: usize = 5;

/// Fixed sampling offsets inside a 15x15 window: the full radius-2 block,
/// then progressively sparser rings at Chebyshev radii 3, 5 and 7.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StencilOffsets {
    offsets: Vec<(i32, i32)>,
}

impl StencilOffsets {
    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Cells with Chebyshev radius exactly `radius`, in row-major order.
fn ring(radius: i32) -> Vec<(i32, i32)> {
    let mut cells = Vec::new();
    for dr in -radius..=radius {
        for dc in -radius..=radius {
            if dr.abs().max(dc.abs()) == radius {
                cells.push((dr, dc));
            }
        }
    }
    cells
}

fn build_stencil() -> StencilOffsets {
    let mut offsets = Vec::with_capacity(STENCIL_SAMPLES);
    for dr in -2i32..=2 {
        for dc in -2i32..=2 {
            offsets.push((dr, dc));
        }
    }
    let r3 = ring(3);
    offsets.extend(r3.iter().step_by(2));
    let r5 = ring(5);
    offsets.extend(r5.iter().step_by(4));
    let r7 = ring(7);
    for k in 0..10u32 {
        let idx = (f64::from(k) * 56.0 / 10.0).round() as usize;
        offsets.push(r7[idx]);
    }
    debug_assert_eq!(offsets.len(), STENCIL_SAMPLES);
    StencilOffsets { offsets }
}

/// The fixed 57-sample stencil layout.
pub fn stencil_layout() -> &'static StencilOffsets {
    static LAYOUT: OnceLock<StencilOffsets> = OnceLock::new();
    LAYOUT.get_or_init(build_stencil)
}

/// Row-major matrix of per-pixel feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pixel_count: usize,
    feature_count: usize,
    values: Vec<f64>,
    column_labels: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(pixel_count: usize, feature_count: usize, values: Vec<f64>, column_labels: Vec<String>) -> Result<Self> {
        if values.len() != pixel_count * feature_count {
            return Err(ChmError::dims(
                format!("{} values", pixel_count * feature_count),
                format!("{} values", values.len()),
            ));
        }
        if column_labels.len() != feature_count {
            return Err(ChmError::dims(
                format!("{feature_count} labels"),
                format!("{} labels", column_labels.len()),
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ChmError::NonFinite { index });
        }
        Ok(Self {
            pixel_count,
            feature_count,
            values,
            column_labels,
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.pixel_count
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn row(&self, pixel: usize) -> &[f64] {
        &self.values[pixel * self.feature_count..(pixel + 1) * self.feature_count]
    }

    pub fn column_labels(&self) -> &[String] {
        &self.column_labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copies the given rows into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.feature_count);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            pixel_count: rows.len(),
            feature_count: self.feature_count,
            values,
            column_labels: self.column_labels.clone(),
        }
    }
}

/// Width of the appearance block for a channel count under a registry.
pub fn appearance_width(registry: &FeatureRegistry, channels: usize) -> usize {
    let mut w = 0;
    if registry.haar {
        w += HAAR_KINDS * HAAR_SIZES.len() * channels;
    }
    if registry.hog {
        w += HOG_BINS * channels;
    }
    if registry.dense_orientation {
        w += HOG_BINS * channels;
    }
    if registry.gabor {
        w += GABOR_COUNT;
    }
    if registry.canny {
        w += 1;
    }
    if registry.position {
        w += POSITION_COUNT;
    }
    if registry.stencil {
        w += STENCIL_SAMPLES * channels;
    }
    w
}

fn appearance_labels(registry: &FeatureRegistry, channels: usize) -> Vec<String> {
    let mut labels = Vec::new();
    if registry.haar {
        for ch in 0..channels {
            for &size in &HAAR_SIZES {
                for kind in ["h2", "v2", "checker"] {
                    labels.push(format!("haar_{kind}_s{size}_c{ch}"));
                }
            }
        }
    }
    if registry.hog {
        for ch in 0..channels {
            for b in 0..HOG_BINS {
                labels.push(format!("hog_b{b}_c{ch}"));
            }
        }
    }
    if registry.dense_orientation {
        for ch in 0..channels {
            for b in 0..HOG_BINS {
                labels.push(format!("dorient_b{b}_c{ch}"));
            }
        }
    }
    if registry.gabor {
        for o in 0..gabor::GABOR_ORIENTATIONS {
            for &w in &gabor::GABOR_WAVELENGTHS {
                labels.push(format!("gabor_o{o}_w{w}"));
            }
        }
    }
    if registry.canny {
        labels.push("canny".into());
    }
    if registry.position {
        for name in ["pos_x", "pos_y", "pos_xx", "pos_yy", "pos_xy"] {
            labels.push(name.into());
        }
    }
    if registry.stencil {
        for ch in 0..channels {
            for (k, (dr, dc)) in stencil_layout().offsets().iter().enumerate() {
                labels.push(format!("stencil_{k}_r{dr}_c{dc}_ch{ch}"));
            }
        }
    }
    labels
}

fn context_labels(map_count: usize) -> Vec<String> {
    let mut labels = Vec::with_capacity(map_count * STENCIL_SAMPLES);
    for m in 0..map_count {
        for k in 0..STENCIL_SAMPLES {
            labels.push(format!("ctx{m}_s{k}"));
        }
    }
    labels
}

/// Precomputed per-image planes that per-pixel rows read from.
struct AppearancePlanes<'a> {
    registry: &'a FeatureRegistry,
    width: usize,
    height: usize,
    integrals: Vec<PaddedIntegral>,
    hogs: Vec<hog::CellHistograms>,
    dense: Vec<hog::CellHistograms>,
    gabor: Vec<Vec<f64>>,
    canny: Vec<f64>,
    channel_planes: Vec<&'a [f64]>,
}

impl<'a> AppearancePlanes<'a> {
    fn new(image: &'a ImagePlane, registry: &'a FeatureRegistry, luminance: &[f64]) -> Self {
        let (w, h) = (image.width(), image.height());
        let channels = image.channels();
        let channel_planes: Vec<&[f64]> = (0..channels).map(|c| image.channel(c)).collect();
        let integrals = if registry.haar {
            channel_planes
                .iter()
                .map(|p| PaddedIntegral::new(p, w, h, HAAR_PAD))
                .collect()
        } else {
            Vec::new()
        };
        let hogs = if registry.hog {
            channel_planes
                .iter()
                .map(|p| cell_histograms(p, w, h, HOG_CELL))
                .collect()
        } else {
            Vec::new()
        };
        let dense = if registry.dense_orientation {
            channel_planes
                .iter()
                .map(|p| cell_histograms(p, w, h, DENSE_ORIENT_CELL))
                .collect()
        } else {
            Vec::new()
        };
        let gabor = if registry.gabor {
            gabor_bank(luminance, w, h)
        } else {
            Vec::new()
        };
        let canny = if registry.canny {
            canny_edges(luminance, w, h)
        } else {
            Vec::new()
        };
        Self {
            registry,
            width: w,
            height: h,
            integrals,
            hogs,
            dense,
            gabor,
            canny,
            channel_planes,
        }
    }

    fn fill_row(&self, pixel: usize, out: &mut [f64]) {
        let r = pixel / self.width;
        let c = pixel % self.width;
        let mut at = 0;
        if self.registry.haar {
            let block = HAAR_KINDS * HAAR_SIZES.len();
            for integral in &self.integrals {
                haar_at(integral, r, c, &mut out[at..at + block]);
                at += block;
            }
        }
        if self.registry.hog {
            for h in &self.hogs {
                out[at..at + HOG_BINS].copy_from_slice(h.at(r, c));
                at += HOG_BINS;
            }
        }
        if self.registry.dense_orientation {
            for h in &self.dense {
                out[at..at + HOG_BINS].copy_from_slice(h.at(r, c));
                at += HOG_BINS;
            }
        }
        if self.registry.gabor {
            for plane in &self.gabor {
                out[at] = plane[pixel];
                at += 1;
            }
        }
        if self.registry.canny {
            out[at] = self.canny[pixel];
            at += 1;
        }
        if self.registry.position {
            let x = if self.width > 1 {
                c as f64 / (self.width - 1) as f64
            } else {
                0.5
            };
            let y = if self.height > 1 {
                r as f64 / (self.height - 1) as f64
            } else {
                0.5
            };
            out[at] = x;
            out[at + 1] = y;
            out[at + 2] = x * x;
            out[at + 3] = y * y;
            out[at + 4] = x * y;
            at += POSITION_COUNT;
        }
        if self.registry.stencil {
            for plane in &self.channel_planes {
                stencil_row(plane, self.width, self.height, r, c, &mut out[at..at + STENCIL_SAMPLES]);
                at += STENCIL_SAMPLES;
            }
        }
        debug_assert_eq!(at, out.len());
    }
}

#[inline]
fn stencil_row(plane: &[f64], width: usize, height: usize, r: usize, c: usize, out: &mut [f64]) {
    for (o, (dr, dc)) in out.iter_mut().zip(stencil_layout().offsets()) {
        let rr = (r as i64 + *dr as i64).clamp(0, height as i64 - 1) as usize;
        let cc = (c as i64 + *dc as i64).clamp(0, width as i64 - 1) as usize;
        *o = plane[rr * width + cc];
    }
}

/// Appearance features for every pixel, at the image's own resolution.
pub fn extract_appearance(image: &ImagePlane, registry: &FeatureRegistry) -> FeatureMatrix {
    extract_with_context(image, &[], registry).expect("no context maps to mismatch")
}

/// Stencil samples of each context map at every pixel, edge-replicated at
/// the borders. All maps must share dimensions.
pub fn extract_context(maps: &[&ProbabilityMap]) -> Result<FeatureMatrix> {
    let Some(first) = maps.first() else {
        return Err(ChmError::dims("at least one context map", "0 maps"));
    };
    let (w, h) = (first.width(), first.height());
    for m in maps {
        if m.width() != w || m.height() != h {
            return Err(ChmError::dims(
                format!("{w}x{h}"),
                format!("{}x{}", m.width(), m.height()),
            ));
        }
    }
    let feature_count = maps.len() * STENCIL_SAMPLES;
    let n = w * h;
    let mut values = vec![0.0; n * feature_count];
    exec::fill_chunks(&mut values, feature_count, |pixel, row| {
        let r = pixel / w;
        let c = pixel % w;
        let mut at = 0;
        for map in maps {
            stencil_row(map.values(), w, h, r, c, &mut row[at..at + STENCIL_SAMPLES]);
            at += STENCIL_SAMPLES;
        }
    });
    FeatureMatrix::new(n, feature_count, values, context_labels(maps.len()))
}

/// Appearance features concatenated with context stencil samples; the layout
/// consumed by the hierarchy's classifiers.
pub fn extract_with_context(
    image: &ImagePlane,
    context_maps: &[&ProbabilityMap],
    registry: &FeatureRegistry,
) -> Result<FeatureMatrix> {
    let (w, h) = (image.width(), image.height());
    for m in context_maps {
        if m.width() != w || m.height() != h {
            return Err(ChmError::dims(
                format!("{w}x{h}"),
                format!("{}x{}", m.width(), m.height()),
            ));
        }
    }
    let luminance = image.luminance();
    let planes = AppearancePlanes::new(image, registry, &luminance);
    let app_width = appearance_width(registry, image.channels());
    let feature_count = app_width + context_maps.len() * STENCIL_SAMPLES;
    let n = w * h;
    let mut values = vec![0.0; n * feature_count];
    exec::fill_chunks(&mut values, feature_count, |pixel, row| {
        planes.fill_row(pixel, &mut row[..app_width]);
        let r = pixel / w;
        let c = pixel % w;
        let mut at = app_width;
        for map in context_maps {
            stencil_row(map.values(), w, h, r, c, &mut row[at..at + STENCIL_SAMPLES]);
            at += STENCIL_SAMPLES;
        }
    });
    let mut labels = appearance_labels(registry, image.channels());
    labels.extend(context_labels(context_maps.len()));
    FeatureMatrix::new(n, feature_count, values, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stencil_has_57_samples_with_center() {
        let layout = stencil_layout();
        assert_eq!(layout.len(), 57);
        assert!(layout.offsets().contains(&(0, 0)));
        let max_radius = layout
            .offsets()
            .iter()
            .map(|(r, c)| r.abs().max(c.abs()))
            .max()
            .unwrap();
        assert_eq!(max_radius, 7);
        // deterministic layout, no duplicates
        let mut seen = layout.offsets().to_vec();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 57);
    }

    #[test]
    fn gray_feature_width_golden() {
        // sum of per-block widths declared by the registry:
        // haar 9 + hog 9 + dense orientation 9 + gabor 8 + canny 1 +
        // position 5 + stencil 57 = 98
        let registry = FeatureRegistry::default();
        let from_blocks = 9 + 9 + 9 + 8 + 1 + 5 + 57;
        assert_eq!(appearance_width(&registry, 1), from_blocks);
        assert_eq!(appearance_width(&registry, 1), 98);
        assert_eq!(appearance_width(&registry, 3), 27 + 27 + 27 + 8 + 1 + 5 + 171);
    }

    #[test]
    fn constant_image_features() {
        let registry = FeatureRegistry::default();
        let img = ImagePlane::gray(20, 20, vec![0.6; 400]).unwrap();
        let fm = extract_appearance(&img, &registry);
        assert_eq!(fm.feature_count(), 98);
        let row = fm.row(10 * 20 + 10);
        let labels = fm.column_labels();
        for (label, &v) in labels.iter().zip(row) {
            if label.starts_with("haar") || label.starts_with("hog") || label.starts_with("dorient")
                || label.starts_with("gabor") || label.starts_with("canny")
            {
                assert!(v.abs() < 1e-9, "{label} = {v}");
            }
            if label.starts_with("stencil") {
                assert_eq!(v, 0.6, "{label}");
            }
        }
    }

    #[test]
    fn position_features_at_center() {
        let registry = FeatureRegistry {
            haar: false,
            hog: false,
            dense_orientation: false,
            gabor: false,
            canny: false,
            position: true,
            stencil: false,
        };
        let img = ImagePlane::gray(5, 5, vec![0.5; 25]).unwrap();
        let fm = extract_appearance(&img, &registry);
        assert_eq!(fm.row(2 * 5 + 2), &[0.5, 0.5, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn context_constant_map() {
        let map = ProbabilityMap::constant(6, 4, 0.7).unwrap();
        let fm = extract_context(&[&map]).unwrap();
        assert_eq!(fm.feature_count(), 57);
        assert!(fm.values().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn context_two_maps_width() {
        let a = ProbabilityMap::constant(4, 4, 0.2).unwrap();
        let b = ProbabilityMap::constant(4, 4, 0.9).unwrap();
        let fm = extract_context(&[&a, &b]).unwrap();
        assert_eq!(fm.feature_count(), 114);
    }

    #[test]
    fn context_rejects_mismatched_dims() {
        let a = ProbabilityMap::constant(4, 4, 0.2).unwrap();
        let b = ProbabilityMap::constant(5, 4, 0.2).unwrap();
        assert!(extract_context(&[&a, &b]).is_err());
    }

    #[test]
    fn delta_map_center_sample() {
        let mut rows = vec![vec![0.0; 9]; 9];
        rows[4][4] = 1.0;
        let map = ProbabilityMap::from_rows(&rows).unwrap();
        let fm = extract_context(&[&map]).unwrap();
        let center_col = stencil_layout()
            .offsets()
            .iter()
            .position(|&o| o == (0, 0))
            .unwrap();
        assert_eq!(fm.row(4 * 9 + 4)[center_col], 1.0);
    }

    #[test]
    fn tiny_images_stay_finite() {
        let registry = FeatureRegistry::default();
        for img in [
            ImagePlane::gray(1, 1, vec![0.0]).unwrap(),
            ImagePlane::gray(1, 1, vec![1.0]).unwrap(),
            ImagePlane::gray(3, 2, vec![0.0; 6]).unwrap(),
            ImagePlane::gray(2, 3, vec![1.0; 6]).unwrap(),
        ] {
            let fm = extract_appearance(&img, &registry);
            assert!(fm.values().iter().all(|v| v.is_finite()));
        }
    }

    proptest! {
        // shifting a map shifts the sampled features identically in the
        // interior (edge replication only disturbs the borders)
        #[test]
        fn stencil_translation_covariance(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (w, h) = (24usize, 24usize);
            let base: Vec<f64> = (0..w * h).map(|_| rng.random::<f64>()).collect();
            let map = ProbabilityMap::new(w, h, base.clone()).unwrap();
            // shift down-right by (1, 2) with edge replication
            let mut shifted = vec![0.0; w * h];
            for r in 0..h {
                for c in 0..w {
                    let sr = r.saturating_sub(1).min(h - 1);
                    let sc = c.saturating_sub(2).min(w - 1);
                    shifted[r * w + c] = base[sr * w + sc];
                }
            }
            let shifted_map = ProbabilityMap::new(w, h, shifted).unwrap();
            let fm = extract_context(&[&map]).unwrap();
            let fm_shifted = extract_context(&[&shifted_map]).unwrap();
            // deep interior pixels: stencil radius 7 plus the shift
            for r in 9..(h - 8) {
                for c in 10..(w - 9) {
                    let a = fm.row(r * w + c);
                    let b = fm_shifted.row((r + 1) * w + (c + 2));
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}
