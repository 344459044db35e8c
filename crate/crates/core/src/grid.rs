//! Dense 2-D grids: input images, label maps, probability maps and pyramids.
//!
//! All grids are immutable after construction so they can be shared freely
//! across threads during training and inference. Derived grids are new values.

use crate::error::{ChmError, Result};

/// A dense image with one or more channels, stored as consecutive planes
/// (R, G, B order for color; an optional depth channel comes last).
/// Values are normalized to [0, 1] per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f64>,
}

impl ImagePlane {
    /// Builds a validated image. Values are clamped to [0, 1]; non-finite
    /// values and length mismatches are rejected.
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(ChmError::dims(
                "non-empty image",
                format!("{width}x{height}x{channels}"),
            ));
        }
        let expected = width * height * channels;
        if values.len() != expected {
            return Err(ChmError::dims(
                format!("{expected} values"),
                format!("{} values", values.len()),
            ));
        }
        let mut values = values;
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(ChmError::NonFinite { index });
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self {
            width,
            height,
            channels,
            values,
        })
    }

    /// Single-channel convenience constructor.
    pub fn gray(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(width, height, 1, values)
    }

    /// Builds a grayscale image from nested rows, for tests and fixtures.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let values = rows.iter().flatten().copied().collect();
        Self::new(width, height, 1, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Value at (row, col) in the given channel.
    pub fn value(&self, row: usize, col: usize, channel: usize) -> f64 {
        debug_assert!(row < self.height && col < self.width && channel < self.channels);
        self.values[channel * self.width * self.height + row * self.width + col]
    }

    /// One channel as a contiguous row-major slice.
    pub fn channel(&self, channel: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.values[channel * n..(channel + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean of the channels, used by filters that operate on a single plane.
    pub fn luminance(&self) -> Vec<f64> {
        let n = self.width * self.height;
        if self.channels == 1 {
            return self.values.clone();
        }
        let mut out = vec![0.0; n];
        for ch in 0..self.channels {
            let plane = self.channel(ch);
            for (o, v) in out.iter_mut().zip(plane) {
                *o += v;
            }
        }
        let inv = 1.0 / self.channels as f64;
        for o in &mut out {
            *o *= inv;
        }
        out
    }
}

/// Integer class labels in {0, ..., class_count - 1}. Binary problems use
/// class_count = 2 with positive class 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    class_count: usize,
    values: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, class_count: usize, values: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ChmError::dims("non-empty label map", format!("{width}x{height}")));
        }
        if !(2..=256).contains(&class_count) {
            return Err(ChmError::InvalidConfig(format!(
                "class count {class_count} outside supported range 2..=256"
            )));
        }
        if values.len() != width * height {
            return Err(ChmError::dims(
                format!("{} labels", width * height),
                format!("{} labels", values.len()),
            ));
        }
        for &v in &values {
            if v as usize >= class_count {
                return Err(ChmError::LabelOutOfRange {
                    label: v as u32,
                    class_count,
                });
            }
        }
        Ok(Self {
            width,
            height,
            class_count,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn label(&self, row: usize, col: usize) -> u8 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    /// Binary indicator plane for one class, as 0/1 reals.
    pub fn indicator(&self, class: usize) -> ProbabilityMap {
        let values = self
            .values
            .iter()
            .map(|&v| if v as usize == class { 1.0 } else { 0.0 })
            .collect();
        ProbabilityMap {
            width: self.width,
            height: self.height,
            values,
        }
    }

    pub fn contains_class(&self, class: usize) -> bool {
        self.values.iter().any(|&v| v as usize == class)
    }
}

/// Per-pixel class probabilities, one plane per class for multiclass
/// problems. Also serves as the general real-valued context grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ChmError::dims("non-empty map", format!("{width}x{height}")));
        }
        if values.len() != width * height {
            return Err(ChmError::dims(
                format!("{} values", width * height),
                format!("{} values", values.len()),
            ));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(ChmError::NonFinite { index });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(ChmError::OutOfRange { value, index });
            }
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        Self::new(width, height, rows.iter().flatten().copied().collect())
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Hard labels by thresholding; `value >= threshold` maps to class 1.
    pub fn threshold(&self, threshold: f64) -> LabelMap {
        let values = self
            .values
            .iter()
            .map(|&v| u8::from(v >= threshold))
            .collect();
        LabelMap {
            width: self.width,
            height: self.height,
            class_count: 2,
            values,
        }
    }
}

/// Dimensions shared by every grid type.
pub trait GridDims {
    fn grid_width(&self) -> usize;
    fn grid_height(&self) -> usize;
}

impl GridDims for ImagePlane {
    fn grid_width(&self) -> usize {
        self.width
    }
    fn grid_height(&self) -> usize {
        self.height
    }
}

impl GridDims for ProbabilityMap {
    fn grid_width(&self) -> usize {
        self.width
    }
    fn grid_height(&self) -> usize {
        self.height
    }
}

impl GridDims for LabelMap {
    fn grid_width(&self) -> usize {
        self.width
    }
    fn grid_height(&self) -> usize {
        self.height
    }
}

/// Dimensions of level `l` (1-based) under repeated ceil-halving.
pub fn level_dims(width: usize, height: usize, level: usize) -> (usize, usize) {
    let mut w = width;
    let mut h = height;
    for _ in 1..level {
        w = w.div_ceil(2);
        h = h.div_ceil(2);
    }
    (w, h)
}

/// An ordered sequence of grids; level 1 holds the original dimensions and
/// level l is ceil-halved l-1 times.
#[derive(Debug, Clone)]
pub struct Pyramid<T: GridDims> {
    levels: Vec<T>,
}

impl<T: GridDims> Pyramid<T> {
    /// Validates the ceil-halving law before accepting the levels.
    pub fn from_levels(levels: Vec<T>) -> Result<Self> {
        let Some(base) = levels.first() else {
            return Err(ChmError::dims("at least one level", "0 levels"));
        };
        let (w0, h0) = (base.grid_width(), base.grid_height());
        for (i, level) in levels.iter().enumerate() {
            let (w, h) = level_dims(w0, h0, i + 1);
            if level.grid_width() != w || level.grid_height() != h {
                return Err(ChmError::dims(
                    format!("level {} dims {w}x{h}", i + 1),
                    format!("{}x{}", level.grid_width(), level.grid_height()),
                ));
            }
        }
        Ok(Self { levels })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Level accessor, 1-based to match the hierarchy numbering.
    pub fn level(&self, l: usize) -> &T {
        &self.levels[l - 1]
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }
}
