//! Evaluation measures: confusion counts, pixel accuracy, F-value, G-mean,
//! precision-recall curves and the boundary benchmark (ODS, OIS, AP).

use serde::Serialize;

use crate::error::{ChmError, Result};
use crate::grid::{LabelMap, ProbabilityMap};

/// The shared evaluation threshold grid: 99 evenly spaced values in (0, 1).
pub fn threshold_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// Per class-pair pixel counts; `counts[gt * class_count + pred]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    class_count: usize,
    counts: Vec<u64>,
}

impl ConfusionCounts {
    pub fn new(class_count: usize) -> Self {
        Self {
            class_count,
            counts: vec![0; class_count * class_count],
        }
    }

    pub fn record(&mut self, gt: usize, pred: usize) {
        self.counts[gt * self.class_count + pred] += 1;
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn count(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.class_count + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Binary view with class 1 positive.
    pub fn binary(&self) -> (u64, u64, u64, u64) {
        debug_assert_eq!(self.class_count, 2);
        let tp = self.count(1, 1);
        let fp = self.count(0, 1);
        let fn_ = self.count(1, 0);
        let tn = self.count(0, 0);
        (tp, fp, fn_, tn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryScores {
    pub precision: f64,
    pub recall: f64,
    pub tnr: f64,
    pub f_value: f64,
    pub g_mean: f64,
    pub pixel_accuracy: f64,
}

fn rate(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn scores_from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> BinaryScores {
    let precision = rate(tp, tp + fp);
    let recall = rate(tp, tp + fn_);
    let tnr = rate(tn, tn + fp);
    let f_value = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let g_mean = (recall * tnr).sqrt();
    let total = tp + fp + fn_ + tn;
    let pixel_accuracy = rate(tp + tn, total);
    BinaryScores {
        precision,
        recall,
        tnr,
        f_value,
        g_mean,
        pixel_accuracy,
    }
}

/// Thresholds the prediction (`value >= threshold` is positive) and scores
/// it against binary groundtruth.
pub fn binary_scores(pred: &ProbabilityMap, gt: &LabelMap, threshold: f64) -> Result<BinaryScores> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(ChmError::dims(
            format!("{}x{}", gt.width(), gt.height()),
            format!("{}x{}", pred.width(), pred.height()),
        ));
    }
    let mut counts = ConfusionCounts::new(2);
    for (&p, &t) in pred.values().iter().zip(gt.values()) {
        counts.record(usize::from(t > 0), usize::from(p >= threshold));
    }
    let (tp, fp, fn_, tn) = counts.binary();
    Ok(scores_from_counts(tp, fp, fn_, tn))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MulticlassScores {
    pub pixel_accuracy: f64,
    pub class_average_accuracy: f64,
    pub confusion: ConfusionCounts,
}

/// Pixel accuracy plus the mean of per-class recalls over classes present
/// in the groundtruth.
pub fn multiclass_scores(pred: &LabelMap, gt: &LabelMap) -> Result<MulticlassScores> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(ChmError::dims(
            format!("{}x{}", gt.width(), gt.height()),
            format!("{}x{}", pred.width(), pred.height()),
        ));
    }
    if pred.class_count() != gt.class_count() {
        return Err(ChmError::dims(
            format!("{} classes", gt.class_count()),
            format!("{} classes", pred.class_count()),
        ));
    }
    let c = gt.class_count();
    let mut confusion = ConfusionCounts::new(c);
    for (&p, &t) in pred.values().iter().zip(gt.values()) {
        confusion.record(t as usize, p as usize);
    }
    let correct: u64 = (0..c).map(|k| confusion.count(k, k)).sum();
    let pixel_accuracy = correct as f64 / confusion.total() as f64;
    let mut recall_sum = 0.0;
    let mut present = 0usize;
    for k in 0..c {
        let row: u64 = (0..c).map(|j| confusion.count(k, j)).sum();
        if row > 0 {
            recall_sum += confusion.count(k, k) as f64 / row as f64;
            present += 1;
        }
    }
    let class_average_accuracy = if present == 0 { 0.0 } else { recall_sum / present as f64 };
    Ok(MulticlassScores {
        pixel_accuracy,
        class_average_accuracy,
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision-recall triples over the fixed threshold grid. Recall is
/// non-increasing as the threshold rises.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrCurve {
    points: Vec<PrPoint>,
}

impl PrCurve {
    pub fn new(points: Vec<PrPoint>) -> Result<Self> {
        for pair in points.windows(2) {
            if pair[1].threshold < pair[0].threshold {
                return Err(ChmError::Internal("PR curve thresholds out of order".into()));
            }
            if pair[1].recall > pair[0].recall + 1e-12 {
                return Err(ChmError::Internal(
                    "PR curve recall increased with threshold".into(),
                ));
            }
        }
        for p in &points {
            if !(0.0..=1.0).contains(&p.precision) || !(0.0..=1.0).contains(&p.recall) {
                return Err(ChmError::Internal("PR curve value outside [0, 1]".into()));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[PrPoint] {
        &self.points
    }

    /// Tab-delimited rows `threshold precision recall`, one per grid point.
    pub fn to_delimited(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&format!("{:.2}\t{:.6}\t{:.6}\n", p.threshold, p.precision, p.recall));
        }
        out
    }

    /// Area under the interpolated curve: precision envelope over
    /// recall-sorted points, integrated by trapezoid from recall 0.
    pub fn average_precision(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.recall, p.precision)).collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // interpolated precision: max precision at any recall >= r
        let mut envelope = pts.clone();
        let mut best = 0.0f64;
        for p in envelope.iter_mut().rev() {
            best = best.max(p.1);
            p.1 = best;
        }
        let mut area = 0.0;
        let mut prev_r = 0.0;
        let mut prev_p = envelope[0].1;
        for &(r, p) in &envelope {
            area += (r - prev_r) * (p + prev_p) / 2.0;
            prev_r = r;
            prev_p = p;
        }
        area.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryBenchmark {
    pub ods: f64,
    pub ois: f64,
    pub ap: f64,
    pub curve: PrCurve,
}

fn boundary_pixels(map: &LabelMap) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..map.height() {
        for c in 0..map.width() {
            if map.label(r, c) > 0 {
                out.push((r, c));
            }
        }
    }
    out
}

/// Greedy nearest-first one-to-one matching within `tol` pixels. Returns
/// flags for matched predictions and the number of matched gt pixels.
fn greedy_match(pred: &[(usize, usize)], gt: &[(usize, usize)], tol: f64) -> (Vec<bool>, usize) {
    let mut pred_matched = vec![false; pred.len()];
    if pred.is_empty() || gt.is_empty() {
        return (pred_matched, 0);
    }
    let tol_sq = tol * tol;
    let cell = (tol.floor() as i64 + 1).max(1);
    // bucket gt pixels so each prediction only probes nearby cells
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (gi, &(r, c)) in gt.iter().enumerate() {
        buckets
            .entry((r as i64 / cell, c as i64 / cell))
            .or_default()
            .push(gi);
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, &(pr, pc)) in pred.iter().enumerate() {
        let (br, bc) = (pr as i64 / cell, pc as i64 / cell);
        for dr in -1..=1 {
            for dc in -1..=1 {
                let Some(cands) = buckets.get(&(br + dr, bc + dc)) else {
                    continue;
                };
                for &gi in cands {
                    let (gr, gc) = gt[gi];
                    let d2 = (pr as f64 - gr as f64).powi(2) + (pc as f64 - gc as f64).powi(2);
                    if d2 <= tol_sq {
                        pairs.push((d2, pi, gi));
                    }
                }
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut gt_matched = vec![false; gt.len()];
    let mut matched_gt = 0;
    for (_, pi, gi) in pairs {
        if !pred_matched[pi] && !gt_matched[gi] {
            pred_matched[pi] = true;
            gt_matched[gi] = true;
            matched_gt += 1;
        }
    }
    (pred_matched, matched_gt)
}

#[derive(Clone, Copy, Default)]
struct MatchCounts {
    matched_pred: u64,
    pred_total: u64,
    matched_gt: u64,
    gt_total: u64,
}

impl MatchCounts {
    fn precision(&self) -> f64 {
        rate(self.matched_pred, self.pred_total)
    }
    fn recall(&self) -> f64 {
        rate(self.matched_gt, self.gt_total)
    }
    fn f_value(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
    fn add(&mut self, other: &MatchCounts) {
        self.matched_pred += other.matched_pred;
        self.pred_total += other.pred_total;
        self.matched_gt += other.matched_gt;
        self.gt_total += other.gt_total;
    }
}

/// Correspondence counts for one image at one threshold: a prediction is a
/// true positive when matched in any annotator's map; recall pools matched
/// gt pixels over annotators.
fn image_counts(
    pred: &ProbabilityMap,
    annotators: &[Vec<(usize, usize)>],
    threshold: f64,
    tol: f64,
) -> MatchCounts {
    let mut pred_pixels = Vec::new();
    for r in 0..pred.height() {
        for c in 0..pred.width() {
            if pred.value(r, c) >= threshold {
                pred_pixels.push((r, c));
            }
        }
    }
    let mut matched_any = vec![false; pred_pixels.len()];
    let mut matched_gt = 0u64;
    let mut gt_total = 0u64;
    for gt in annotators {
        gt_total += gt.len() as u64;
        let (flags, m) = greedy_match(&pred_pixels, gt, tol);
        matched_gt += m as u64;
        for (a, f) in matched_any.iter_mut().zip(flags) {
            *a |= f;
        }
    }
    MatchCounts {
        matched_pred: matched_any.iter().filter(|&&f| f).count() as u64,
        pred_total: pred_pixels.len() as u64,
        matched_gt,
        gt_total,
    }
}

pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 0.0075;

/// Boundary benchmark over thinned prediction maps and per-image annotator
/// sets. The matching tolerance is `tolerance_fraction` of each image's
/// diagonal. ODS is the best shared-threshold score, OIS averages each
/// image's own best threshold's score, AP integrates the pooled PR curve.
pub fn boundary_benchmark(
    preds: &[ProbabilityMap],
    groundtruth: &[Vec<LabelMap>],
    tolerance_fraction: f64,
) -> Result<BoundaryBenchmark> {
    if preds.len() != groundtruth.len() {
        return Err(ChmError::dims(
            format!("{} groundtruth sets", preds.len()),
            format!("{}", groundtruth.len()),
        ));
    }
    if preds.is_empty() {
        return Err(ChmError::EmptyTrainingSet);
    }
    let any_boundary = groundtruth
        .iter()
        .flatten()
        .any(|m| m.values().iter().any(|&v| v > 0));
    if !any_boundary {
        return Err(ChmError::NoBoundaries);
    }
    let thresholds = threshold_grid();
    let n_images = preds.len();
    // per image, per threshold
    let mut counts = vec![vec![MatchCounts::default(); thresholds.len()]; n_images];
    for (img, (pred, annots)) in preds.iter().zip(groundtruth).enumerate() {
        let diag = ((pred.width() * pred.width() + pred.height() * pred.height()) as f64).sqrt();
        let tol = tolerance_fraction * diag;
        let annot_pixels: Vec<Vec<(usize, usize)>> =
            annots.iter().map(boundary_pixels).collect();
        for (ti, &t) in thresholds.iter().enumerate() {
            counts[img][ti] = image_counts(pred, &annot_pixels, t, tol);
        }
    }

    // ODS: best mean per-image F at a shared threshold; OIS: mean of each
    // image's best F. The per-image optimum dominates any shared choice.
    let mut ods = 0.0f64;
    for ti in 0..thresholds.len() {
        let mean_f: f64 =
            counts.iter().map(|c| c[ti].f_value()).sum::<f64>() / n_images as f64;
        ods = ods.max(mean_f);
    }
    let ois: f64 = counts
        .iter()
        .map(|c| c.iter().map(MatchCounts::f_value).fold(0.0, f64::max))
        .sum::<f64>()
        / n_images as f64;

    let mut points = Vec::with_capacity(thresholds.len());
    for (ti, &t) in thresholds.iter().enumerate() {
        let mut pooled = MatchCounts::default();
        for c in &counts {
            pooled.add(&c[ti]);
        }
        points.push(PrPoint {
            threshold: t,
            precision: pooled.precision(),
            recall: pooled.recall(),
        });
    }
    let curve = PrCurve::new(points)?;
    let ap = curve.average_precision();
    Ok(BoundaryBenchmark { ods, ois, ap, curve })
}
