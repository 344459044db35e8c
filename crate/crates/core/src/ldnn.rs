//! The logistic disjunctive normal network: one adaptive layer of logistic
//! sigmoids, a fixed conjunction layer (product) and a fixed disjunction
//! layer (noisy-or). Initialized from k-means centroids, trained with
//! minibatch SGD on squared error, optionally with dropout.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::TrainingParams;
use crate::error::{ChmError, Result};
use crate::exec;
use crate::features::FeatureMatrix;
use crate::kmeans::kmeans;

const GRAD_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct LdnnModel {
    groups: usize,
    per_group: usize,
    feature_count: usize,
    /// Discriminant weights, laid out group-major then unit-major:
    /// `weights[(i * per_group + j) * feature_count + d]`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    trained_with_dropout: bool,
}

/// Per-minibatch dropout mask; inactive units are excluded from both the
/// forward and backward pass.
#[derive(Debug, Clone)]
pub struct DropoutMask {
    pub group_active: Vec<bool>,
    pub unit_active: Vec<bool>,
}

impl DropoutMask {
    /// Keeps ceil(N/2) groups and ceil(M/2) units per surviving group.
    pub fn draw<R: Rng>(groups: usize, per_group: usize, rng: &mut R) -> Self {
        let group_active = pick_active(groups, groups.div_ceil(2), rng);
        let mut unit_active = vec![false; groups * per_group];
        for (i, &active) in group_active.iter().enumerate() {
            if !active {
                continue;
            }
            let picks = pick_active(per_group, per_group.div_ceil(2), rng);
            for (j, &p) in picks.iter().enumerate() {
                unit_active[i * per_group + j] = p;
            }
        }
        Self {
            group_active,
            unit_active,
        }
    }
}

fn pick_active<R: Rng>(total: usize, active: usize, rng: &mut R) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..total).collect();
    idx.shuffle(rng);
    let mut out = vec![false; total];
    for &i in idx.iter().take(active) {
        out[i] = true;
    }
    out
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Gradient accumulator matching the model layout.
#[derive(Debug, Clone)]
pub struct GradBuf {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl GradBuf {
    fn zeros(model: &LdnnModel) -> Self {
        Self {
            weights: vec![0.0; model.weights.len()],
            biases: vec![0.0; model.biases.len()],
        }
    }

    fn add(&mut self, other: &GradBuf) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }
}

impl LdnnModel {
    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn per_group(&self) -> usize {
        self.per_group
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn trained_with_dropout(&self) -> bool {
        self.trained_with_dropout
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn from_parts(
        groups: usize,
        per_group: usize,
        feature_count: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        trained_with_dropout: bool,
    ) -> Result<Self> {
        if groups == 0 || per_group == 0 || feature_count == 0 {
            return Err(ChmError::InvalidConfig("empty LDNN shape".into()));
        }
        if weights.len() != groups * per_group * feature_count
            || biases.len() != groups * per_group
        {
            return Err(ChmError::dims(
                format!("{} weights, {} biases", groups * per_group * feature_count, groups * per_group),
                format!("{} weights, {} biases", weights.len(), biases.len()),
            ));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(ChmError::NonFinite { index: 0 });
        }
        Ok(Self {
            groups,
            per_group,
            feature_count,
            weights,
            biases,
            trained_with_dropout,
        })
    }

    /// k-means initialization: cluster positives into N centroids and
    /// negatives into M; each discriminant's boundary perpendicularly
    /// bisects one (positive, negative) centroid pair.
    pub fn init_kmeans<R: Rng>(
        positives: &FeatureMatrix,
        negatives: &FeatureMatrix,
        groups: usize,
        per_group: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if positives.feature_count() != negatives.feature_count() {
            return Err(ChmError::FeatureWidth {
                expected: positives.feature_count(),
                actual: negatives.feature_count(),
            });
        }
        let dim = positives.feature_count();
        let pos_centroids = kmeans(positives, groups, rng)?;
        let neg_centroids = kmeans(negatives, per_group, rng)?;
        let mut weights = Vec::with_capacity(groups * per_group * dim);
        let mut biases = Vec::with_capacity(groups * per_group);
        for cp in &pos_centroids {
            for cn in &neg_centroids {
                let mut dot = 0.0;
                for d in 0..dim {
                    let w = cp[d] - cn[d];
                    weights.push(w);
                    dot += w * (cp[d] + cn[d]) / 2.0;
                }
                biases.push(-dot);
            }
        }
        Self::from_parts(groups, per_group, dim, weights, biases, false)
    }

    #[inline]
    fn sigma(&self, i: usize, j: usize, x: &[f64]) -> f64 {
        let base = (i * self.per_group + j) * self.feature_count;
        let mut z = self.biases[i * self.per_group + j];
        for (w, v) in self.weights[base..base + self.feature_count].iter().zip(x) {
            z += w * v;
        }
        sigmoid(z)
    }

    fn forward(&self, x: &[f64], mask: Option<&DropoutMask>, sqrt_compensate: bool) -> f64 {
        let mut not_any = 1.0;
        for i in 0..self.groups {
            if let Some(m) = mask {
                if !m.group_active[i] {
                    continue;
                }
            }
            let mut g = 1.0;
            for j in 0..self.per_group {
                if let Some(m) = mask {
                    if !m.unit_active[i * self.per_group + j] {
                        continue;
                    }
                }
                let mut s = self.sigma(i, j, x);
                if sqrt_compensate {
                    s = s.sqrt();
                }
                g *= s;
            }
            not_any *= 1.0 - g;
        }
        1.0 - not_any
    }

    /// Classifier output in [0, 1]. When the model was trained with
    /// dropout, first-layer activations are square-rooted to compensate
    /// for the halved training-time network.
    pub fn evaluate(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.feature_count {
            return Err(ChmError::FeatureWidth {
                expected: self.feature_count,
                actual: features.len(),
            });
        }
        Ok(self.forward(features, None, self.trained_with_dropout))
    }

    /// Evaluates every row of the matrix; the inference hot path.
    pub fn evaluate_batch(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        if features.feature_count() != self.feature_count {
            return Err(ChmError::FeatureWidth {
                expected: self.feature_count,
                actual: features.feature_count(),
            });
        }
        let sqrt = self.trained_with_dropout;
        Ok(exec::map_indexed(features.pixel_count(), |p| {
            self.forward(features.row(p), None, sqrt)
        }))
    }

    /// Squared-error loss and its analytic gradient at one sample.
    pub fn gradient(&self, features: &[f64], label: f64) -> Result<(f64, GradBuf)> {
        if features.len() != self.feature_count {
            return Err(ChmError::FeatureWidth {
                expected: self.feature_count,
                actual: features.len(),
            });
        }
        let mut grad = GradBuf::zeros(self);
        let loss = self.accumulate_gradient(features, label, None, &mut grad);
        Ok((loss, grad))
    }

    /// Adds this sample's gradient into `grad` and returns its loss.
    fn accumulate_gradient(
        &self,
        x: &[f64],
        y: f64,
        mask: Option<&DropoutMask>,
        grad: &mut GradBuf,
    ) -> f64 {
        let n = self.groups;
        let m = self.per_group;
        let mut sigmas = vec![0.0; n * m];
        let mut g = vec![0.0; n];
        let active_group = |i: usize| mask.is_none_or(|ma| ma.group_active[i]);
        let active_unit = |i: usize, j: usize| mask.is_none_or(|ma| ma.unit_active[i * m + j]);

        for i in 0..n {
            if !active_group(i) {
                continue;
            }
            let mut prod = 1.0;
            for j in 0..m {
                if !active_unit(i, j) {
                    continue;
                }
                let s = self.sigma(i, j, x);
                sigmas[i * m + j] = s;
                prod *= s;
            }
            g[i] = prod;
        }

        // prefix/suffix products of (1 - g) over active groups avoid
        // dividing by possibly zero factors
        let mut prefix = vec![1.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] * if active_group(i) { 1.0 - g[i] } else { 1.0 };
        }
        let mut suffix = vec![1.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] * if active_group(i) { 1.0 - g[i] } else { 1.0 };
        }
        let f = 1.0 - prefix[n];
        let residual = f - y;

        for i in 0..n {
            if !active_group(i) {
                continue;
            }
            let excl = prefix[i] * suffix[i + 1];
            let outer = 2.0 * residual * excl * g[i];
            if outer == 0.0 {
                continue;
            }
            for j in 0..m {
                if !active_unit(i, j) {
                    continue;
                }
                let coef = outer * (1.0 - sigmas[i * m + j]);
                let base = (i * m + j) * self.feature_count;
                for (gw, v) in grad.weights[base..base + self.feature_count].iter_mut().zip(x) {
                    *gw += coef * v;
                }
                grad.biases[i * m + j] += coef;
            }
        }
        residual * residual
    }

    /// Minibatch SGD. Returns the trained model and the per-epoch mean
    /// training loss (monitoring only). Zero epochs returns the
    /// initialization unchanged apart from the dropout flag.
    pub fn train<R: Rng>(
        &self,
        samples: &FeatureMatrix,
        labels: &[f64],
        params: &TrainingParams,
        rng: &mut R,
    ) -> Result<(LdnnModel, Vec<f64>)> {
        if samples.pixel_count() == 0 {
            return Err(ChmError::EmptyTrainingSet);
        }
        if samples.pixel_count() != labels.len() {
            return Err(ChmError::dims(
                format!("{} labels", samples.pixel_count()),
                format!("{} labels", labels.len()),
            ));
        }
        if samples.feature_count() != self.feature_count {
            return Err(ChmError::FeatureWidth {
                expected: self.feature_count,
                actual: samples.feature_count(),
            });
        }
        let mut model = self.clone();
        model.trained_with_dropout = params.dropout;
        let mut epoch_losses = Vec::with_capacity(params.epochs);
        let mut order: Vec<usize> = (0..samples.pixel_count()).collect();
        let mut lr = params.learning_rate;
        for _ in 0..params.epochs {
            order.shuffle(rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(params.minibatch) {
                let mask = params
                    .dropout
                    .then(|| DropoutMask::draw(model.groups, model.per_group, rng));
                let nchunks = batch.len().div_ceil(GRAD_CHUNK);
                // fixed chunking keeps the reduction order deterministic
                // under any thread count
                let partials: Vec<(GradBuf, f64)> = {
                    let model_ref = &model;
                    let mask_ref = mask.as_ref();
                    exec::map_indexed(nchunks, move |ci| {
                        let lo = ci * GRAD_CHUNK;
                        let hi = (lo + GRAD_CHUNK).min(batch.len());
                        let mut acc = GradBuf::zeros(model_ref);
                        let mut loss = 0.0;
                        for &s in &batch[lo..hi] {
                            loss += model_ref.accumulate_gradient(
                                samples.row(s),
                                labels[s],
                                mask_ref,
                                &mut acc,
                            );
                        }
                        (acc, loss)
                    })
                };
                let mut total = GradBuf::zeros(&model);
                for (partial, loss) in &partials {
                    total.add(partial);
                    epoch_loss += loss;
                }
                let scale = lr / batch.len() as f64;
                for (w, gw) in model.weights.iter_mut().zip(&total.weights) {
                    *w -= scale * gw;
                }
                for (b, gb) in model.biases.iter_mut().zip(&total.biases) {
                    *b -= scale * gb;
                }
            }
            epoch_losses.push(epoch_loss / samples.pixel_count() as f64);
            lr *= params.lr_decay;
        }
        Ok((model, epoch_losses))
    }
}
