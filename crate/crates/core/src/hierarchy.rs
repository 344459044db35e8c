//! The contextual hierarchy: bottom-up classifiers over successively halved
//! resolutions, each conditioned on max-pooled outputs of the levels below,
//! a top-down classifier at original resolution conditioned on upsampled
//! outputs of every level, multi-stage stacking, and one-vs-all multiclass
//! training with cross-class context at the top levels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ChmConfig, FeatureRegistry};
use crate::error::{ChmError, Result};
use crate::features::{self, FeatureMatrix, STENCIL_SAMPLES};
use crate::grid::{ImagePlane, LabelMap, ProbabilityMap, Pyramid};
use crate::ldnn::LdnnModel;
use crate::pyramid::{image_pyramid, maxpool_map, upsample_map_to};
use crate::trainlog::{TrainEvent, TrainLog};

const LOSS_CLAMP: f64 = 1e-12;
/// k-means initialization sees at most this many rows per class; the SGD
/// pass still uses the full selection.
const KMEANS_INIT_CAP: usize = 10_000;

/// One trained hierarchy slot in the bottom-up pass.
#[derive(Debug, Clone, PartialEq)]
pub enum BottomUpSlot {
    Trained(LdnnModel),
    /// Level 1 of stage s > 1: the previous stage's top-down classifier is
    /// used as the first classifier, so its output map is consumed directly.
    PreviousTopDown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageClassifiers {
    pub bottom_up: Vec<BottomUpSlot>,
    pub top_down: LdnnModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassHierarchy {
    pub stages: Vec<StageClassifiers>,
}

/// A fully trained model: per-class hierarchies (one for binary problems),
/// the configuration they were trained under, and the input channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct ChmModel {
    config: ChmConfig,
    channels: usize,
    classes: Vec<ClassHierarchy>,
}

impl ChmModel {
    pub fn from_parts(config: ChmConfig, channels: usize, classes: Vec<ClassHierarchy>) -> Result<Self> {
        if classes.is_empty() {
            return Err(ChmError::InvalidConfig("model has no class hierarchies".into()));
        }
        Ok(Self {
            config,
            channels,
            classes,
        })
    }

    pub fn config(&self) -> &ChmConfig {
        &self.config
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn classes(&self) -> &[ClassHierarchy] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.config.class_count
    }

    /// Total number of freshly trained classifiers (reused slots excluded).
    pub fn trained_classifier_count(&self) -> usize {
        self.classes
            .iter()
            .flat_map(|c| &c.stages)
            .map(|s| {
                1 + s
                    .bottom_up
                    .iter()
                    .filter(|slot| matches!(slot, BottomUpSlot::Trained(_)))
                    .count()
            })
            .sum()
    }

    /// Checks that every classifier's feature width matches what its slot
    /// implies: appearance width plus 57 per visible context map. Run on
    /// untrusted inputs (model loading).
    pub fn validate_widths(&self) -> Result<()> {
        let class_models = self.classes.len();
        let levels = self.config.levels;
        let intra = if class_models > 1 {
            self.config.intra_class_top_levels
        } else {
            0
        };
        let app = features::appearance_width(&self.config.features, self.channels);
        for (class, hierarchy) in self.classes.iter().enumerate() {
            for (stage_idx, stage) in hierarchy.stages.iter().enumerate() {
                if stage.bottom_up.len() != levels {
                    return Err(ChmError::InvalidConfig(format!(
                        "class {class} stage {} has {} bottom-up slots, config says {levels}",
                        stage_idx + 1,
                        stage.bottom_up.len()
                    )));
                }
                for (level_idx, slot) in stage.bottom_up.iter().enumerate() {
                    let level = level_idx + 1;
                    match slot {
                        BottomUpSlot::PreviousTopDown => {
                            if stage_idx == 0 || level != 1 {
                                return Err(ChmError::InvalidConfig(format!(
                                    "reused top-down slot at class {class} stage {} level {level}",
                                    stage_idx + 1
                                )));
                            }
                        }
                        BottomUpSlot::Trained(clf) => {
                            let expected = app
                                + STENCIL_SAMPLES
                                    * bottom_up_context_count(level, levels, intra, class_models);
                            if clf.feature_count() != expected {
                                return Err(ChmError::FeatureWidth {
                                    expected,
                                    actual: clf.feature_count(),
                                });
                            }
                        }
                    }
                }
                let expected = app + STENCIL_SAMPLES * levels;
                if stage.top_down.feature_count() != expected {
                    return Err(ChmError::FeatureWidth {
                        expected,
                        actual: stage.top_down.feature_count(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// True when level `l` takes part in cross-class context exchange.
fn connected(level: usize, levels: usize, intra: usize) -> bool {
    level + intra > levels
}

/// Number of context maps the bottom-up classifier at `level` consumes.
pub fn bottom_up_context_count(
    level: usize,
    levels: usize,
    intra: usize,
    class_models: usize,
) -> usize {
    (1..level)
        .map(|k| {
            if class_models > 1 && connected(level, levels, intra) && connected(k, levels, intra) {
                class_models
            } else {
                1
            }
        })
        .sum()
}

/// Per-pixel inference for one hierarchy level: appearance features of the
/// level image plus stencil samples of the supplied context maps.
pub fn infer_level(
    classifier: &LdnnModel,
    image: &ImagePlane,
    lower_contexts: &[&ProbabilityMap],
    registry: &FeatureRegistry,
) -> Result<ProbabilityMap> {
    let fm = features::extract_with_context(image, lower_contexts, registry)?;
    let probs = classifier.evaluate_batch(&fm)?;
    ProbabilityMap::new(image.width(), image.height(), probs)
}

fn map_log_loss(pred: &ProbabilityMap, target: &ProbabilityMap) -> f64 {
    pred.values()
        .iter()
        .zip(target.values())
        .map(|(&p, &t)| {
            let p = p.clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum()
}

/// Balanced pixel selection for one classifier: per image, min(pos, neg)
/// pixels of each class, then a global cap split evenly between classes.
struct Selection {
    /// (image index, pixel index, label)
    rows: Vec<(usize, usize, f64)>,
}

fn select_samples(
    targets: &[ProbabilityMap],
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Selection {
    use rand::seq::SliceRandom;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (img, target) in targets.iter().enumerate() {
        let mut img_pos: Vec<usize> = Vec::new();
        let mut img_neg: Vec<usize> = Vec::new();
        for (pixel, &t) in target.values().iter().enumerate() {
            if t > 0.5 {
                img_pos.push(pixel);
            } else {
                img_neg.push(pixel);
            }
        }
        let take = img_pos.len().min(img_neg.len());
        if take == 0 {
            continue;
        }
        if img_pos.len() > take {
            img_pos.shuffle(rng);
            img_pos.truncate(take);
        }
        img_neg.shuffle(rng);
        img_neg.truncate(take);
        pos.extend(img_pos.into_iter().map(|p| (img, p)));
        neg.extend(img_neg.into_iter().map(|p| (img, p)));
    }
    let per_class_cap = (cap / 2).max(1);
    if pos.len() > per_class_cap {
        pos.shuffle(rng);
        pos.truncate(per_class_cap);
    }
    if neg.len() > per_class_cap {
        neg.shuffle(rng);
        neg.truncate(per_class_cap);
    }
    let mut rows: Vec<(usize, usize, f64)> = Vec::with_capacity(pos.len() + neg.len());
    rows.extend(pos.into_iter().map(|(i, p)| (i, p, 1.0)));
    rows.extend(neg.into_iter().map(|(i, p)| (i, p, 0.0)));
    rows.sort_unstable_by_key(|&(i, p, l)| (i, p, l as u8));
    Selection { rows }
}

/// Extracts features image by image and gathers the selected rows into one
/// training matrix plus aligned labels.
fn build_training_matrix<'a>(
    selection: &Selection,
    extract: impl Fn(usize) -> Result<FeatureMatrix> + 'a,
) -> Result<(FeatureMatrix, Vec<f64>)> {
    let mut labels = Vec::with_capacity(selection.rows.len());
    let mut values: Vec<f64> = Vec::new();
    let mut feature_count = 0;
    let mut column_labels = Vec::new();
    let mut at = 0;
    while at < selection.rows.len() {
        let img = selection.rows[at].0;
        let end = selection.rows[at..]
            .iter()
            .position(|r| r.0 != img)
            .map_or(selection.rows.len(), |p| at + p);
        let fm = extract(img)?;
        feature_count = fm.feature_count();
        if column_labels.is_empty() {
            column_labels = fm.column_labels().to_vec();
        }
        for &(_, pixel, label) in &selection.rows[at..end] {
            values.extend_from_slice(fm.row(pixel));
            labels.push(label);
        }
        at = end;
    }
    if labels.is_empty() {
        return Err(ChmError::EmptyTrainingSet);
    }
    let matrix = FeatureMatrix::new(labels.len(), feature_count, values, column_labels)?;
    Ok((matrix, labels))
}

/// Deterministic thinning for the k-means initialization inputs.
fn thin_rows(matrix: &FeatureMatrix, labels: &[f64], keep_label: f64, cap: usize) -> FeatureMatrix {
    let rows: Vec<usize> = (0..matrix.pixel_count())
        .filter(|&i| labels[i] == keep_label)
        .collect();
    if rows.len() <= cap {
        return matrix.select_rows(&rows);
    }
    let stride = rows.len() as f64 / cap as f64;
    let thinned: Vec<usize> = (0..cap).map(|k| rows[(k as f64 * stride) as usize]).collect();
    matrix.select_rows(&thinned)
}

/// Trains one LDNN: k-means init on the balanced selection, then SGD.
fn train_classifier(
    matrix: &FeatureMatrix,
    labels: &[f64],
    config: &ChmConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(LdnnModel, Vec<f64>)> {
    let positives = thin_rows(matrix, labels, 1.0, KMEANS_INIT_CAP);
    let negatives = thin_rows(matrix, labels, 0.0, KMEANS_INIT_CAP);
    let init = LdnnModel::init_kmeans(
        &positives,
        &negatives,
        config.ldnn_groups,
        config.ldnn_per_group,
        rng,
    )?;
    init.train(matrix, labels, &config.training, rng)
}

struct TrainContext<'a> {
    images: Vec<&'a ImagePlane>,
    labels: Vec<&'a LabelMap>,
    pyramids: Vec<Pyramid<ImagePlane>>,
    class_models: usize,
}

/// Model hierarchies map one-to-one onto label classes, except the single
/// binary hierarchy, which models the positive class 1.
fn label_class(class_models: usize, model_class: usize) -> usize {
    if class_models == 1 {
        1
    } else {
        model_class
    }
}

impl<'a> TrainContext<'a> {
    fn level_targets(&self, class: usize, level: usize) -> Vec<ProbabilityMap> {
        let target_class = label_class(self.class_models, class);
        self.labels
            .iter()
            .map(|lab| maxpool_map(&lab.indicator(target_class), level - 1))
            .collect()
    }
}

/// Context maps feeding the bottom-up classifier of `class` at `level`,
/// pooled down to level dimensions. Lower levels contribute their own
/// class's map, except inside the connected top levels of a multiclass
/// hierarchy where every class's map is sampled.
fn assemble_bottom_up_ctx(
    class: usize,
    level: usize,
    image: usize,
    contexts: &[Vec<Vec<ProbabilityMap>>],
    levels: usize,
    intra: usize,
    class_models: usize,
) -> Vec<ProbabilityMap> {
    let mut maps = Vec::new();
    for k in 1..level {
        let cross = class_models > 1
            && connected(level, levels, intra)
            && connected(k, levels, intra);
        if cross {
            for class_contexts in contexts.iter().take(class_models) {
                maps.push(maxpool_map(&class_contexts[image][k - 1], level - k));
            }
        } else {
            maps.push(maxpool_map(&contexts[class][image][k - 1], level - k));
        }
    }
    maps
}

/// Context maps feeding the top-down classifier: the class's own hierarchy
/// outputs, upsampled back to original dimensions and cropped.
fn assemble_top_down_ctx(
    class: usize,
    image: usize,
    contexts: &[Vec<Vec<ProbabilityMap>>],
    width: usize,
    height: usize,
) -> Result<Vec<ProbabilityMap>> {
    let own = &contexts[class][image];
    let mut maps = Vec::with_capacity(own.len());
    for (idx, map) in own.iter().enumerate() {
        if idx == 0 {
            maps.push(map.clone());
        } else {
            maps.push(upsample_map_to(map, idx, width, height)?);
        }
    }
    Ok(maps)
}

/// Trains the full model: a single binary hierarchy for two classes, or
/// one-vs-all hierarchies trained level-synchronously for more.
pub fn train(
    dataset: &[(ImagePlane, LabelMap)],
    config: &ChmConfig,
    log: &mut TrainLog,
) -> Result<ChmModel> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(ChmError::EmptyTrainingSet);
    }
    let channels = dataset[0].0.channels();
    for (image, labels) in dataset {
        if image.width() != labels.width() || image.height() != labels.height() {
            return Err(ChmError::dims(
                format!("{}x{}", image.width(), image.height()),
                format!("{}x{}", labels.width(), labels.height()),
            ));
        }
        if image.channels() != channels {
            return Err(ChmError::ChannelMismatch {
                expected: channels,
                actual: image.channels(),
            });
        }
        if labels.class_count() != config.class_count {
            return Err(ChmError::InvalidConfig(format!(
                "label map declares {} classes, config {}",
                labels.class_count(),
                config.class_count
            )));
        }
    }
    for class in 0..config.class_count {
        if !dataset.iter().any(|(_, l)| l.contains_class(class)) {
            return Err(ChmError::MissingClass { class });
        }
    }

    let class_models = if config.class_count == 2 { 1 } else { config.class_count };
    let ctx = TrainContext {
        images: dataset.iter().map(|(i, _)| i).collect(),
        labels: dataset.iter().map(|(_, l)| l).collect(),
        pyramids: dataset
            .iter()
            .map(|(i, _)| image_pyramid(i, config.levels))
            .collect(),
        class_models,
    };
    let n_images = ctx.images.len();
    let levels = config.levels;
    let intra = if class_models > 1 { config.intra_class_top_levels } else { 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(config.training.seed);

    let mut class_stages: Vec<Vec<StageClassifiers>> = vec![Vec::new(); class_models];
    // previous stage's top-down output per class per image
    let mut prev_z: Vec<Vec<ProbabilityMap>> = Vec::new();

    for stage in 1..=config.stages {
        // contexts[class][image][level-1]
        let mut contexts: Vec<Vec<Vec<ProbabilityMap>>> =
            vec![vec![Vec::new(); n_images]; class_models];
        let mut slots: Vec<Vec<BottomUpSlot>> = vec![Vec::new(); class_models];
        let mut level_losses: Vec<Vec<f64>> = vec![Vec::new(); class_models];

        for level in 1..=levels {
            for class in 0..class_models {
                let targets = ctx.level_targets(class, level);
                debug_assert!(targets.iter().all(|t| t.width() >= 1 && t.height() >= 1));
                if stage > 1 && level == 1 {
                    // the previous stage's top-down classifier is the first
                    // classifier of this stage; its output is already known
                    let maps = prev_z[class].clone();
                    let loss: f64 = maps
                        .iter()
                        .zip(&targets)
                        .map(|(m, t)| map_log_loss(m, t))
                        .sum();
                    let f_value = pooled_f(&maps, &targets);
                    level_losses[class].push(loss);
                    log.push(TrainEvent::LevelReady {
                        class,
                        stage,
                        level,
                        trained: false,
                        samples: 0,
                        log_loss: loss,
                        f_value,
                        epoch_losses: Vec::new(),
                    });
                    for (img, map) in maps.into_iter().enumerate() {
                        contexts[class][img].push(map);
                    }
                    slots[class].push(BottomUpSlot::PreviousTopDown);
                    continue;
                }

                let ctx_maps: Vec<Vec<ProbabilityMap>> = (0..n_images)
                    .map(|img| {
                        assemble_bottom_up_ctx(
                            class, level, img, &contexts, levels, intra, class_models,
                        )
                    })
                    .collect();
                let selection = select_samples(&targets, config.training.sample_cap, &mut rng);
                let (matrix, sample_labels) = build_training_matrix(&selection, |img| {
                    let refs: Vec<&ProbabilityMap> = ctx_maps[img].iter().collect();
                    features::extract_with_context(
                        ctx.pyramids[img].level(level),
                        &refs,
                        &config.features,
                    )
                })?;
                let (classifier, epoch_losses) =
                    train_classifier(&matrix, &sample_labels, config, &mut rng)?;

                let maps: Vec<ProbabilityMap> = (0..n_images)
                    .map(|img| {
                        let refs: Vec<&ProbabilityMap> = ctx_maps[img].iter().collect();
                        infer_level(
                            &classifier,
                            ctx.pyramids[img].level(level),
                            &refs,
                            &config.features,
                        )
                    })
                    .collect::<Result<_>>()?;
                let loss: f64 = maps
                    .iter()
                    .zip(&targets)
                    .map(|(m, t)| map_log_loss(m, t))
                    .sum();
                let f_value = pooled_f(&maps, &targets);
                level_losses[class].push(loss);
                log.push(TrainEvent::LevelReady {
                    class,
                    stage,
                    level,
                    trained: true,
                    samples: matrix.pixel_count(),
                    log_loss: loss,
                    f_value,
                    epoch_losses,
                });
                for (img, map) in maps.into_iter().enumerate() {
                    contexts[class][img].push(map);
                }
                slots[class].push(BottomUpSlot::Trained(classifier));
            }
        }

        let mut next_z: Vec<Vec<ProbabilityMap>> = Vec::with_capacity(class_models);
        for class in 0..class_models {
            let target_class = label_class(class_models, class);
            let targets: Vec<ProbabilityMap> =
                ctx.labels.iter().map(|l| l.indicator(target_class)).collect();
            let td_ctx: Vec<Vec<ProbabilityMap>> = (0..n_images)
                .map(|img| {
                    assemble_top_down_ctx(
                        class,
                        img,
                        &contexts,
                        ctx.images[img].width(),
                        ctx.images[img].height(),
                    )
                })
                .collect::<Result<_>>()?;
            let selection = select_samples(&targets, config.training.sample_cap, &mut rng);
            let (matrix, sample_labels) = build_training_matrix(&selection, |img| {
                let refs: Vec<&ProbabilityMap> = td_ctx[img].iter().collect();
                features::extract_with_context(ctx.images[img], &refs, &config.features)
            })?;
            let (top_down, epoch_losses) =
                train_classifier(&matrix, &sample_labels, config, &mut rng)?;
            let zs: Vec<ProbabilityMap> = (0..n_images)
                .map(|img| {
                    let refs: Vec<&ProbabilityMap> = td_ctx[img].iter().collect();
                    infer_level(&top_down, ctx.images[img], &refs, &config.features)
                })
                .collect::<Result<_>>()?;
            let j2: f64 = zs
                .iter()
                .zip(&targets)
                .map(|(m, t)| map_log_loss(m, t))
                .sum();
            let f_value = pooled_f(&zs, &targets);
            log.push(TrainEvent::TopDownReady {
                class,
                stage,
                samples: matrix.pixel_count(),
                log_loss: j2,
                f_value,
                epoch_losses,
            });
            let j1: f64 = level_losses[class].iter().sum();
            log.push(TrainEvent::StageSummary {
                class,
                stage,
                j1,
                j2,
                train_f: f_value,
            });
            next_z.push(zs);
            class_stages[class].push(StageClassifiers {
                bottom_up: std::mem::take(&mut slots[class]),
                top_down,
            });
        }
        prev_z = next_z;
    }

    ChmModel::from_parts(
        config.clone(),
        channels,
        class_stages
            .into_iter()
            .map(|stages| ClassHierarchy { stages })
            .collect(),
    )
}

fn pooled_f(preds: &[ProbabilityMap], targets: &[ProbabilityMap]) -> f64 {
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fne = 0u64;
    for (pred, target) in preds.iter().zip(targets) {
        for (&p, &t) in pred.values().iter().zip(target.values()) {
            let pos = p >= 0.5;
            let truth = t > 0.5;
            match (pos, truth) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fne += 1,
                (false, false) => {}
            }
        }
    }
    let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fne == 0 { 1.0 } else { tp as f64 / (tp + fne) as f64 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Per-stage top-down outputs for every class:
/// result[class][stage - 1] is that stage's output map.
pub fn infer_stages(model: &ChmModel, image: &ImagePlane) -> Result<Vec<Vec<ProbabilityMap>>> {
    if image.channels() != model.channels() {
        return Err(ChmError::ChannelMismatch {
            expected: model.channels(),
            actual: image.channels(),
        });
    }
    let config = model.config();
    let class_models = model.classes().len();
    let levels = config.levels;
    let intra = if class_models > 1 { config.intra_class_top_levels } else { 0 };
    let pyramid = image_pyramid(image, levels);

    let mut per_stage_z: Vec<Vec<ProbabilityMap>> = vec![Vec::new(); class_models];
    let mut prev_z: Vec<Option<ProbabilityMap>> = vec![None; class_models];
    let stage_count = model.classes()[0].stages.len();

    for stage in 0..stage_count {
        // contexts[class][level-1], image index implicit (single image)
        let mut contexts: Vec<Vec<Vec<ProbabilityMap>>> = vec![vec![Vec::new()]; class_models];
        for level in 1..=levels {
            for class in 0..class_models {
                let slot = &model.classes()[class].stages[stage].bottom_up[level - 1];
                let map = match slot {
                    BottomUpSlot::PreviousTopDown => prev_z[class]
                        .clone()
                        .ok_or_else(|| ChmError::Internal("reused slot without previous stage".into()))?,
                    BottomUpSlot::Trained(classifier) => {
                        let maps = assemble_bottom_up_ctx(
                            class, level, 0, &contexts, levels, intra, class_models,
                        );
                        let refs: Vec<&ProbabilityMap> = maps.iter().collect();
                        infer_level(classifier, pyramid.level(level), &refs, &config.features)?
                    }
                };
                contexts[class][0].push(map);
            }
        }
        for class in 0..class_models {
            let maps =
                assemble_top_down_ctx(class, 0, &contexts, image.width(), image.height())?;
            let refs: Vec<&ProbabilityMap> = maps.iter().collect();
            let z = infer_level(
                &model.classes()[class].stages[stage].top_down,
                image,
                &refs,
                &config.features,
            )?;
            per_stage_z[class].push(z.clone());
            prev_z[class] = Some(z);
        }
    }
    Ok(per_stage_z)
}

/// Final per-class probability maps (length 1 for binary models).
pub fn infer(model: &ChmModel, image: &ImagePlane) -> Result<Vec<ProbabilityMap>> {
    let stages = infer_stages(model, image)?;
    Ok(stages
        .into_iter()
        .map(|mut per_stage| per_stage.pop().expect("at least one stage"))
        .collect())
}

/// Hard labels: threshold at 0.5 for binary models, per-pixel argmax over
/// the class maps otherwise (ties go to the lower class id).
pub fn infer_labels(model: &ChmModel, image: &ImagePlane) -> Result<LabelMap> {
    let maps = infer(model, image)?;
    if maps.len() == 1 {
        return Ok(maps[0].threshold(0.5));
    }
    let n = image.width() * image.height();
    let mut labels = vec![0u8; n];
    for pixel in 0..n {
        let mut best = 0usize;
        let mut best_p = maps[0].values()[pixel];
        for (class, map) in maps.iter().enumerate().skip(1) {
            let p = map.values()[pixel];
            if p > best_p {
                best_p = p;
                best = class;
            }
        }
        labels[pixel] = best as u8;
    }
    LabelMap::new(image.width(), image.height(), maps.len().max(2), labels)
}
