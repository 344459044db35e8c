//! Trains hierarchies of different depths on the synthetic textures set and
//! prints train/test F-values, showing how multi-resolution context and a
//! second stage move the scores.
//!
//! Run with: `cargo run --release --example synthetic_demo`

use std::time::Instant;

use chm::config::{ChmConfig, FeatureRegistry, TrainingParams};
use chm::grid::{ImagePlane, LabelMap, ProbabilityMap};
use chm::hierarchy;
use chm::metrics;
use chm::synth;
use chm::trainlog::TrainLog;

fn dataset() -> (Vec<(ImagePlane, LabelMap)>, Vec<(ImagePlane, LabelMap)>) {
    let items = synth::textures(70, 64, 2, 7).unwrap();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, item) in items.into_iter().enumerate() {
        if i < 50 {
            train.push((item.image, item.labels));
        } else {
            test.push((item.image, item.labels));
        }
    }
    (train, test)
}

fn toy_config(levels: usize, stages: usize) -> ChmConfig {
    ChmConfig {
        levels,
        stages,
        ldnn_groups: 4,
        ldnn_per_group: 4,
        class_count: 2,
        intra_class_top_levels: 0,
        training: TrainingParams {
            learning_rate: 0.1,
            lr_decay: 0.97,
            epochs: 40,
            minibatch: 64,
            dropout: false,
            sample_cap: 12_000,
            seed: 23,
        },
        features: FeatureRegistry {
            position: false,
            ..FeatureRegistry::default()
        },
    }
}

fn test_f(model: &chm::ChmModel, test: &[(ImagePlane, LabelMap)], stage: usize) -> f64 {
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fne = 0u64;
    let mut tn = 0u64;
    for (image, labels) in test {
        let per_stage = hierarchy::infer_stages(model, image).unwrap();
        let map: &ProbabilityMap = &per_stage[0][stage - 1];
        for (pixel, &v) in map.values().iter().enumerate() {
            let truth = labels.values()[pixel] == 1;
            match (v >= 0.5, truth) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fne += 1,
                (false, false) => tn += 1,
            }
        }
    }
    metrics::scores_from_counts(tp, fp, fne, tn).f_value
}

fn train_f_from_log(log: &TrainLog, stage: usize) -> f64 {
    log.events()
        .iter()
        .find_map(|e| match e {
            chm::trainlog::TrainEvent::StageSummary { stage: s, train_f, .. } if *s == stage => {
                Some(*train_f)
            }
            _ => None,
        })
        .unwrap()
}

fn main() {
    let (train, test) = dataset();
    println!("textures: {} train / {} test images", train.len(), test.len());

    let t0 = Instant::now();
    let mut log1 = TrainLog::new();
    let flat = hierarchy::train(&train, &toy_config(1, 1), &mut log1).unwrap();
    let f1_train = train_f_from_log(&log1, 1);
    let f1_test = test_f(&flat, &test, 1);
    println!(
        "L=1 S=1: train F {:.4}  test F {:.4}  ({:.1?})",
        f1_train,
        f1_test,
        t0.elapsed()
    );

    let t1 = Instant::now();
    let mut log3 = TrainLog::new();
    let deep = hierarchy::train(&train, &toy_config(3, 2), &mut log3).unwrap();
    let f3s1_train = train_f_from_log(&log3, 1);
    let f3s2_train = train_f_from_log(&log3, 2);
    let f3s1_test = test_f(&deep, &test, 1);
    let f3s2_test = test_f(&deep, &test, 2);
    println!(
        "L=3 S=2: stage1 train F {:.4} test F {:.4} | stage2 train F {:.4} test F {:.4}  ({:.1?})",
        f3s1_train,
        f3s1_test,
        f3s2_train,
        f3s2_test,
        t1.elapsed()
    );
    println!(
        "context gain (test): {:.4}  stacking gain (test): {:.4}",
        f3s1_test - f1_test,
        f3s2_test - f3s1_test
    );
}
