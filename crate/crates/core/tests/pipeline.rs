//! End-to-end binary labeling: synthesize, train, persist, reload, infer,
//! post-process and score.

use chm::config::{ChmConfig, FeatureRegistry, TrainingParams};
use chm::edges;
use chm::grid::{ImagePlane, LabelMap};
use chm::hierarchy;
use chm::io;
use chm::metrics;
use chm::synth;
use chm::trainlog::{TrainEvent, TrainLog};

fn toy_config() -> ChmConfig {
    ChmConfig {
        levels: 2,
        stages: 1,
        ldnn_groups: 3,
        ldnn_per_group: 3,
        class_count: 2,
        intra_class_top_levels: 0,
        training: TrainingParams {
            learning_rate: 0.1,
            lr_decay: 0.97,
            epochs: 12,
            minibatch: 64,
            dropout: true,
            sample_cap: 6_000,
            seed: 9,
        },
        features: FeatureRegistry {
            position: false,
            ..FeatureRegistry::default()
        },
    }
}

#[test]
fn binary_pipeline_end_to_end() {
    let items = synth::textures(14, 32, 2, 77).unwrap();
    let (train_items, test_items) = items.split_at(10);
    let train: Vec<(ImagePlane, LabelMap)> = train_items
        .iter()
        .map(|i| (i.image.clone(), i.labels.clone()))
        .collect();

    let mut log = TrainLog::new();
    let model = hierarchy::train(&train, &toy_config(), &mut log).unwrap();

    // structural: bottom-up widths follow the conditioning-set law, and
    // the top-down classifier sees one context map per level
    let registry = &toy_config().features;
    let app_width = chm::features::appearance_width(registry, 1);
    for (level_idx, slot) in model.classes()[0].stages[0].bottom_up.iter().enumerate() {
        if let hierarchy::BottomUpSlot::Trained(clf) = slot {
            let expected = app_width
                + 57 * hierarchy::bottom_up_context_count(level_idx + 1, 2, 0, 1);
            assert_eq!(clf.feature_count(), expected);
        }
    }
    assert_eq!(
        model.classes()[0].stages[0].top_down.feature_count(),
        app_width + 57 * 2
    );

    // the log stream carries one record per event, serializable as JSON
    assert!(log.events().iter().any(|e| matches!(e, TrainEvent::StageSummary { .. })));
    let mut buf = Vec::new();
    log.write_jsonl(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), log.events().len());

    // persistence round trip preserves inference bit-exactly
    let dir = tempfile::tempdir().unwrap();
    io::save_model(&model, dir.path()).unwrap();
    let reloaded = io::load_model(dir.path()).unwrap();
    let probe = &test_items[0].image;
    let before = hierarchy::infer(&model, probe).unwrap();
    let after = hierarchy::infer(&reloaded, probe).unwrap();
    assert_eq!(before, after);

    // scores on held-out images beat chance comfortably
    let mut f_sum = 0.0;
    for item in test_items {
        let map = hierarchy::infer(&model, &item.image).unwrap().pop().unwrap();
        let scores = metrics::binary_scores(&map, &item.labels, 0.5).unwrap();
        f_sum += scores.f_value;
    }
    let mean_f = f_sum / test_items.len() as f64;
    assert!(mean_f > 0.6, "mean test F {mean_f}");

    // the hierarchy is size-independent: inference on a differently sized
    // image follows that image's own pyramid
    let odd = ImagePlane::gray(25, 19, vec![0.4; 25 * 19]).unwrap();
    let odd_map = hierarchy::infer(&model, &odd).unwrap().pop().unwrap();
    assert_eq!((odd_map.width(), odd_map.height()), (25, 19));
    assert!(odd_map.values().iter().all(|&v| (0.0..=1.0).contains(&v)));

    // post-processing invariants on the real model output
    let fused = edges::multiscale_infer(&model, probe).unwrap();
    assert_eq!((fused.width(), fused.height()), (probe.width(), probe.height()));
    let thin = edges::nms_thin(&fused);
    for (t, v) in thin.values().iter().zip(fused.values()) {
        assert!(t <= v);
    }

    // probability maps written and reread through 16-bit PNG stay within
    // quantization error
    let png = dir.path().join("probe_prob.png");
    io::save_probability_png(&png, &fused).unwrap();
    let back = io::load_probability_png(&png).unwrap();
    for (a, b) in fused.values().iter().zip(back.values()) {
        assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
    }
}
