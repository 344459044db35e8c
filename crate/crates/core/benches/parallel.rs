//! Rayon versus sequential throughput on the data-parallel inner loops:
//! feature extraction, LDNN batch evaluation and full-image inference.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use chm::config::{ChmConfig, FeatureRegistry, TrainingParams};
use chm::exec;
use chm::grid::{ImagePlane, LabelMap};
use chm::hierarchy;
use chm::ldnn::LdnnModel;
use chm::synth;
use chm::trainlog::TrainLog;

fn bench_image(side: usize) -> ImagePlane {
    let values: Vec<f64> = (0..side * side)
        .map(|i| ((i * 2654435761) % 1000) as f64 / 999.0)
        .collect();
    ImagePlane::gray(side, side, values).unwrap()
}

/// The generic runner itself: rayon dispatch against the always-available
/// sequential twin, on an LDNN-evaluation shaped workload.
fn bench_exec(c: &mut Criterion) {
    let (matrix, labels) = synth::xor_blobs(4000, 7);
    let pos: Vec<usize> = (0..4000).filter(|&i| labels[i] == 1.0).collect();
    let neg: Vec<usize> = (0..4000).filter(|&i| labels[i] == 0.0).collect();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    let model = LdnnModel::init_kmeans(
        &matrix.select_rows(&pos),
        &matrix.select_rows(&neg),
        8,
        8,
        &mut rng,
    )
    .unwrap();
    let mut group = c.benchmark_group("exec_map_indexed");
    group.bench_function(BenchmarkId::new("ldnn_eval", "parallel"), |b| {
        b.iter(|| exec::map_indexed(matrix.pixel_count(), |i| model.evaluate(matrix.row(i)).unwrap()))
    });
    group.bench_function(BenchmarkId::new("ldnn_eval", "sequential"), |b| {
        b.iter(|| {
            exec::map_indexed_seq(matrix.pixel_count(), |i| model.evaluate(matrix.row(i)).unwrap())
        })
    });
    group.finish();
}

fn single_thread_pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
}

fn bench_features(c: &mut Criterion) {
    let image = bench_image(128);
    let registry = FeatureRegistry::default();
    let pool = single_thread_pool();
    let mut group = c.benchmark_group("feature_extraction");
    group.sample_size(20);
    group.bench_function(BenchmarkId::new("appearance_128", "parallel"), |b| {
        b.iter(|| chm::features::extract_appearance(&image, &registry))
    });
    group.bench_function(BenchmarkId::new("appearance_128", "single_thread"), |b| {
        b.iter(|| pool.install(|| chm::features::extract_appearance(&image, &registry)))
    });
    group.finish();
}

fn trained_toy_model() -> chm::ChmModel {
    let data: Vec<(ImagePlane, LabelMap)> = synth::textures(6, 32, 2, 3)
        .unwrap()
        .into_iter()
        .map(|item| (item.image, item.labels))
        .collect();
    let config = ChmConfig {
        levels: 2,
        stages: 1,
        ldnn_groups: 4,
        ldnn_per_group: 4,
        class_count: 2,
        intra_class_top_levels: 0,
        training: TrainingParams {
            epochs: 2,
            dropout: false,
            seed: 5,
            ..TrainingParams::default()
        },
        features: FeatureRegistry::default(),
    };
    let mut log = TrainLog::new();
    hierarchy::train(&data, &config, &mut log).unwrap()
}

fn bench_inference(c: &mut Criterion) {
    let model = trained_toy_model();
    let image = bench_image(64);
    let pool = single_thread_pool();
    let mut group = c.benchmark_group("chm_inference");
    group.sample_size(20);
    group.bench_function(BenchmarkId::new("infer_64", "parallel"), |b| {
        b.iter(|| hierarchy::infer(&model, &image).unwrap())
    });
    group.bench_function(BenchmarkId::new("infer_64", "single_thread"), |b| {
        b.iter(|| pool.install(|| hierarchy::infer(&model, &image).unwrap()))
    });
    group.finish();
}

fn bench_sgd(c: &mut Criterion) {
    let (matrix, labels) = synth::xor_blobs(2000, 7);
    let pos: Vec<usize> = (0..2000).filter(|&i| labels[i] == 1.0).collect();
    let neg: Vec<usize> = (0..2000).filter(|&i| labels[i] == 0.0).collect();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    let init = LdnnModel::init_kmeans(
        &matrix.select_rows(&pos),
        &matrix.select_rows(&neg),
        8,
        8,
        &mut rng,
    )
    .unwrap();
    let params = TrainingParams {
        epochs: 5,
        dropout: false,
        ..TrainingParams::default()
    };
    let pool = single_thread_pool();
    let mut group = c.benchmark_group("sgd_training");
    group.sample_size(20);
    group.bench_function(BenchmarkId::new("xor_5_epochs", "parallel"), |b| {
        b.iter(|| {
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
            init.train(&matrix, &labels, &params, &mut rng).unwrap()
        })
    });
    group.bench_function(BenchmarkId::new("xor_5_epochs", "single_thread"), |b| {
        b.iter(|| {
            pool.install(|| {
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
                init.train(&matrix, &labels, &params, &mut rng).unwrap()
            })
        })
    });
    group.finish();
}

fn bench_pyramid(c: &mut Criterion) {
    let image = bench_image(256);
    let mut group = c.benchmark_group("pyramid_ops");
    group.bench_function("downsample_256_x3", |b| {
        b.iter(|| chm::pyramid::downsample_image(&image, 3))
    });
    let map = chm::grid::ProbabilityMap::new(256, 256, image.channel(0).to_vec()).unwrap();
    group.bench_function("maxpool_256_x3", |b| {
        b.iter(|| chm::pyramid::maxpool_map(&map, 3))
    });
    group.bench_function("bilinear_256_to_512", |b| {
        b.iter(|| chm::pyramid::resize_bilinear_map(&map, 2.0))
    });
    group.finish();
}

criterion_group!(benches, bench_exec, bench_features, bench_inference, bench_sgd, bench_pyramid);
criterion_main!(benches);
