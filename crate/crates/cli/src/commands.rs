use std::path::Path;

use chm::config::ChmConfig;
use chm::edges;
use chm::error::{ChmError, Result};
use chm::grid::{ImagePlane, LabelMap, ProbabilityMap};
use chm::hierarchy;
use chm::io::{self, DatasetManifest, ManifestEntry, Split, Task};
use chm::metrics;
use chm::synth;
use chm::trainlog::TrainLog;

pub fn configure_workers(workers: usize) {
    chm::exec::configure_workers(workers);
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

/// Training labels for one manifest entry. Edge tasks may reference a
/// directory of annotators; the union of their boundaries is the target.
fn load_training_labels(entry: &ManifestEntry, manifest: &DatasetManifest) -> Result<LabelMap> {
    match manifest.task {
        Task::Label => io::load_labels(&entry.labels, manifest.class_count),
        Task::Edge => {
            let annotators = io::load_annotator_set(&entry.labels)?;
            let first = &annotators[0];
            let (w, h) = (first.width(), first.height());
            let mut union = vec![0u8; w * h];
            for map in &annotators {
                if map.width() != w || map.height() != h {
                    return Err(ChmError::DimensionMismatch {
                        expected: format!("{w}x{h}"),
                        actual: format!("{}x{}", map.width(), map.height()),
                    });
                }
                for (u, &v) in union.iter_mut().zip(map.values()) {
                    *u |= u8::from(v > 0);
                }
            }
            LabelMap::new(w, h, 2, union)
        }
    }
}

pub fn train(
    manifest_path: &Path,
    out: &Path,
    config_path: Option<&Path>,
    seed: Option<u64>,
) -> Result<()> {
    let manifest = io::load_manifest(manifest_path)?;
    let mut config = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ChmError::Io { path: path.into(), source: e })?;
            serde_json::from_str::<ChmConfig>(&text).map_err(|source| ChmError::Json {
                path: path.into(),
                source,
            })?
        }
        None => ChmConfig::default(),
    };
    config.class_count = manifest.class_count;
    if let Some(seed) = seed {
        config.training.seed = seed;
    }
    config.validate()?;

    let mut dataset = Vec::new();
    for entry in manifest.entries_for(Split::Train) {
        let image = io::load_image(&entry.image)?;
        let labels = load_training_labels(entry, &manifest)?;
        dataset.push((image, labels));
    }
    if dataset.is_empty() {
        return Err(ChmError::EmptyTrainingSet);
    }

    let mut log = TrainLog::new();
    let model = hierarchy::train(&dataset, &config, &mut log)?;
    io::save_model(&model, out)?;
    let log_path = out.join("train_log.jsonl");
    let file = std::fs::File::create(&log_path)
        .map_err(|e| ChmError::Io { path: log_path.clone(), source: e })?;
    log.write_jsonl(std::io::BufWriter::new(file))?;
    log.write_jsonl(std::io::stdout().lock())?;
    println!(
        "trained {} classifiers into {}",
        model.trained_classifier_count(),
        out.display()
    );
    Ok(())
}

fn predict_one(
    model: &chm::ChmModel,
    image: &ImagePlane,
    out_dir: &Path,
    stem: &str,
    multiscale: bool,
    nms: bool,
    threshold: f64,
) -> Result<()> {
    let maps: Vec<ProbabilityMap> = if multiscale {
        vec![edges::multiscale_infer(model, image)?]
    } else {
        hierarchy::infer(model, image)?
    };
    let maps: Vec<ProbabilityMap> = if nms {
        maps.iter().map(edges::nms_thin).collect()
    } else {
        maps
    };
    if maps.len() == 1 {
        io::save_probability_png(&out_dir.join(format!("{stem}_prob.png")), &maps[0])?;
        io::save_label_png(
            &out_dir.join(format!("{stem}_labels.png")),
            &maps[0].threshold(threshold),
        )?;
    } else {
        for (class, map) in maps.iter().enumerate() {
            io::save_probability_png(&out_dir.join(format!("{stem}_prob{class}.png")), map)?;
        }
        let mut labels = vec![0u8; image.width() * image.height()];
        for (pixel, label) in labels.iter_mut().enumerate() {
            let mut best = 0usize;
            let mut best_p = maps[0].values()[pixel];
            for (class, map) in maps.iter().enumerate().skip(1) {
                if map.values()[pixel] > best_p {
                    best_p = map.values()[pixel];
                    best = class;
                }
            }
            *label = best as u8;
        }
        let label_map = LabelMap::new(image.width(), image.height(), maps.len(), labels)?;
        io::save_label_png(&out_dir.join(format!("{stem}_labels.png")), &label_map)?;
    }
    Ok(())
}

pub fn predict(
    model_dir: &Path,
    input: &Path,
    out: &Path,
    multiscale: bool,
    nms: bool,
    threshold: f64,
) -> Result<()> {
    let model = io::load_model(model_dir)?;
    std::fs::create_dir_all(out).map_err(|e| ChmError::Io { path: out.into(), source: e })?;
    let is_manifest = input.extension().is_some_and(|e| e == "json");
    if is_manifest {
        let manifest = io::load_manifest(input)?;
        let mut n = 0;
        for entry in manifest.entries_for(Split::Test) {
            let image = io::load_image(&entry.image)?;
            predict_one(
                &model,
                &image,
                out,
                &file_stem(&entry.image),
                multiscale,
                nms,
                threshold,
            )?;
            n += 1;
        }
        println!("predicted {n} images into {}", out.display());
    } else {
        let image = io::load_image(input)?;
        predict_one(&model, &image, out, &file_stem(input), multiscale, nms, threshold)?;
        println!("predicted 1 image into {}", out.display());
    }
    Ok(())
}

pub fn eval(
    predictions: &Path,
    manifest_path: &Path,
    out: Option<&Path>,
    threshold: f64,
    tolerance: f64,
) -> Result<()> {
    let manifest = io::load_manifest(manifest_path)?;
    let report = match manifest.task {
        Task::Label if manifest.class_count == 2 => {
            let mut tp = 0u64;
            let mut fp = 0u64;
            let mut fne = 0u64;
            let mut tn = 0u64;
            let mut evaluated = 0usize;
            for entry in manifest.entries_for(Split::Test) {
                evaluated += 1;
                let stem = file_stem(&entry.image);
                let pred_path = predictions.join(format!("{stem}_prob.png"));
                if !pred_path.exists() {
                    return Err(ChmError::MissingFile { path: pred_path });
                }
                let pred = io::load_probability_png(&pred_path)?;
                let gt = io::load_labels(&entry.labels, 2)?;
                for (&p, &t) in pred.values().iter().zip(gt.values()) {
                    match (p >= threshold, t > 0) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, true) => fne += 1,
                        (false, false) => tn += 1,
                    }
                }
            }
            if evaluated == 0 {
                return Err(ChmError::EmptyTrainingSet);
            }
            let scores = metrics::scores_from_counts(tp, fp, fne, tn);
            serde_json::json!({
                "task": "label",
                "classes": 2,
                "threshold": threshold,
                "f_value": scores.f_value,
                "g_mean": scores.g_mean,
                "pixel_accuracy": scores.pixel_accuracy,
                "precision": scores.precision,
                "recall": scores.recall,
            })
        }
        Task::Label => {
            let mut pooled: Option<metrics::ConfusionCounts> = None;
            let mut correct = 0u64;
            let mut total = 0u64;
            for entry in manifest.entries_for(Split::Test) {
                let stem = file_stem(&entry.image);
                let pred_path = predictions.join(format!("{stem}_labels.png"));
                if !pred_path.exists() {
                    return Err(ChmError::MissingFile { path: pred_path });
                }
                let pred = io::load_labels(&pred_path, manifest.class_count)?;
                let gt = io::load_labels(&entry.labels, manifest.class_count)?;
                let scores = metrics::multiclass_scores(&pred, &gt)?;
                let confusion = scores.confusion;
                for k in 0..manifest.class_count {
                    correct += confusion.count(k, k);
                }
                total += confusion.total();
                match &mut pooled {
                    None => pooled = Some(confusion),
                    Some(acc) => {
                        for t in 0..manifest.class_count {
                            for p in 0..manifest.class_count {
                                for _ in 0..confusion.count(t, p) {
                                    acc.record(t, p);
                                }
                            }
                        }
                    }
                }
            }
            let pooled = pooled.ok_or(ChmError::EmptyTrainingSet)?;
            let mut recall_sum = 0.0;
            let mut present = 0;
            for k in 0..manifest.class_count {
                let row: u64 = (0..manifest.class_count).map(|j| pooled.count(k, j)).sum();
                if row > 0 {
                    recall_sum += pooled.count(k, k) as f64 / row as f64;
                    present += 1;
                }
            }
            serde_json::json!({
                "task": "label",
                "classes": manifest.class_count,
                "pixel_accuracy": correct as f64 / total as f64,
                "class_average_accuracy": recall_sum / present as f64,
            })
        }
        Task::Edge => {
            let mut preds = Vec::new();
            let mut gts = Vec::new();
            for entry in manifest.entries_for(Split::Test) {
                let stem = file_stem(&entry.image);
                let pred_path = predictions.join(format!("{stem}_prob.png"));
                if !pred_path.exists() {
                    return Err(ChmError::MissingFile { path: pred_path });
                }
                preds.push(io::load_probability_png(&pred_path)?);
                gts.push(io::load_annotator_set(&entry.labels)?);
            }
            let bench = metrics::boundary_benchmark(&preds, &gts, tolerance)?;
            let curve_path = out
                .map(|p| p.with_extension("pr.txt"))
                .unwrap_or_else(|| predictions.join("pr_curve.txt"));
            std::fs::write(&curve_path, bench.curve.to_delimited())
                .map_err(|e| ChmError::Io { path: curve_path.clone(), source: e })?;
            serde_json::json!({
                "task": "edge",
                "ods": bench.ods,
                "ois": bench.ois,
                "ap": bench.ap,
                "tolerance": tolerance,
                "pr_curve": curve_path,
            })
        }
    };
    let text = serde_json::to_string_pretty(&report).map_err(|source| ChmError::Json {
        path: "<report>".into(),
        source,
    })?;
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, &text).map_err(|e| ChmError::Io { path: path.into(), source: e })?;
    }
    Ok(())
}

fn write_image_dataset(
    items: &[synth::SynthItem],
    class_count: usize,
    out: &Path,
    train_fraction: f64,
) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| ChmError::Io { path: out.into(), source: e })?;
    let train_count = ((items.len() as f64) * train_fraction).ceil() as usize;
    let mut entries = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let image_name = format!("img_{i:03}.pgm");
        let label_name = format!("lab_{i:03}.png");
        io::save_pgm(&out.join(&image_name), &item.image)?;
        io::save_label_png(&out.join(&label_name), &item.labels)?;
        entries.push(ManifestEntry {
            image: image_name.into(),
            labels: label_name.into(),
            split: if i < train_count { Split::Train } else { Split::Test },
        });
    }
    let manifest = DatasetManifest {
        class_count,
        task: Task::Label,
        entries,
    };
    io::save_manifest(&out.join("manifest.json"), &manifest)
}

pub fn synth(
    kind: &str,
    count: usize,
    size: usize,
    seed: u64,
    out: &Path,
    train_fraction: f64,
) -> Result<()> {
    match kind {
        "textures" => {
            let items = synth::textures(count, size, 2, seed)?;
            write_image_dataset(&items, 2, out, train_fraction)?;
        }
        "textures3" => {
            let items = synth::textures(count, size, 3, seed)?;
            write_image_dataset(&items, 3, out, train_fraction)?;
        }
        "bars" => {
            let items = synth::bars(count, size, seed)?;
            write_image_dataset(&items, 2, out, train_fraction)?;
        }
        "xor-blobs" => {
            std::fs::create_dir_all(out)
                .map_err(|e| ChmError::Io { path: out.into(), source: e })?;
            let (matrix, labels) = synth::xor_blobs(count, seed);
            let mut csv = String::from("x\ty\tlabel\n");
            for (i, label) in labels.iter().enumerate() {
                let row = matrix.row(i);
                csv.push_str(&format!("{}\t{}\t{}\n", row[0], row[1], *label as u8));
            }
            let csv_path = out.join("xor_blobs.csv");
            std::fs::write(&csv_path, csv)
                .map_err(|e| ChmError::Io { path: csv_path, source: e })?;
            let descriptor = serde_json::json!({
                "kind": "xor-blobs",
                "count": count,
                "seed": seed,
                "file": "xor_blobs.csv",
            });
            let desc_path = out.join("xor_blobs.json");
            std::fs::write(&desc_path, serde_json::to_string_pretty(&descriptor).unwrap())
                .map_err(|e| ChmError::Io { path: desc_path, source: e })?;
        }
        other => {
            return Err(ChmError::InvalidConfig(format!(
                "unknown dataset kind {other:?}; expected textures, textures3, bars or xor-blobs"
            )));
        }
    }
    println!("wrote {kind} dataset to {}", out.display());
    Ok(())
}
