//! Command line behavior: exit codes, diagnostics, output layout.

use std::path::Path;
use std::process::Output;

fn run(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_chm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path, kind: &str, count: usize, size: usize, seed: u64) {
    let out = run(&[
        "synth",
        kind,
        "--count",
        &count.to_string(),
        "--size",
        &size.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "synth failed: {out:?}");
}

fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        serde_json::json!({
            "levels": 2,
            "stages": 1,
            "ldnn_groups": 2,
            "ldnn_per_group": 2,
            "training": { "epochs": 2, "dropout": false, "sample_cap": 2000, "seed": 4 },
            "features": { "position": false }
        })
        .to_string(),
    )
    .unwrap();
    path
}

#[test]
fn train_writes_expected_blobs_and_predict_evaluates() {
    let work = tempfile::tempdir().unwrap();
    let data = work.path().join("data");
    synth(&data, "textures", 8, 32, 3);
    let config = tiny_config(work.path());
    let model = work.path().join("model");
    let out = run(&[
        "train",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");

    // L=2, S=1: two level blobs plus the top-down blob
    let blobs: Vec<String> = std::fs::read_dir(&model)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().to_string_lossy().into_owned();
            name.ends_with(".w").then_some(name)
        })
        .collect();
    assert_eq!(blobs.len(), 3, "blobs: {blobs:?}");
    for expected in ["stage1_level1.w", "stage1_level2.w", "stage1_topdown.w"] {
        assert!(blobs.iter().any(|b| b == expected), "missing {expected}");
    }
    assert!(model.join("manifest.json").exists());
    assert!(model.join("train_log.jsonl").exists());

    // batch prediction over the manifest: one output pair per test entry
    let preds = work.path().join("preds");
    let out = run(&[
        "predict",
        model.to_str().unwrap(),
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        preds.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data.join("manifest.json")).unwrap())
            .unwrap();
    let test_entries: Vec<&serde_json::Value> = manifest["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["split"] == "test")
        .collect();
    assert!(!test_entries.is_empty());
    let prob_files = std::fs::read_dir(&preds)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with("_prob.png")
        })
        .count();
    assert_eq!(prob_files, test_entries.len());

    // evaluation prints a JSON report whose fields come from the metrics
    let out = run(&[
        "eval",
        preds.to_str().unwrap(),
        data.join("manifest.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("report is JSON");
    assert!(report["f_value"].as_f64().is_some());
    assert!(report["g_mean"].as_f64().is_some());
    assert!(report["pixel_accuracy"].as_f64().is_some());
}

#[test]
fn nms_output_is_bounded_by_plain_output() {
    let work = tempfile::tempdir().unwrap();
    let data = work.path().join("data");
    synth(&data, "textures", 6, 32, 9);
    let config = tiny_config(work.path());
    let model = work.path().join("model");
    assert!(run(&[
        "train",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ])
    .status
    .success());

    let image = data.join("img_005.pgm");
    let plain_dir = work.path().join("plain");
    let nms_dir = work.path().join("nms");
    for (dir, extra) in [(&plain_dir, None), (&nms_dir, Some("--nms"))] {
        let mut args = vec![
            "predict",
            model.to_str().unwrap(),
            image.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ];
        if let Some(flag) = extra {
            args.push(flag);
        }
        assert!(run(&args).status.success());
    }
    let plain = chm::io::load_probability_png(&plain_dir.join("img_005_prob.png")).unwrap();
    let thinned = chm::io::load_probability_png(&nms_dir.join("img_005_prob.png")).unwrap();
    for (t, p) in thinned.values().iter().zip(plain.values()) {
        assert!(t <= p, "NMS output exceeds plain output");
    }
}

#[test]
fn perfect_self_evaluation_scores_one() {
    let work = tempfile::tempdir().unwrap();
    let data = work.path().join("data");
    synth(&data, "textures", 4, 16, 2);
    // fabricate perfect predictions: the groundtruth itself as probability
    let preds = work.path().join("preds");
    std::fs::create_dir_all(&preds).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data.join("manifest.json")).unwrap())
            .unwrap();
    for entry in manifest["entries"].as_array().unwrap() {
        if entry["split"] != "test" {
            continue;
        }
        let labels = chm::io::load_labels(&data.join(entry["labels"].as_str().unwrap()), 2).unwrap();
        let values: Vec<f64> = labels.values().iter().map(|&v| f64::from(v)).collect();
        let map = chm::ProbabilityMap::new(labels.width(), labels.height(), values).unwrap();
        let stem = Path::new(entry["image"].as_str().unwrap())
            .file_stem()
            .unwrap()
            .to_string_lossy()
            .into_owned();
        chm::io::save_probability_png(&preds.join(format!("{stem}_prob.png")), &map).unwrap();
    }
    let out = run(&[
        "eval",
        preds.to_str().unwrap(),
        data.join("manifest.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["f_value"].as_f64().unwrap(), 1.0);
    assert_eq!(report["g_mean"].as_f64().unwrap(), 1.0);
    assert_eq!(report["pixel_accuracy"].as_f64().unwrap(), 1.0);
}

#[test]
fn edge_eval_writes_99_row_pr_curve() {
    let work = tempfile::tempdir().unwrap();
    let dir = work.path().join("edges");
    std::fs::create_dir_all(dir.join("gt")).unwrap();
    // one image whose prediction equals its single-annotator groundtruth
    let (w, h) = (20usize, 20usize);
    let mut labels = vec![0u8; w * h];
    for r in 2..18 {
        labels[r * w + 10] = 1;
    }
    let gt = chm::grid::LabelMap::new(w, h, 2, labels.clone()).unwrap();
    chm::io::save_label_png(&dir.join("gt").join("annotator0.png"), &gt).unwrap();
    let image = chm::ImagePlane::gray(w, h, vec![0.5; w * h]).unwrap();
    chm::io::save_pgm(&dir.join("img.pgm"), &image).unwrap();
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::json!({
            "class_count": 2,
            "task": "edge",
            "entries": [{ "image": "img.pgm", "labels": "gt", "split": "test" }]
        })
        .to_string(),
    )
    .unwrap();
    let preds = work.path().join("preds");
    std::fs::create_dir_all(&preds).unwrap();
    let map = chm::ProbabilityMap::new(w, h, labels.iter().map(|&v| f64::from(v)).collect()).unwrap();
    chm::io::save_probability_png(&preds.join("img_prob.png"), &map).unwrap();

    let out = run(&[
        "eval",
        preds.to_str().unwrap(),
        dir.join("manifest.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ods"].as_f64().unwrap(), 1.0);
    assert_eq!(report["ois"].as_f64().unwrap(), 1.0);
    let curve = std::fs::read_to_string(preds.join("pr_curve.txt")).unwrap();
    assert_eq!(curve.lines().count(), 99);
}

#[test]
fn missing_label_file_names_the_path() {
    let work = tempfile::tempdir().unwrap();
    let data = work.path().join("data");
    synth(&data, "textures", 4, 16, 1);
    std::fs::remove_file(data.join("lab_001.png")).unwrap();
    let model = work.path().join("model");
    let out = run(&[
        "train",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("lab_001.png"), "diagnostic: {stderr}");
}

#[test]
fn unknown_synth_kind_is_a_usage_error() {
    let work = tempfile::tempdir().unwrap();
    let out = run(&[
        "synth",
        "perlin",
        "--out",
        work.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn synth_is_deterministic_and_xor_blobs_written() {
    let work = tempfile::tempdir().unwrap();
    let a = work.path().join("a");
    let b = work.path().join("b");
    synth(&a, "bars", 4, 24, 8);
    synth(&b, "bars", 4, 24, 8);
    for name in ["img_000.pgm", "lab_000.png", "manifest.json"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name} differs"
        );
    }
    let xor = work.path().join("xor");
    let out = run(&[
        "synth",
        "xor-blobs",
        "--count",
        "100",
        "--seed",
        "2",
        "--out",
        xor.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(xor.join("xor_blobs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101); // header plus one row per point
}
