//! End-to-end runs of the `cautious` binary: exit codes, output files,
//! determinism, and the stdout/stderr contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cautious::{
    load_model, save_features_csv, synth_mixture, LabeledDataset, MixtureClass, MixtureSpec,
    Record,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cautious"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should run")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn two_cluster_spec(n_total: usize, seed: u64) -> MixtureSpec {
    MixtureSpec {
        classes: vec![
            MixtureClass {
                label: "left".into(),
                weight: 0.5,
                mean: vec![0.0, 0.0],
                variance: 0.49,
            },
            MixtureClass {
                label: "right".into(),
                weight: 0.5,
                mean: vec![8.0, 0.0],
                variance: 0.49,
            },
        ],
        dim: 2,
        n_total,
        seed,
    }
}

fn write_two_cluster_csv(path: &Path, n_total: usize, seed: u64) {
    let data = synth_mixture(&two_cluster_spec(n_total, seed)).unwrap();
    save_features_csv(path, &data).unwrap();
}

fn train_two_cluster(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf) {
    let features = dir.join("train.csv");
    let model = dir.join("model");
    write_two_cluster_csv(&features, 400, 7);
    let mut args = vec![
        "train",
        "--features",
        features.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(code(&out), 0, "train failed: {}", stderr(&out));
    (model, features)
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn version_names_the_model_format() {
    let out = run(&["--version"]);
    assert_eq!(code(&out), 0);
    assert!(
        stdout(&out).contains("model format 1"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn train_on_builtin_iris_reports_three_classes() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("iris-model");
    let out = run(&[
        "train",
        "--builtin",
        "iris",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    for label in ["setosa", "versicolor", "virginica"] {
        assert!(text.contains(label), "summary missing {label}: {text}");
    }
    let loaded = load_model(&model).unwrap();
    assert_eq!(loaded.n_classes(), 3);
    assert_eq!(loaded.dim(), 2);
    for class in loaded.classes() {
        assert_eq!(class.n_fit(), 25);
        assert_eq!(class.n_cal(), 25);
        assert!(!class.omitted());
    }
}

#[test]
fn alpha_out_of_range_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "train",
        "--builtin",
        "iris",
        "--out",
        dir.path().join("m").to_str().unwrap(),
        "--alpha",
        "1.5",
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("alpha must be in (0,1)"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = run(&["train", "--builtin", "iris"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_builtin_is_a_usage_error() {
    let out = run(&["train", "--builtin", "wine", "--out", "/tmp/x"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("available: iris"), "{}", stderr(&out));
}

#[test]
fn same_flags_and_seed_give_byte_identical_model_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("train.csv");
    write_two_cluster_csv(&features, 300, 11);
    for model in ["a", "b"] {
        let out = run(&[
            "train",
            "--features",
            features.to_str().unwrap(),
            "--out",
            dir.path().join(model).to_str().unwrap(),
            "--seed",
            "42",
            "--min-cal-size",
            "10",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    assert_eq!(
        dir_contents(&dir.path().join("a")),
        dir_contents(&dir.path().join("b"))
    );
}

#[test]
fn predict_on_separated_training_data_yields_near_singleton_sets() {
    let dir = tempfile::tempdir().unwrap();
    let (model, features) = train_two_cluster(dir.path(), &["--min-cal-size", "10"]);
    let out_csv = dir.path().join("sets.csv");
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--features",
        features.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let text = fs::read_to_string(&out_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,labels,set_size,is_null"));
    let sizes: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sizes.len(), 400);
    let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
    assert!(
        (0.8..=1.2).contains(&mean),
        "mean set size {mean} outside [0.8, 1.2]"
    );
    assert!(stdout(&out).contains("mean set size"), "{}", stdout(&out));
}

#[test]
fn predict_rejects_wrong_dimension_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _) = train_two_cluster(dir.path(), &["--min-cal-size", "10"]);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,label,f0,f1,f2\nq0,,1.0,2.0,3.0\n").unwrap();
    let out_csv = dir.path().join("never.csv");
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--features",
        bad.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(!out_csv.exists(), "failed predict must not leave output");
}

#[test]
fn predict_on_header_only_input_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _) = train_two_cluster(dir.path(), &["--min-cal-size", "10"]);
    let empty = dir.path().join("empty.csv");
    let rows: Vec<Record> = Vec::new();
    save_features_csv(&empty, &LabeledDataset::from_records(2, rows).unwrap()).unwrap();
    let out_csv = dir.path().join("sets.csv");
    let out = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--features",
        empty.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(&out_csv).unwrap(),
        "id,labels,set_size,is_null\n"
    );
}

#[test]
fn missing_features_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "train",
        "--features",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--out",
        dir.path().join("m").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn model_dir_without_manifest_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("f.csv");
    write_two_cluster_csv(&features, 100, 3);
    let fake_model = dir.path().join("not-a-model");
    fs::create_dir_all(&fake_model).unwrap();
    let out = run(&[
        "predict",
        "--model",
        fake_model.to_str().unwrap(),
        "--features",
        features.to_str().unwrap(),
        "--out",
        dir.path().join("o.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn evaluate_on_own_calibration_data_meets_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _) = train_two_cluster(
        dir.path(),
        &["--quantile", "empirical", "--alpha", "0.2", "--min-cal-size", "10"],
    );

    let loaded = load_model(&model).unwrap();
    let mut records = Vec::new();
    for class in loaded.classes() {
        for (i, point) in class.calibration_points().iter().enumerate() {
            records.push(Record {
                id: format!("{}-{i}", class.label()),
                label: Some(class.label().to_string()),
                features: point.clone(),
            });
        }
    }
    let cal_csv = dir.path().join("cal.csv");
    save_features_csv(&cal_csv, &LabeledDataset::from_records(2, records).unwrap()).unwrap();

    let metrics = dir.path().join("metrics.csv");
    let out = run(&[
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--features",
        cal_csv.to_str().unwrap(),
        "--out",
        metrics.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let text = fs::read_to_string(&metrics).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("alpha,coverage,ambiguity,null_rate,n_eval,out_of_inventory")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let coverage: f64 = row[1].parse().unwrap();
    assert!(
        coverage >= 0.8,
        "coverage {coverage} below 1 - alpha on the calibration data itself"
    );
    assert_eq!(row[5], "0");
}

#[test]
fn sweep_emits_one_monotone_row_per_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let (model, features) = train_two_cluster(dir.path(), &["--min-cal-size", "10"]);
    let metrics = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--model",
        model.to_str().unwrap(),
        "--features",
        features.to_str().unwrap(),
        "--alphas",
        "0.05:0.95:0.05",
        "--out",
        metrics.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let text = fs::read_to_string(&metrics).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 19);
    let mut prev_ambiguity = f64::INFINITY;
    let mut prev_null = -1.0;
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        let ambiguity: f64 = fields[2].parse().unwrap();
        let null_rate: f64 = fields[3].parse().unwrap();
        assert!(ambiguity <= prev_ambiguity, "ambiguity must not grow with alpha");
        assert!(null_rate >= prev_null, "null rate must not shrink with alpha");
        prev_ambiguity = ambiguity;
        prev_null = null_rate;
    }
}

#[test]
fn bad_alpha_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (model, features) = train_two_cluster(dir.path(), &["--min-cal-size", "10"]);
    for grid in ["0.9:0.1:0.05", "0.1:0.9", "0.1:1.2:0.1"] {
        let out = run(&[
            "sweep",
            "--model",
            model.to_str().unwrap(),
            "--features",
            features.to_str().unwrap(),
            "--alphas",
            grid,
            "--out",
            dir.path().join("x.csv").to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 2, "grid {grid}: {}", stderr(&out));
    }
}

#[test]
fn topk_reports_accuracy_and_rejects_oversized_k() {
    let dir = tempfile::tempdir().unwrap();
    let (model, features) = train_two_cluster(dir.path(), &["--min-cal-size", "10"]);
    let ok = run(&[
        "topk",
        "--model",
        model.to_str().unwrap(),
        "--features",
        features.to_str().unwrap(),
        "--k",
        "1",
    ]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let text = stdout(&ok);
    let accuracy: f64 = text
        .split(':')
        .next_back()
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(accuracy > 0.95, "two far clusters should rank correctly: {text}");

    let too_big = run(&[
        "topk",
        "--model",
        model.to_str().unwrap(),
        "--features",
        features.to_str().unwrap(),
        "--k",
        "3",
    ]);
    assert_eq!(code(&too_big), 2, "{}", stderr(&too_big));
}

#[test]
fn per_class_alpha_overrides_reach_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = dir.path().join("overrides.csv");
    fs::write(&overrides, "label,alpha\nsetosa,0.02\nvirginica,0.3\n").unwrap();
    let model = dir.path().join("m");
    let out = run(&[
        "train",
        "--builtin",
        "iris",
        "--out",
        model.to_str().unwrap(),
        "--per-class-alpha",
        overrides.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let loaded = load_model(&model).unwrap();
    assert_eq!(loaded.class("setosa").unwrap().alpha(), 0.02);
    assert_eq!(loaded.class("versicolor").unwrap().alpha(), 0.1);
    assert_eq!(loaded.class("virginica").unwrap().alpha(), 0.3);

    fs::write(&overrides, "label,alpha\ntypo,0.02\n").unwrap();
    let out = run(&[
        "train",
        "--builtin",
        "iris",
        "--out",
        model.to_str().unwrap(),
        "--per-class-alpha",
        overrides.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("typo"), "{}", stderr(&out));
}

#[test]
fn lambda_flag_switches_on_interaction_scoring() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _) = train_two_cluster(
        dir.path(),
        &["--lambda", "0.5", "--min-cal-size", "10"],
    );
    let loaded = load_model(&model).unwrap();
    assert!(loaded.config().interaction);
    assert_eq!(loaded.config().interaction_lambda, Some(0.5));
    assert!(loaded.interaction_shift().is_some());
}

#[test]
fn thread_env_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (model, features) = train_two_cluster(dir.path(), &["--min-cal-size", "10"]);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let metrics = dir.path().join(format!("m{threads}.csv"));
        let out = bin()
            .args([
                "evaluate",
                "--model",
                model.to_str().unwrap(),
                "--features",
                features.to_str().unwrap(),
                "--out",
                metrics.to_str().unwrap(),
            ])
            .env("CAUTIOUS_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push(fs::read(&metrics).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let out = bin()
        .args(["--version"])
        .env("CAUTIOUS_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
