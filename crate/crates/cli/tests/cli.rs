use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SPEC: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/ner_shift.toml");
const NO_SHIFT_SPEC: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/ner_noshift.toml");

fn pseudolabel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseudolabel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = pseudolabel(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small NER corpora from `spec` under `dir/data`.
fn synth(dir: &Path, spec: &str, seed: u64) -> PathBuf {
    let data = dir.join("data");
    let seed = seed.to_string();
    ok(&[
        "synth", "--spec", spec, "--out", s(&data), "--seed", &seed, "--n-source", "150", "--n-source-test", "10",
        "--n-unlabeled", "200", "--n-target", "200",
    ]);
    data
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    fs::write(&path, body).unwrap();
    path
}

fn ner_config(dir: &Path, extra: &str) -> PathBuf {
    write_config(
        dir,
        &format!(
            "task = \"sequence\"\nseed = 3\nscheme = \"data/scheme.txt\"\n{extra}\n\
             [paths]\ntrain = \"data/source.tsv\"\ndev = \"data/dev.tsv\"\ntest = \"data/test.tsv\"\n\
             unlabeled = \"data/unlabeled.tsv\"\nout = \"run\"\n\n\
             [learner]\nepochs = 8\n\n\
             [selftrain]\npolicy = {{ kind = \"threshold\", tau = 0.9 }}\nk_epochs = 3\nmax_iterations = 4\n"
        ),
    )
}

fn records(report: &str) -> Vec<&str> {
    // metric records only; the header differs between commands
    report
        .lines()
        .filter(|l| l.contains('=') && !l.starts_with("config_hash") && !l.starts_with("command"))
        .filter(|l| !["iterations", "best_", "pseudo_", "unlabeled_", "train_size"].iter().any(|p| l.starts_with(p)))
        .collect()
}

fn field<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in report"))
}

#[test]
fn missing_train_path_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "task = \"sequence\"\nscheme = \"ner\"\n[paths]\ntrain = \"nope.tsv\"\ntest = \"nope.tsv\"\nout = \"run\"\n",
    );
    let out = pseudolabel(&["train", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("paths.train"));

    let missing_config = pseudolabel(&["train", "--config", s(&dir.path().join("absent.toml"))]);
    assert_eq!(missing_config.status.code(), Some(2));
}

#[test]
fn class_balanced_with_sequence_task_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), SPEC, 1);
    let cfg = ner_config(dir.path(), "");
    let out = pseudolabel(&["selftrain", "--config", s(&cfg), "--policy", "class-balanced", "--s", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pseudolabel(&["selftrain", "--config", s(&cfg), "--tau", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), SPEC, 1);
    fs::write(dir.path().join("data/source.tsv"), "Word\tB-LOC\textra\n").unwrap();
    let cfg = ner_config(dir.path(), "");
    assert_eq!(pseudolabel(&["train", "--config", s(&cfg)]).status.code(), Some(3));
}

#[test]
fn reruns_are_identical_and_reports_carry_the_config_hash() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), SPEC, 2);
    let cfg = ner_config(dir.path(), "");
    let run = dir.path().join("run");
    let mut reports = Vec::new();
    let mut models = Vec::new();
    for _ in 0..2 {
        ok(&["selftrain", "--config", s(&cfg)]);
        reports.push(fs::read_to_string(run.join("report.txt")).unwrap());
        models.push(fs::read(run.join("model.bin")).unwrap());
        let log = fs::read_to_string(run.join("iterations.jsonl")).unwrap();
        assert!(log.lines().count() >= 1);
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(models[0], models[1]);
    let hash = field(&reports[0], "config_hash");
    assert_eq!(hash.len(), 64);

    ok(&["selftrain", "--config", s(&cfg), "--seed", "4"]);
    let other = fs::read_to_string(run.join("report.txt")).unwrap();
    assert_ne!(field(&other, "config_hash"), hash);
}

#[test]
fn predict_and_evaluate_reproduce_the_training_report() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), SPEC, 3);
    let cfg = ner_config(dir.path(), "");
    ok(&["train", "--config", s(&cfg)]);
    let run = dir.path().join("run");
    let train_report = fs::read_to_string(run.join("report.txt")).unwrap();
    let model = run.join("model.bin");
    let test = data.join("test.tsv");

    let evaluated = String::from_utf8(ok(&["evaluate", "--model", s(&model), "--test", s(&test)]).stdout).unwrap();
    assert_eq!(records(&evaluated), records(&train_report));

    let preds = dir.path().join("pred.tsv");
    ok(&["predict", "--model", s(&model), "--input", s(&test), "--output", s(&preds)]);
    let scheme = data.join("scheme.txt");
    let from_file = String::from_utf8(
        ok(&["evaluate", "--predictions", s(&preds), "--test", s(&test), "--scheme", s(&scheme)]).stdout,
    )
    .unwrap();
    assert_eq!(records(&from_file), records(&train_report));
}

#[test]
fn evaluate_rejects_a_mismatched_scheme() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), SPEC, 4);
    let cfg = ner_config(dir.path(), "");
    ok(&["train", "--config", s(&cfg)]);
    let model = dir.path().join("run/model.bin");
    let test = data.join("test.tsv");
    let out = pseudolabel(&["evaluate", "--model", s(&model), "--test", s(&test), "--scheme", "pos"]);
    assert_eq!(out.status.code(), Some(3));

    // test labels outside the model's label set
    let foreign = dir.path().join("foreign.tsv");
    fs::write(&foreign, "Ali\tB-PERSON\nran\tO\n").unwrap();
    let out = pseudolabel(&["evaluate", "--model", s(&model), "--test", s(&foreign)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn synth_is_deterministic_under_seed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    let (da, db, dc) = (synth(a.path(), SPEC, 9), synth(b.path(), SPEC, 9), synth(c.path(), SPEC, 10));
    for name in ["source.tsv", "unlabeled.tsv", "dev.tsv", "test.tsv", "source_pool.tsv", "spec.toml"] {
        assert_eq!(fs::read(da.join(name)).unwrap(), fs::read(db.join(name)).unwrap(), "{name}");
    }
    assert_ne!(fs::read(da.join("source.tsv")).unwrap(), fs::read(dc.join("source.tsv")).unwrap());
    // unlabeled pool carries no labels
    let pool = fs::read_to_string(da.join("unlabeled.tsv")).unwrap();
    assert!(pool.lines().all(|l| !l.contains('\t')));
}

#[test]
fn no_shift_transfers_with_default_hyperparameters() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), NO_SHIFT_SPEC, 1);
    let cfg = write_config(
        dir.path(),
        "task = \"sequence\"\nscheme = \"data/scheme.txt\"\n\
         [paths]\ntrain = \"data/source.tsv\"\ntest = \"data/test.tsv\"\nout = \"run\"\n",
    );
    ok(&["train", "--config", s(&cfg)]);
    let report = fs::read_to_string(dir.path().join("run/report.txt")).unwrap();
    let acc: f64 = field(&report, "accuracy").parse().unwrap();
    assert!(acc > 0.9, "accuracy {acc}");
}

#[test]
fn shipped_benchmark_self_training_beats_the_baseline() {
    // the shipped spec and experiment settings at full size, seeds 1-5
    let mut wins = 0;
    let (mut target_gain, mut source_gain) = (0.0, 0.0);
    for seed in 1..=5u64 {
        let dir = TempDir::new().unwrap();
        let data = dir.path().join("data");
        ok(&["synth", "--spec", SPEC, "--out", s(&data), "--seed", &seed.to_string()]);
        let shipped = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/ner_selftrain.toml"))
            .unwrap()
            .replace("../data/ner/", "data/")
            .replace("../runs/ner", "run");
        let cfg = write_config(dir.path(), &shipped);
        let seed_arg = seed.to_string();
        let f1 = |cmd: &str, extra: &[&str]| -> f64 {
            let mut args = vec![cmd, "--config", s(&cfg), "--seed", &seed_arg];
            args.extend_from_slice(extra);
            ok(&args);
            let report = fs::read_to_string(dir.path().join("run/report.txt")).unwrap();
            field(&report, "macro_f1").parse().unwrap()
        };
        let baseline = f1("train", &[]);
        let selftrained = f1("selftrain", &[]);
        fs::copy(data.join("source_pool.tsv"), data.join("unlabeled.tsv")).unwrap();
        let ablation = f1("selftrain", &[]);
        wins += usize::from(selftrained > baseline);
        target_gain += (selftrained - baseline) / 5.0;
        source_gain += (ablation - baseline) / 5.0;
    }
    assert!(wins >= 4, "self-training won on {wins}/5 seeds");
    assert!(source_gain < target_gain, "source-pool gain {source_gain} vs target-pool gain {target_gain}");
}
