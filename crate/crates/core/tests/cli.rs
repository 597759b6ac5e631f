use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spa_core::dataset::{load_dataset, load_feature_vector};
use spa_core::evaluate::{Method, MethodSelector};
use spa_core::preprocess::PreprocessConfig;
use spa_core::selector::{prepare, tune_sparsity, SelectorConfig, TuneConfig};

fn spa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spa"))
        .args(args)
        .env_remove("SPA_THREADS")
        .output()
        .expect("spa binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A small simulated dataset plus its ground truth.
fn simulate(dir: &Path, name: &str, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let out = dir.join(format!("{name}.csv"));
    let o = spa(&[
        "simulate",
        "--d",
        "2048",
        "--peaks",
        "50",
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let truth = dir.join(format!("{name}.truth.csv"));
    assert!(truth.exists());
    (out, truth)
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(spa(&["simulate", "--n", "10"]).status.code(), Some(2));
    assert_eq!(
        spa(&["crossval", "x.csv", "--folds", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        spa(&["select", "x.csv", "--lambda", "1", "--target-features", "5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        spa(&["select", "x.csv", "--lambda", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(spa(&["bogus"]).status.code(), Some(2));
    assert_eq!(spa(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_exits_one() {
    let o = spa(&["select", "/nonexistent/data.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn non_finite_dataset_reports_stage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nan.csv");
    fs::write(&path, "+1,1,2,3\n-1,1,NaN,3\n+1,2,2,2\n-1,0,1,0\n").unwrap();
    let o = spa(&["select", p(&path), "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("stage"), "{err}");
    assert!(err.contains("missing"), "{err}");
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, ta) = simulate(dir.path(), "a", 20, 5);
    let (b, tb) = simulate(dir.path(), "b", 20, 5);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&ta).unwrap(), fs::read(&tb).unwrap());
    let (c, _) = simulate(dir.path(), "c", 20, 6);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn select_target_matches_library_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    let (data, truth) = simulate(dir.path(), "ds", 200, 3);
    let feats = dir.path().join("feats.csv");
    let log = dir.path().join("log.txt");
    let o = spa(&[
        "select",
        p(&data),
        "--target-features",
        "5",
        "--sigma",
        "20",
        "--out",
        p(&feats),
        "--log",
        p(&log),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&feats).unwrap();
    assert_eq!(text.lines().count(), 2 + 5);
    assert!(fs::read_to_string(&log).unwrap().contains("features=5"));

    let ds = load_dataset(&data).unwrap();
    let pre = PreprocessConfig {
        smoothing_sigma: Some(20.0),
        ..PreprocessConfig::default()
    };
    let found = tune_sparsity(
        &prepare(&ds, &pre).unwrap(),
        &SelectorConfig::default(),
        &TuneConfig::new(5),
    )
    .unwrap();
    let probe = found.found().expect("five features");
    let saved = load_feature_vector(&feats).unwrap();
    assert_eq!(saved.vector, probe.value.omega_sparse);

    let score = dir.path().join("score.csv");
    let o = spa(&["score", p(&feats), p(&truth), "--out", p(&score)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let score = fs::read_to_string(&score).unwrap();
    let mut lines = score.lines();
    assert_eq!(
        lines.next(),
        Some("tp,fp,tn,fn,sensitivity,specificity,balanced_accuracy")
    );
    let fields: Vec<usize> = lines
        .next()
        .unwrap()
        .split(',')
        .take(4)
        .map(|f| f.parse().unwrap())
        .collect();
    assert_eq!(fields[0] + fields[3], 5);
    assert_eq!(fields[1] + fields[2], 45);
}

#[test]
fn baseline_select_and_crossval() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = simulate(dir.path(), "ds", 80, 9);
    let feats = dir.path().join("lasso.csv");
    let o = spa(&[
        "select",
        p(&data),
        "--method",
        "lasso",
        "--lambda",
        "0.05",
        "--out",
        p(&feats),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ds = load_dataset(&data).unwrap();
    let mut sel = MethodSelector::new(Method::Lasso);
    sel.lambda = 0.05;
    let expected = sel.run(&ds).unwrap().weights;
    assert_eq!(load_feature_vector(&feats).unwrap().vector, expected);

    let cv = dir.path().join("cv.csv");
    let o = spa(&[
        "crossval",
        p(&data),
        "--lambda",
        "4",
        "--folds",
        "4",
        "--reps",
        "2",
        "--out",
        p(&cv),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&cv).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("method,repetition,fold,accuracy,n_features")
    );
    assert_eq!(text.lines().count(), 1 + 8 + 1);
    assert!(text.lines().last().unwrap().starts_with("spa,mean,mean,"));

    let again = dir.path().join("cv2.csv");
    spa(&[
        "crossval",
        p(&data),
        "--lambda",
        "4",
        "--folds",
        "4",
        "--reps",
        "2",
        "--out",
        p(&again),
    ]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());
}

#[test]
fn sweep_emits_one_row_per_n_and_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = spa(&[
        "sweep",
        "--d",
        "1024",
        "--peaks",
        "25",
        "--n",
        "40..80",
        "--n-step",
        "20",
        "--reps",
        "2",
        "--sigma",
        "20",
        "--out",
        p(&out),
        "--progress",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("sweep"));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3 * 2);
    let keys: Vec<(String, String)> = rows
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    assert_eq!(keys[0], ("40".into(), "0".into()));
    assert_eq!(keys[5], ("80".into(), "1".into()));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# small problem\nd=512\npeaks=16\nn=12\nseed=4\n").unwrap();
    let a = dir.path().join("a.csv");
    let o = spa(&["simulate", "--config", p(&cfg), "--out", p(&a)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ds = load_dataset(&a).unwrap();
    assert_eq!((ds.n(), ds.d()), (12, 512));

    let b = dir.path().join("b.csv");
    let o = spa(&["simulate", "--config", p(&cfg), "--n", "7", "--out", p(&b)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(load_dataset(&b).unwrap().n(), 7);

    fs::write(&cfg, "this is not a config\n").unwrap();
    assert_eq!(
        spa(&["simulate", "--config", p(&cfg), "--out", p(&b)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bad_thread_count_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_spa"))
        .args(["score", "a", "b"])
        .env("SPA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
