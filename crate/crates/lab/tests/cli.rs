use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_lab");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

/// Copy of a shipped config with its output redirected into `dir`.
fn staged(name: &str, dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let text = fs::read_to_string(configs().join(format!("{name}.json"))).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["output"]["dir"] = Value::String(dir.join("out").display().to_string());
    edit(&mut v);
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn lab(args: &[&str], cfg: &Path) -> Output {
    Command::new(BIN).args(args).arg(cfg).env_remove("LAB_THREADS").output().unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join("out").join(file)).unwrap()
}

#[test]
fn shipped_configs_validate() {
    for entry in fs::read_dir(configs()).unwrap() {
        let out = lab(&["validate"], &entry.unwrap().path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn missing_lambda_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = staged("deform", dir.path(), |v| {
        v["geometry"].as_object_mut().unwrap().remove("lambda");
    });
    for cmd in ["validate", "run"] {
        let out = lab(&[cmd], &cfg);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invalid_values_and_unknown_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = staged("deform", dir.path(), |v| v["geometry"]["lambda"] = 1.5.into());
    let out = lab(&["run"], &bad);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("geometry.lambda"));
    let extra = staged("deform", dir.path(), |v| v["solver"] = serde_json::json!({"smoothing": 1}));
    assert_eq!(lab(&["validate"], &extra).status.code(), Some(2));
    assert_eq!(lab(&["validate"], &dir.path().join("nope.json")).status.code(), Some(2));
}

#[test]
fn golden_tables_are_reproduced() {
    for name in ["deform", "microcrack", "cell_formula", "rigidity_scaling", "poincare"] {
        let dir = tempfile::tempdir().unwrap();
        let out = lab(&["run"], &staged(name, dir.path(), |_| {}));
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(read(dir.path(), &format!("{name}.csv")), golden(&format!("{name}.csv")), "{name}");
    }
}

#[test]
fn runs_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for name in ["deform", "microcrack"] {
        assert!(lab(&["run"], &staged(name, a.path(), |_| {})).status.success());
        let cfg = staged(name, b.path(), |_| {});
        let out = Command::new(BIN).args(["run"]).arg(&cfg).env("LAB_THREADS", "1").output().unwrap();
        assert!(out.status.success());
        for ext in ["csv", "svg"] {
            let f = format!("{name}.{ext}");
            assert_eq!(read(a.path(), &f), read(b.path(), &f), "{f}");
        }
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = staged("deform", dir.path(), |_| {});
    let out = Command::new(BIN).args(["run"]).arg(&cfg).env("LAB_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn deform_figure_shows_filled_stiff_squares() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["render"], &staged("deform", dir.path(), |_| {}));
    assert!(out.status.success());
    let svg = read(dir.path(), "deform.svg");
    // 4 x 4 cells with two stiff squares each
    assert_eq!(svg.matches(r##"fill="#a0a0a0""##).count(), 32);
    assert!(!dir.path().join("out/deform.csv").exists());
}

#[test]
fn render_without_figure_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(&["render"], &staged("poincare", dir.path(), |_| {})).status.code(), Some(2));
}

#[test]
fn failed_experiment_keeps_partial_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = staged("poincare", dir.path(), |v| v["geometry"]["epsilons"] = serde_json::json!([0.25, 0.15]));
    let out = lab(&["run"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    let partial = read(dir.path(), "poincare.csv.partial");
    assert!(partial.starts_with("epsilon,quotient") && partial.lines().count() == 2);
    assert!(!dir.path().join("out/poincare.csv").exists());
}

#[test]
fn homogenize_reaches_the_attainable_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["run"], &staged("homogenize", dir.path(), |_| {}));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "homogenize.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let dist_k: f64 = rows[2].split(',').nth(7).unwrap().parse().unwrap();
    assert!(dist_k < 0.05);
    assert!(read(dir.path(), "homogenize.svg").contains("<path"));
}

#[test]
fn config_round_trip() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = lab::ExperimentConfig::load(&path).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let again = lab::ExperimentConfig::from_str(&text, &path).unwrap();
        assert_eq!(cfg, again);
    }
}
