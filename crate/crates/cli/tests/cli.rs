use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nlriver");

fn scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/river_example.toml")
}

fn nlriver(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NLRIVER_OUT")
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn with_scenario<'a>(path: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["--scenario", path];
    v.extend_from_slice(rest);
    v
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn eigen_at_half_speed_is_one_persistent_row() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario();
    let o = nlriver(dir.path(), &with_scenario(s.to_str().unwrap(), &["eigen", "--q", "0.5", "--n-cells", "100"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("eigen.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# scenario_sha256=")));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    let indicator: f64 = rows[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!(indicator < 0.0);
}

#[test]
fn existing_artifacts_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario();
    let args = with_scenario(s.to_str().unwrap(), &["qstar"]);
    assert_eq!(code(&nlriver(dir.path(), &args)), 0);
    let again = nlriver(dir.path(), &args);
    assert_eq!(code(&again), 4);
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let mut forced = args.clone();
    forced.push("--force");
    assert_eq!(code(&nlriver(dir.path(), &forced)), 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlriver(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&nlriver(dir.path(), &["eigen", "--n-cells", "many"])), 2);
    assert_eq!(code(&nlriver(dir.path(), &["--help"])), 0);
}

#[test]
fn invalid_scenario_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario()).unwrap().replace("d = 0.26", "d = -1.0");
    let path = dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let o = nlriver(&dir.path().join("out"), &with_scenario(path.to_str().unwrap(), &["eigen"]));
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("out").exists());

    let o = nlriver(dir.path(), &with_scenario(dir.path().join("missing.toml").to_str().unwrap(), &["eigen"]));
    assert_eq!(code(&o), 4);
}

#[test]
fn solver_failure_exits_three_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario()).unwrap().replace("growth = [2.5, 0.0, -0.0625]", "growth = [0.001, 0.0, 0.0]");
    let path = dir.path().join("weak.toml");
    fs::write(&path, text).unwrap();
    let out = dir.path().join("out");
    let o = nlriver(&out, &with_scenario(path.to_str().unwrap(), &["threshold", "--n-cells", "40", "--q-lo", "0.1", "--q-hi", "0.5"]));
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let diag = fs::read_to_string(out.join("diagnostic.txt")).unwrap();
    assert!(diag.contains("no threshold"), "{diag}");
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario();
    let o = Command::new(BIN)
        .args(["--scenario", s.to_str().unwrap(), "eigen", "--n-cells", "40"])
        .env("NLRIVER_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("eigen.csv").exists());
}

#[test]
fn evolve_stationary_and_sweep_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario();
    let s = s.to_str().unwrap();
    let common = ["--n-cells", "40"];
    let run = |extra: &[&str]| {
        let mut args = with_scenario(s, extra);
        args.extend_from_slice(&common);
        let o = nlriver(dir.path(), &args);
        assert_eq!(code(&o), 0, "{extra:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    run(&["evolve", "--t-end", "2", "--record-every", "0.5", "--format", "long"]);
    run(&["stationary", "--method", "lower"]);
    run(&["sweep", "--q-min", "0.5", "--q-max", "2.0", "--q-steps", "4"]);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.contains("\nt,x,u\n"));
    assert_eq!(data_rows(&traj).len(), 5 * 41);
    let profile = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(profile.contains("# method=monotone_lower"));
    assert_eq!(data_rows(&fs::read_to_string(dir.path().join("sweep.csv")).unwrap()).len(), 4);
}

fn repro(out: &Path) -> PathBuf {
    let s = scenario();
    let o = nlriver(out, &with_scenario(s.to_str().unwrap(), &["repro-paper", "--n-cells", "40"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut dirs: Vec<PathBuf> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1);
    dirs.pop().unwrap()
}

#[test]
fn repro_paper_is_complete_and_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (da, db) = (repro(a.path()), repro(b.path()));
    assert!(da.file_name().unwrap().to_str().unwrap().starts_with("repro-paper-"));
    let mut names: Vec<String> = fs::read_dir(&da).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    for fig in 1..=8 {
        assert!(names.iter().any(|n| n.starts_with(&format!("fig{fig}_")) && n.ends_with(".csv")), "fig{fig} missing");
    }
    assert!(names.contains(&"manifest.json".to_string()));
    for n in names.iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(fs::read(da.join(n)).unwrap(), fs::read(db.join(n)).unwrap(), "{n} differs");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(da.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), names.len() - 1);
    assert_eq!(manifest["scenario"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["grid"]["n_cells"], 40);

    // a second run into the same place is refused
    let s = scenario();
    let o = nlriver(a.path(), &with_scenario(s.to_str().unwrap(), &["repro-paper", "--n-cells", "40"]));
    assert_eq!(code(&o), 4);
}
