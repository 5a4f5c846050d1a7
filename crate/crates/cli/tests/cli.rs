use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[ground_truth]
s = 5
s1 = 5
s2 = 5
w1_norm = 1.0
q1_norm = 1.0
q2_norm = 1.0
sigma1 = 0.5
sigma2 = 0.5

[learner]
p = 5
p1 = 5
p2 = 5
n1 = 100
n2 = 50

[experiment]
name = "small"
method = "option_b"
replicates = 20
seed = 9

[sweep]
variable = "p2"
values = [5, 20, 45, 80]
"#;

fn ptl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptl")).args(args).env_remove("PTL_OUT_DIR").output().unwrap()
}

fn sweep_into(dir: &Path, config: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["sweep", "--config", config.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    ptl(&args)
}

fn setup() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, CONFIG).unwrap();
    (dir, cfg)
}

#[test]
fn same_seed_gives_identical_csv() {
    let (dir, cfg) = setup();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(sweep_into(&a, &cfg, &["--threads", "1"]).status.success());
    assert!(sweep_into(&b, &cfg, &["--threads", "4"]).status.success());
    let ca = fs::read(a.join("small.csv")).unwrap();
    assert_eq!(ca, fs::read(b.join("small.csv")).unwrap());

    let c = dir.path().join("c");
    assert!(sweep_into(&c, &cfg, &["--seed", "10"]).status.success());
    assert_ne!(ca, fs::read(c.join("small.csv")).unwrap());
}

#[test]
fn csv_layout() {
    let (dir, cfg) = setup();
    assert!(sweep_into(dir.path(), &cfg, &[]).status.success());
    let text = fs::read_to_string(dir.path().join("small.csv")).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "sweep_var,value,regime,empirical_mean,empirical_se,theory_kind,theory_value,theory_lower,theory_upper,term1,term2"
    );
    assert_eq!(lines.len(), 5);
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 11, "{l}");
        assert!(l.starts_with("p2,"));
    }
    let threshold: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(threshold[2], "threshold");
    assert_eq!(threshold[5], "");
}

#[test]
fn manifest_reproduces_csv() {
    let (dir, cfg) = setup();
    let first = dir.path().join("first");
    assert!(sweep_into(&first, &cfg, &["--replicates", "30"]).status.success());
    let manifest = first.join("small.manifest.toml");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("[manifest]"));
    assert!(text.contains("master_seed = 9"));

    let second = dir.path().join("second");
    assert!(sweep_into(&second, &manifest, &[]).status.success());
    assert_eq!(fs::read(first.join("small.csv")).unwrap(), fs::read(second.join("small.csv")).unwrap());
}

#[test]
fn out_dir_from_environment() {
    let (dir, cfg) = setup();
    let out = dir.path().join("env");
    let status = Command::new(env!("CARGO_BIN_EXE_ptl"))
        .args(["sweep", "--config", cfg.to_str().unwrap()])
        .env("PTL_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(out.join("small.csv").exists());
}

#[test]
fn curves_write_one_file_each() {
    let dir = tempfile::tempdir().unwrap();
    let out = ptl(&[
        "figure",
        "tightness",
        "--replicates",
        "3",
        "--set",
        "sweep.values=[150, 300]",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for id in ["equal_q1", "opposite_q1", "equal_q5", "opposite_q5"] {
        let text = fs::read_to_string(dir.path().join(format!("tightness-{id}.csv"))).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 14);
        assert!(header.ends_with("b1_sq,b2_sq,b3_sq"));
        assert!(dir.path().join(format!("tightness-{id}.manifest.toml")).exists());
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let (dir, cfg) = setup();
    let d = dir.path().to_str().unwrap();
    let c = cfg.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["sweep", "--config", c, "--out-dir", d, "--set", "sweep.values=[]"],
        vec!["sweep", "--config", c, "--out-dir", d, "--format", "json"],
        vec!["sweep", "--config", c, "--out-dir", d, "--set", "learner.bogus=1"],
        vec!["sweep", "--config", c, "--out-dir", d, "--set", "novalue"],
        vec!["sweep", "--config", "/nonexistent.toml"],
        vec!["figure", "fig9"],
        vec!["preset", "fig9"],
        vec!["frobnicate"],
    ];
    for args in cases {
        assert_eq!(ptl(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn preset_listing_and_printing() {
    let out = ptl(&["preset"]);
    assert!(out.status.success());
    let list = String::from_utf8(out.stdout).unwrap();
    for name in ["fig1a", "fig1b", "fig1c", "tightness"] {
        assert!(list.contains(name));
    }
    let out = ptl(&["preset", "fig1c"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("[sweep]"));
}

#[test]
fn advise_reports_budget_and_trend() {
    let (_dir, cfg) = setup();
    let out = ptl(&["advise", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stdout.is_empty());
}

#[test]
fn verify_closed_forms() {
    let out = ptl(&["verify", "--skip-insights", "--replicates", "500"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("all checks passed"));
}
