use std::path::Path;
use std::process::Command;

fn cscgd(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cscgd"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(out: &std::process::Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn run_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(&cscgd(
            &["run", "--preset", "toy-constrained", "--seeds", "0..3", "--horizon", "500", "--out", out],
            dir.path(),
        ));
    }
    for f in ["trajectory_seed0.csv", "trajectory_seed2.csv", "summary.csv", "runs.csv", "plot.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        r#"
seeds = [5]
oracle = "off"
[instance]
preset = "paper-ex1"
[solver]
a = 0.9167
b = 0.5
c = 0.75
regime = "constant"
horizon = 100
"#,
    )
    .unwrap();
    let stdout = ok(&cscgd(&["run", "exp.toml", "--seeds", "1,2", "--horizon", "20", "--out", "o"], dir.path()));
    assert!(stdout.contains("2 seeds, T = 20"), "{stdout}");
    let traj = std::fs::read_to_string(dir.path().join("o/trajectory_seed2.csv")).unwrap();
    assert_eq!(traj.lines().count(), 21);
}

#[test]
fn missing_oracle_fails_with_instructions() {
    let dir = tempfile::tempdir().unwrap();
    let out = cscgd(&["run", "--preset", "paper-ex1", "--horizon", "10", "--seeds", "0"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cscgd oracle --preset paper-ex1"), "{err}");
}

#[test]
fn oracle_then_run_reports_gap() {
    let dir = tempfile::tempdir().unwrap();
    ok(&cscgd(&["oracle", "--preset", "paper-ex1"], dir.path()));
    assert!(dir.path().join("oracle_cache.json").exists());
    ok(&cscgd(&["run", "--preset", "paper-ex1", "--horizon", "1000", "--seeds", "0..2", "--out", "o"], dir.path()));
    let runs = std::fs::read_to_string(dir.path().join("o/runs.csv")).unwrap();
    let gap: f64 = runs.lines().nth(1).unwrap().split(',').nth(6).unwrap().parse().unwrap();
    assert!(gap.is_finite() && gap >= 0.0);
}

#[test]
fn ratefit_on_the_quadratic_toy() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&cscgd(
        &[
            "ratefit",
            "--preset",
            "toy-quadratic",
            "--horizons",
            "100,200,400,800",
        ],
        dir.path(),
    ));
    let slope: f64 = stdout
        .lines()
        .find(|l| l.starts_with("slope"))
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(slope < 0.0, "{stdout}");
}

#[test]
fn scan_and_check_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&cscgd(&["scan-hessian", "--points", "7", "--out", "h.csv"], dir.path()));
    assert!(stdout.contains("PSD on the grid"), "{stdout}");
    let heat = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(heat.lines().count(), 50);
    let stdout = ok(&cscgd(
        &["check", "--preset", "mm1", "--preset", "paper-ex1", "--points", "20", "--trials", "200"],
        dir.path(),
    ));
    assert_eq!(stdout.matches("ok  ").count(), 6, "{stdout}");
}

#[test]
fn bad_invocations_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!cscgd(&["run"], dir.path()).status.success());
    assert!(!cscgd(&["run", "--preset", "mm1", "--seeds", "3..1"], dir.path()).status.success());
    assert!(!cscgd(&["ratefit", "--preset", "mm1", "--horizons", "10,20"], dir.path()).status.success());
}
