use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linucbpp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

const SMALL: &str = "horizon = 300\narms = 40\ndim = 20\nd_star = 3\ntrials = 2\n";

#[test]
fn run_writes_table_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let out = bin(&["run", "c.toml", "--out", "r.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(table.starts_with("# config_hash="));
    assert!(table.contains("\nalgorithm,step,mean_regret,band_halfwidth\n"));
    assert_eq!(table.lines().filter(|l| l.starts_with("oracle,")).count(), 300);

    let again = bin(&["run", "c.toml", "--out", "r.csv"], dir.path());
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));

    let forced = bin(&["run", "c.toml", "--out", "r.csv", "--force"], dir.path());
    assert!(forced.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("r.csv")).unwrap(), table);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let a = bin(&["run", "c.toml", "--seed", "3", "--trials", "1"], dir.path());
    let b = bin(&["run", "c.toml", "--seed", "3", "--trials", "1", "--parallelism", "2"], dir.path());
    let c = bin(&["run", "c.toml", "--seed", "4", "--trials", "1"], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let seeds = text.lines().nth(1).unwrap();
    assert_eq!(seeds.split(',').count(), 1);
}

#[test]
fn plot_format_has_a_curve_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let out = bin(&["run", "c.toml", "--format", "plot"], dir.path());
    assert!(out.status.success());
    let svg = String::from_utf8(out.stdout).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches(r#"class="curve""#).count(), 4);
}

#[test]
fn sweep_emits_one_row_per_algorithm_and_d_star() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "horizon = 200\narms = 30\ndim = 16\nd_star = [2, 4, 8]\ntrials = 2\nalgorithms = [\"linucb\", \"linucb++\"]\n";
    fs::write(dir.path().join("s.toml"), cfg).unwrap();
    let out = bin(&["sweep", "s.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("algorithm,d_star,alpha,mean_terminal_regret,band_halfwidth\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 6);
}

#[test]
fn unknown_config_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "horizon = 100\nhorizn = 3\n").unwrap();
    let out = bin(&["run", "c.toml"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizn"));
}

#[test]
fn rates_table_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["rates", "--beta", "0.5,0.7", "--grid", "0,0.4,1"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,theta_0.5,theta_0.7");
    assert_eq!(lines[1], "0,0.5,0.7");
    assert!(lines[2].starts_with("0.4,0.9,"));
    assert!(text.contains("Incomparable"));
}

#[test]
fn lowerbound_exports_family() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.toml"),
        "horizon = 2500\nalpha_prime = 0.25\nalpha = 0.5\nbudget = 50.0\n",
    )
    .unwrap();
    let out = bin(&["lowerbound", "p.toml", "--out", "f.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("f.json")).unwrap()).unwrap();
    assert_eq!(json["k"], 25);
    assert_eq!(json["delta"], 0.015625);
    assert_eq!(json["instances"].as_array().unwrap().len(), 26);

    fs::write(
        dir.path().join("bad.toml"),
        "horizon = 2500\nalpha_prime = 0.6\nalpha = 0.5\nbudget = 50.0\n",
    )
    .unwrap();
    let bad = bin(&["lowerbound", "bad.toml"], dir.path());
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("precondition"));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["verify"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
