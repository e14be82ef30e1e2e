use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use riotwave_cli::config::ExperimentConfig;
use riotwave_cli::RunManifest;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_riotwave"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path) -> Output {
    bin().arg("run").arg(config).arg("--out-dir").arg(out).output().unwrap()
}

fn stderr_report(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("no JSON report in {text}"))
}

const BIF_3X3: &str = r#"
experiment = "bifurcate"
[params]
rho = 1.0
beta = 1.0
[sweep]
rho = [2.0, 20.0]
beta = [0.5, 8.0]
rho_n = 3
beta_n = 3
"#;

#[test]
fn version_prints_package_version() {
    let o = bin().arg("version").output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), format!("riotwave {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn shipped_configs_validate_and_round_trip() {
    let mut n = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let o = bin().arg("validate").arg(&path).output().unwrap();
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        let cfg = riotwave_cli::parse_config(&path).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn bifurcate_three_by_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bif.toml", BIF_3X3);
    let out = dir.path().join("out");
    let o = run(&cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("bifurcation.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "rho,beta,region,n_states");
    assert_eq!(lines.len(), 10);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4 && !l.contains("error")));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("bifurcation_summary.json")).unwrap()).unwrap();
    let total: u64 = summary["counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 9);
    let dat = fs::read_to_string(out.join("bifurcation.dat")).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn extinction_rate_is_one_when_fully_censored() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&configs().join("shock_extinction.toml"), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("extinction.json")).unwrap()).unwrap();
    let tau = r["tau_hat"].as_f64().unwrap();
    assert!((tau - 1.0).abs() < 1e-3, "tau_hat = {tau}");
    assert_eq!(r["decayed"], true);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "simulate"
[params]
rho = 12.0
beta = 8.0
[grid]
end = 10.0
dx = 0.1
[kernel]
kind = "gaussian"
sigma = 0.5
[initial]
kind = "exp_decay"
rate = 1.0
amplitude = 1.0
origin = 2.0
[[shocks]]
t = 0.5
x = 7.0
amplitude = 1.5
[schedule]
t_end = 2.0
snapshot_times = [0.0, 0.5, 1.0, 2.0]
"#;
    let cfg = write_config(dir.path(), "sim.toml", &text.replace("[params]\n", "[params]\nk = 0.1\n"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a).status.success());
    assert!(run(&cfg, &b).status.success());
    let ma: RunManifest = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let mb: RunManifest = serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(ma.outputs, mb.outputs);
    assert_eq!(ma.config_hash, mb.config_hash);
    for o in &ma.outputs {
        assert_eq!(fs::read(a.join(&o.file)).unwrap(), fs::read(b.join(&o.file)).unwrap(), "{}", o.file);
    }
    ma.verify(&a).unwrap();
    let files: Vec<&str> = ma.outputs.iter().map(|o| o.file.as_str()).collect();
    assert_eq!(files, ["snapshots.csv", "summary.json", "snapshots.dat"]);
    let csv = fs::read_to_string(a.join("snapshots.csv")).unwrap();
    assert!(csv.starts_with("t,x,u,v\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 101);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_alpha = write_config(dir.path(), "a.toml", "experiment = \"steady_states\"\n[params]\nrho = 6.0\nbeta = 8.0\nalpha = 1.5\n");
    let o = bin().arg("validate").arg(&bad_alpha).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let report = stderr_report(&o);
    assert_eq!(report["error"], "config");
    assert!(report["message"].as_str().unwrap().contains("alpha must lie in [0,1]"));

    let syntax = write_config(dir.path(), "b.toml", "experiment = \n");
    assert_eq!(bin().arg("validate").arg(&syntax).output().unwrap().status.code(), Some(2));

    let o = bin().arg("run").output().unwrap();
    assert_eq!(o.status.code(), Some(2), "missing config path is a usage error");

    let o = bin().arg("run").arg(&bad_alpha).env("RIOTWAVE_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().arg("validate").arg(dir.path().join("absent.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_report(&o)["error"], "io");
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // a monostable front crosses every gap, so there is nothing to bracket
    let cfg = write_config(
        dir.path(),
        "gap.toml",
        r#"
experiment = "gap_scan"
[params]
rho = 8.0
beta = 0.5
D = 0.0
[gap]
critical_range = [0.0, 2.0]
coarse = 2
[gap.setup]
dx = 0.1
t_end = 30.0
"#,
    );
    let o = bin().arg("run").arg(&cfg).arg("--out-dir").arg(dir.path().join("out")).env("RIOTWAVE_THREADS", "1").output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stderr_report(&o);
    assert_eq!(report["error"], "numerical");
    assert!(report["message"].as_str().unwrap().starts_with("numerical error: gap_scan:"));
}

#[test]
fn unwritable_out_dir_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bif.toml", BIF_3X3);
    let blocker = write_config(dir.path(), "file", "");
    let o = run(&cfg, &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(4));
}
