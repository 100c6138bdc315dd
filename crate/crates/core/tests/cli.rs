use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use smallscale::cli_io::{parse_config, verify_kernels_with, Snapshot};
use smallscale::diagnostics::TimeSeries;
use smallscale::models1d::hl_kernel_k;
use tempfile::TempDir;

fn smallscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smallscale")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_series_report_and_snapshots() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "clm.toml",
        "model = \"clm\"\nt_end = 0.1\n[grid]\nn = 64\n[output]\nsnapshot_every = 50\n",
    );
    let out = dir.path().join("out");
    let o = smallscale(&["--threads", "2", "run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("verdict: completed"), "{stdout}");

    let csv = fs::read_to_string(out.join("series.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,dt,max_abs_omega,max_abs_omega_x,error_vs_exact"));
    assert_eq!(csv.lines().count(), 102);
    // 17 significant digits
    for field in lines.next().unwrap().split(',') {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
    }
    let series = TimeSeries::read_csv(&out.join("series.csv")).unwrap();
    assert!((series.times.last().unwrap() - 0.1).abs() < 1e-12);

    let snap = Snapshot::read(&out.join("snapshot_000050.bin")).unwrap();
    assert_eq!((snap.model.as_str(), snap.rows, snap.columns.clone()), ("clm", 64, vec!["omega".to_string()]));
    assert!((snap.t - 0.05).abs() < 1e-12);
    assert!(out.join("snapshot_final.bin").exists());
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("error_vs_exact:"));
}

#[test]
fn config_errors_carry_key_paths_and_fail() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("model = \"clm\"\n[grid]\nsize = 3\n", "grid.size"),
        ("model = \"sqg_patch\"\n[params]\nalpha = 0.6\n", "alpha out of range [0, 0.5)"),
        ("model = \"clm\"\n[params]\nalpha = 0.1\n", "params.alpha"),
        ("t_end = 1.0\n", "model"),
    ];
    for (k, (text, needle)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{k}.toml"), text);
        let o = smallscale(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{needle:?} not in {err}");
    }
    let o = smallscale(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.toml"));
}

#[test]
fn verify_kernels_passes_and_writes_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.toml",
        "model = \"hl\"\n[verify]\nkernel_pairs = 2000\nprofiles = 4\na_values = 3\nbound_samples = 6\nalpha_grid = 8\n",
    );
    let o = smallscale(&["verify-kernels", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("verify.txt")).unwrap();
    assert!(table.starts_with("suite\tcase\tresult\tdetail\n"));
    assert!(table.ends_with("# 33 cases, 0 failed\n"), "{table}");
}

#[test]
fn corrupted_kernel_is_reported_with_its_pair() {
    let dir = TempDir::new().unwrap();
    let spec = parse_config("model = \"hl\"\n[verify]\nkernel_pairs = 500\nprofiles = 1\na_values = 1\nbound_samples = 3\nalpha_grid = 2\n").unwrap();
    let report = verify_kernels_with(&spec, dir.path(), |x, y, g| Ok(hl_kernel_k(x, y, g)? - 2.5)).unwrap();
    assert!(!report.passed());
    let failure = report.failures().next().unwrap();
    assert_eq!(failure.suite, "hl_kernel");
    assert!(failure.detail.contains("at (x, y) = ("), "{}", failure.detail);
    assert!(fs::read_to_string(dir.path().join("verify.txt")).unwrap().contains("FAIL"));
}

#[test]
fn fit_reads_a_series_and_reports() {
    let dir = TempDir::new().unwrap();
    let mut s = TimeSeries::new(vec!["v".into()]);
    for i in 0..50 {
        let t = i as f64 * 0.02;
        s.push(t, vec![(0.7 * t).exp()]).unwrap();
    }
    let csv = dir.path().join("s.csv");
    fs::write(&csv, s.to_csv()).unwrap();
    let o = smallscale(&[
        "fit",
        "--csv",
        csv.to_str().unwrap(),
        "--column",
        "v",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("fit.txt")).unwrap();
    let rate: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rate = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((rate - 0.7).abs() < 1e-12);
    let o = smallscale(&["fit", "--csv", csv.to_str().unwrap(), "--column", "nope"]);
    assert!(!o.status.success());
}

#[test]
fn patch_run_dumps_contours() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "p.toml", "model = \"sqg_patch\"\nt_end = 0.01\n[output]\nsnapshot_every = 1\n");
    let o = smallscale(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let contour = fs::read_to_string(dir.path().join("snapshot_final.csv")).unwrap();
    let mut lines = contour.lines();
    assert!(lines.next().unwrap().starts_with("# t=1.0000000000000000e-2 alpha=4.0000000000000001e-2"));
    assert_eq!(lines.next(), Some("x1,x2"));
    assert!(lines.count() > 100);
}
