use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nids::io::{parse_figure, read_snapshot};

fn nids(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nids"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env_remove("NIDS_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, format!("# small demo grid\nhalf_width = 10\nnodes = 65\ndt = 1e-3\n{extra}")).unwrap();
    path
}

fn max_abs(path: &Path) -> f64 {
    read_snapshot(path).unwrap().q.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn exact_writes_one_snapshot_per_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "exact"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let files: Vec<PathBuf> = (0..3).map(|k| dir.path().join(format!("exact_{k:03}.nids"))).collect();
    let times: Vec<f64> = files.iter().map(|f| read_snapshot(f).unwrap().t).collect();
    assert_eq!(times, vec![-0.5, 0.0, 0.2]);
    // the grid maximum is not the true maximum, so only a loose ratio check here
    let ratio = max_abs(&files[2]) / max_abs(&files[0]);
    assert!((ratio / 0.7f64.exp() - 1.0).abs() < 5e-2, "{ratio}");
}

#[test]
fn exact_soliton_without_growth_keeps_its_height() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "solution = soliton\nomega1 = 0\ntimes = 0, 0.4\n");
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "exact"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = max_abs(&dir.path().join("exact_000.nids"));
    let b = max_abs(&dir.path().join("exact_001.nids"));
    assert!((a - b).abs() < 1e-2 * a, "{a} {b}");
}

#[test]
fn empty_time_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "times =\n");
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "exact"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn invalid_parameters_exit_two_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--set", "alpha=2", "--set", "beta=2", "exact"],
        vec!["--set", "colour=red", "exact"],
        vec!["--set", "nodes=1", "exact"],
        vec!["--config", "/nonexistent/run.cfg", "exact"],
        vec!["bogus"],
        vec!["--tolerance", "-1", "verify", "pde"],
    ] {
        let o = nids(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert_eq!(stderr(&o).lines().count(), 1, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "gamma_prime = 3\n");
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "exact"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma_prime"));
}

#[test]
fn verify_pde_passes_on_demo_dromion() {
    let dir = tempfile::tempdir().unwrap();
    let o = nids(dir.path(), &["verify", "pde"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("status = PASS"));
    let line = out.lines().find(|l| l.starts_with("max_norm = ")).unwrap();
    let max: f64 = line["max_norm = ".len()..].parse().unwrap();
    assert!(max <= 1e-6);
    assert!(dir.path().join("verify_pde.txt").exists());
}

#[test]
fn verify_pde_fails_with_tight_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let o = nids(dir.path(), &["--tolerance", "1e-12", "verify", "pde"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("residual"), "{}", stderr(&o));
}

#[test]
fn verify_bilinear_on_zero_field_is_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = nids(dir.path(), &["--set", "solution=zero", "verify", "bilinear"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for key in ["evolution_bilinear", "constraint_bilinear", "odd_self_product"] {
        assert!(out.contains(&format!("{key} = 0.0000000000000000e0")), "{out}");
    }
}

#[test]
fn verify_epsilon_negative_control_names_third_order() {
    let dir = tempfile::tempdir().unwrap();
    let ok = nids(dir.path(), &["verify", "epsilon"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let bad = nids(dir.path(), &["--set", "l_re_rate=0.5", "verify", "epsilon"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("order-3"), "{}", stderr(&bad));
}

#[test]
fn simulate_zero_length_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "t_start = 0.1\nt_end = 0.1\ntimes = 0.1\n");
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("snapshot_000.nids").exists());
    assert!(!dir.path().join("snapshot_001.nids").exists());
    let series = std::fs::read_to_string(dir.path().join("peak_series.txt")).unwrap();
    assert_eq!(series.lines().filter(|l| !l.starts_with('#')).count(), 1);
}

#[test]
fn simulate_refuses_unstable_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "--set", "dt=0.1", "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stability"), "{}", stderr(&o));
}

#[test]
fn simulate_short_run_tracks_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "t_start = 0\nt_end = 0.05\ntimes = 0, 0.05\n");
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let last = out.lines().rfind(|l| l.starts_with("relative_l2_error")).unwrap();
    let err: f64 = last.rsplit(" = ").next().unwrap().parse().unwrap();
    assert!(err < 1e-3, "{err}");
    let series = std::fs::read_to_string(dir.path().join("peak_series.txt")).unwrap();
    assert_eq!(series.lines().filter(|l| !l.starts_with('#')).count(), 51);
}

#[test]
fn simulate_from_file_with_frozen_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "times = 0\n");
    assert_eq!(nids(dir.path(), &["--config", cfg.to_str().unwrap(), "exact"]).status.code(), Some(0));
    let init = dir.path().join("exact_000.nids");
    let cfg = small_config(
        dir.path(),
        &format!(
            "t_start = 0\nt_end = 0.01\ntimes = 0.01\ninitial = file\ninitial_file = {}\nboundary = file\n",
            init.display()
        ),
    );
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = read_snapshot(&dir.path().join("snapshot_000.nids")).unwrap();
    assert!((s.t - 0.01).abs() < 1e-12);
}

#[test]
fn gauge_identity_and_modulus() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "omega1 = 0\n");
    assert_eq!(nids(dir.path(), &["--config", cfg.to_str().unwrap(), "exact"]).status.code(), Some(0));
    let input = dir.path().join("exact_001.nids");
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "gauge", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = std::fs::read(&input).unwrap();
    let b = std::fs::read(dir.path().join("gauge_exact_001.nids")).unwrap();
    assert_eq!(a, b);

    let cfg = small_config(dir.path(), "omega1 = 1\na1 = 0.3\nomega0 = 0.2\n");
    assert_eq!(nids(dir.path(), &["--config", cfg.to_str().unwrap(), "exact"]).status.code(), Some(0));
    let o = nids(dir.path(), &["--config", cfg.to_str().unwrap(), "gauge", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = read_snapshot(&input).unwrap();
    let g = read_snapshot(&dir.path().join("gauge_exact_001.nids")).unwrap();
    let worst = s.q.iter().zip(g.q.iter()).map(|(a, b)| (a.norm() - b.norm()).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-15, "{worst}");
}

#[test]
fn gauge_chain_verify_passes_on_fine_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = nids(dir.path(), &["--set", "nodes=1025", "--set", "times=0", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    let input = dir.path().join("exact_000.nids");
    let o = nids(dir.path(), &["--set", "nodes=1025", "gauge", "--chain-verify", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn figure_outputs_and_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    assert_eq!(nids(dir.path(), &["--config", cfg.to_str().unwrap(), "exact"]).status.code(), Some(0));
    let inputs: Vec<String> = (0..3).map(|k| dir.path().join(format!("exact_{k:03}.nids")).display().to_string()).collect();
    let mut args = vec!["figure", "--input"];
    args.extend(inputs.iter().map(String::as_str));
    let o = nids(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for k in 0..3 {
        let text = std::fs::read_to_string(dir.path().join(format!("figure_exact_{k:03}.dat"))).unwrap();
        assert!(text.starts_with("# |q| at t ="));
        assert!(text.lines().nth(1).unwrap().contains("abs_q"));
        assert_eq!(parse_figure(&text).unwrap().len(), 65 * 65);
    }
    let missing = dir.path().join("missing.nids");
    let o = nids(dir.path(), &["figure", "--input", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn thread_cap_variable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_nids"))
            .arg("--out")
            .arg(dir.path())
            .args(["--set", "nodes=33", "--set", "times=0", "exact"])
            .env("NIDS_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(run("1").status.code(), Some(0));
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn outputs_are_byte_stable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(nids(d.path(), &["--set", "nodes=33", "exact"]).status.code(), Some(0));
    }
    for k in 0..3 {
        let name = format!("exact_{k:03}.nids");
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
    }
}
