//! End-to-end tests that drive the compiled `tdho` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tdho")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawning the tdho binary")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Parse a rho/omega CSV into (tau, rho, omega, theta) columns.
fn read_rho_omega(path: &Path) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,rho,omega,theta"), "header of {}", path.display());
    let mut cols = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for line in lines {
        let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(vals.len(), 4);
        cols.0.push(vals[0]);
        cols.1.push(vals[1]);
        cols.2.push(vals[2]);
        cols.3.push(vals[3]);
    }
    (cols.0, cols.1, cols.2, cols.3)
}

#[test]
fn ermakov_hyperbolic_family() {
    let out = scratch("ermakov_hyp");
    run_ok(&["ermakov", "--out", out.to_str().unwrap(), "--samples", "600"]);
    for beta in ["0.2", "0.5", "1"] {
        let path = out.join(format!("rho_omega_beta_{beta}.csv"));
        let (tau, rho, omega, _) = read_rho_omega(&path);
        assert_eq!(tau.len(), 600);
        assert!((tau[0] - 0.1).abs() < 1e-12);
        assert!((tau.last().unwrap() - 6.0).abs() < 1e-12);
        for i in 0..rho.len() {
            assert!(rho[i] > 0.0);
            assert!((omega[i] - 1.0 / (rho[i] * rho[i])).abs() < 1e-12);
        }
    }
    // The slow ramp has exactly one interior minimum of rho: the squeezing
    // instant where rho_dot crosses zero.
    let (_, rho, _, _) = read_rho_omega(&out.join("rho_omega_beta_0.2.csv"));
    let minima = (1..rho.len() - 1)
        .filter(|&i| rho[i] < rho[i - 1] && rho[i] <= rho[i + 1])
        .count();
    assert_eq!(minima, 1, "expected a single interior minimum of rho");
}

#[test]
fn ermakov_quadratic_family_is_monotone() {
    let out = scratch("ermakov_quad");
    run_ok(&[
        "ermakov",
        "--out",
        out.to_str().unwrap(),
        "--profile",
        r#"{"kind":"quadratic","gamma":1.0}"#,
        "--samples",
        "500",
    ]);
    for gamma in ["1", "5", "10"] {
        let path = out.join(format!("rho_omega_gamma_{gamma}.csv"));
        let (tau, rho, _, theta) = read_rho_omega(&path);
        assert!((tau[0] - 0.0).abs() < 1e-12);
        assert!((tau.last().unwrap() - 10.0).abs() < 1e-12);
        // rho = (gamma + 2 tau)^{1/2} * sqrt(1 + S^2) grows without a
        // turning point, so no squeezing instant exists on this family.
        for i in 1..rho.len() {
            assert!(rho[i] > rho[i - 1], "rho must increase for gamma={gamma}");
            assert!(theta[i] >= theta[i - 1]);
        }
    }
}

#[test]
fn ermakov_tabulated_constant_mass() {
    let out = scratch("ermakov_tab");
    // kappa*M == 1 is the static oscillator: rho == 1, omega == 1,
    // Theta(tau) = tau - tau0.
    let profile = r#"{"kind":"tabulated","samples":[[0.0,1.0],[1.0,1.0],[2.0,1.0],[3.0,1.0],[4.0,1.0]]}"#;
    run_ok(&[
        "ermakov",
        "--out",
        out.to_str().unwrap(),
        "--profile",
        profile,
        "--samples",
        "400",
    ]);
    let (tau, rho, omega, theta) = read_rho_omega(&out.join("rho_omega_tabulated.csv"));
    assert!((tau[0] - 0.0).abs() < 1e-12);
    assert!((tau.last().unwrap() - 4.0).abs() < 1e-12);
    for i in 0..tau.len() {
        assert!((rho[i] - 1.0).abs() < 1e-7, "rho at tau={}", tau[i]);
        assert!((omega[i] - 1.0).abs() < 1e-7);
        assert!((theta[i] - tau[i]).abs() < 1e-6);
    }
}

#[test]
fn evolve_hyperbolic_squeezing_point() {
    let out = scratch("evolve_hyp");
    run_ok(&[
        "evolve",
        "--out",
        out.to_str().unwrap(),
        "--samples",
        "300",
        "--tau-max",
        "6",
    ]);
    let series = std::fs::read_to_string(out.join("evolve_series.csv")).unwrap();
    assert!(series.starts_with("tau,mean_q,mean_p,var_q,var_p,cov_qp,uncertainty,invariant,r,phi"));
    assert_eq!(series.lines().count(), 301);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("evolve_summary.json")).unwrap())
            .unwrap();
    let tau_p = summary["tau_p"].as_array().unwrap();
    assert_eq!(tau_p.len(), 1, "beta=1 ramp has one squeezing instant");
    assert!((tau_p[0].as_f64().unwrap() - 0.9627).abs() < 1e-3);
    // At the critical point the state is a pure squeezed state: the
    // uncertainty product returns to the Heisenberg floor.
    let u = summary["uncertainty_at_tau_p"][0].as_f64().unwrap();
    assert!((u - 0.5).abs() < 1e-4, "uncertainty at tau_p was {u}");
    assert!(summary["r_at_tau_p"][0].as_f64().unwrap() > 0.0);
}

#[test]
fn evolve_quadratic_has_no_critical_point() {
    let out = scratch("evolve_quad");
    run_ok(&[
        "evolve",
        "--out",
        out.to_str().unwrap(),
        "--profile",
        r#"{"kind":"quadratic","gamma":5.0}"#,
        "--samples",
        "200",
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("evolve_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["tau_p"].as_array().unwrap().len(), 0);
    assert!(summary["min_uncertainty"].as_f64().unwrap() >= 0.5 - 1e-12);
}

#[test]
fn evolve_static_vacuum_stays_at_heisenberg_floor() {
    let out = scratch("evolve_static");
    // Constant mass and alpha = 0: the ground state is stationary, so the
    // uncertainty product must sit at 1/2 along the whole series.
    let profile = r#"{"kind":"tabulated","samples":[[0.0,1.0],[0.5,1.0],[1.0,1.0],[1.5,1.0],[2.0,1.0]]}"#;
    run_ok(&[
        "evolve",
        "--out",
        out.to_str().unwrap(),
        "--profile",
        profile,
        "--alpha-re",
        "0",
        "--samples",
        "150",
    ]);
    let series = std::fs::read_to_string(out.join("evolve_series.csv")).unwrap();
    for line in series.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let uncertainty = cols[6];
        assert!((uncertainty - 0.5).abs() < 1e-6, "line {line}");
    }
}

#[test]
fn verify_default_profile_passes() {
    let out = scratch("verify_ok");
    let output = run_ok(&["verify", "--out", out.to_str().unwrap(), "--fock-dim", "48"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("picture_equivalence: PASS"));
    assert!(stdout.contains("bch: PASS"));
    assert!(stdout.contains("invariant_similarity: PASS"));
    assert!(stdout.contains("convergence_order: PASS"));
    assert!(stdout.contains("verify: PASS"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 8);
    for check in checks {
        assert_eq!(check["pass"], serde_json::Value::Bool(true), "check {check}");
    }
}

#[test]
fn verify_detects_corrupted_bch_sign() {
    let out = scratch("verify_bad");
    let output = run(&[
        "verify",
        "--out",
        out.to_str().unwrap(),
        "--fock-dim",
        "48",
        "--corrupt-bch-sign",
    ]);
    assert_eq!(output.status.code(), Some(1), "corrupted run must exit 1");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(false));
    let bch: Vec<_> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["check"] == "bch_sign_flipped")
        .collect();
    assert_eq!(bch.len(), 2);
    for check in bch {
        assert_eq!(check["pass"], serde_json::Value::Bool(false));
        // The wrong sign is a loud failure, far above the pass threshold.
        assert!(check["discrepancy"].as_f64().unwrap() > 1e-2);
    }
}

#[test]
fn outputs_are_deterministic() {
    let args_for = |dir: &Path| {
        vec![
            "evolve".to_string(),
            "--out".to_string(),
            dir.to_str().unwrap().to_string(),
            "--samples".to_string(),
            "120".to_string(),
            "--alpha-im".to_string(),
            "0.3".to_string(),
        ]
    };
    let out_a = scratch("det_a");
    let out_b = scratch("det_b");
    fn to_refs(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }
    run_ok(&to_refs(&args_for(&out_a)));
    run_ok(&to_refs(&args_for(&out_b)));
    for name in ["evolve_series.csv", "evolve_summary.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let out = scratch("config");
    std::fs::create_dir_all(&out).unwrap();
    let config_path = out.join("run.json");
    std::fs::write(
        &config_path,
        r#"{
  "profile": {"kind": "quadratic", "gamma": 2.0},
  "samples": 180,
  "tau_max": 3.0,
  "out": "ignored-by-flag"
}"#,
    )
    .unwrap();
    let run_dir = out.join("run");
    run_ok(&[
        "evolve",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--samples",
        "90",
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("evolve_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["profile"]["kind"], "quadratic");
    assert_eq!(summary["samples"].as_u64(), Some(90), "flag must beat config");
    assert_eq!(summary["tau_max"].as_f64(), Some(3.0), "config must beat default");
}

#[test]
fn unknown_config_key_is_rejected() {
    let out = scratch("badconfig");
    std::fs::create_dir_all(&out).unwrap();
    let config_path = out.join("run.json");
    std::fs::write(&config_path, r#"{"smaples": 100}"#).unwrap();
    let output = run(&["evolve", "--config", config_path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("smaples"), "stderr should name the bad key: {stderr}");
}
