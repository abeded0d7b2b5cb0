//! Command-line front end for the time-dependent-mass oscillator library.
//!
//! Subcommands:
//! - `ermakov`: write rho/omega/Theta tables for the canonical parameter
//!   family of the configured profile kind (one CSV per parameter value).
//! - `evolve`: propagate an invariant-matched coherent state through the
//!   factored propagator and write an observable time series plus a summary
//!   of the squeezing points.
//! - `verify`: run the cross-validation suite (picture equivalence,
//!   propagator fidelity, invariant drift, BCH identity, invariant
//!   similarity, convergence order); exit 0 exactly when every check passes.
//!
//! Configuration comes from an optional JSON document (`--config`); all
//! individual flags override the corresponding config fields. Identical
//! configuration produces byte-identical output files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use tdho::ermakov::{
    closed_form, find_critical_points, linspace, solve_ermakov_direct, ErmakovSolution,
};
use tdho::fock::{check_bch, check_bch_sign_flipped, check_invariant_similarity};
use tdho::gaussian::{make_coherent, propagate, propagate_series, write_report_csv, FourierDirection};
use tdho::grid::{sample_gaussian, GridFourierDirection};
use tdho::profiles::MassProfile;

#[derive(Parser)]
#[command(name = "tdho", version, about = "Quantum harmonic oscillator with time-dependent mass")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// JSON config file; every flag below overrides the matching field.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (default "out").
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Inline profile JSON, e.g. '{"kind":"hyperbolic","beta":1.0}' or
    /// '{"kind":"quadratic","gamma":1.0}' (default hyperbolic beta=1).
    #[arg(long, global = true, value_name = "JSON")]
    profile: Option<String>,

    /// Upper end of the tau range (default: 6 hyperbolic, 10 quadratic,
    /// last node for tabulated profiles).
    #[arg(long, global = true, value_name = "TAU")]
    tau_max: Option<f64>,

    /// Number of tau samples (default 1200).
    #[arg(long, global = true, value_name = "N")]
    samples: Option<usize>,

    /// Re(alpha) of the initial coherent state (default 1).
    #[arg(long, global = true, value_name = "X")]
    alpha_re: Option<f64>,

    /// Im(alpha) of the initial coherent state (default 0).
    #[arg(long, global = true, value_name = "Y")]
    alpha_im: Option<f64>,

    /// Split-step time step for grid checks (default 1e-3).
    #[arg(long, global = true, value_name = "DT")]
    dt: Option<f64>,

    /// Grid points for the split-step oracle (default 2048).
    #[arg(long, global = true, value_name = "N")]
    grid_n: Option<usize>,

    /// Grid box length for the split-step oracle (default 24).
    #[arg(long, global = true, value_name = "L")]
    grid_l: Option<f64>,

    /// Truncation dimension for number-basis checks (default 64).
    #[arg(long, global = true, value_name = "DIM")]
    fock_dim: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write rho, omega = 1/rho^2 and Theta tables, one CSV per parameter
    /// value of the configured profile family.
    Ermakov,
    /// Propagate an invariant-matched coherent state; write the observable
    /// time series and a JSON summary of the squeezing points.
    Evolve,
    /// Run the verification suite and exit nonzero if any check fails.
    Verify {
        /// Flip the sign of the combined BCH coefficient before checking.
        /// Mutation control: a healthy build must report a loud BCH failure.
        #[arg(long, hide = true)]
        corrupt_bch_sign: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    profile: MassProfile,
    tau_min: Option<f64>,
    tau_max: Option<f64>,
    samples: usize,
    alpha_re: f64,
    alpha_im: f64,
    dt: f64,
    grid_n: usize,
    grid_l: f64,
    fock_dim: usize,
    out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: MassProfile::Hyperbolic { beta: 1.0 },
            tau_min: None,
            tau_max: None,
            samples: 1200,
            alpha_re: 1.0,
            alpha_im: 0.0,
            dt: 1e-3,
            grid_n: 2048,
            grid_l: 24.0,
            fock_dim: 64,
            out: PathBuf::from("out"),
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.profile {
        cfg.profile = serde_json::from_str(s).context("parsing --profile JSON")?;
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = cli.tau_max {
        cfg.tau_max = Some(v);
    }
    if let Some(v) = cli.samples {
        cfg.samples = v;
    }
    if let Some(v) = cli.alpha_re {
        cfg.alpha_re = v;
    }
    if let Some(v) = cli.alpha_im {
        cfg.alpha_im = v;
    }
    if let Some(v) = cli.dt {
        cfg.dt = v;
    }
    if let Some(v) = cli.grid_n {
        cfg.grid_n = v;
    }
    if let Some(v) = cli.grid_l {
        cfg.grid_l = v;
    }
    if let Some(v) = cli.fock_dim {
        cfg.fock_dim = v;
    }
    if cfg.samples < 2 {
        bail!("samples must be >= 2, got {}", cfg.samples);
    }
    if cfg.dt <= 0.0 {
        bail!("dt must be positive, got {}", cfg.dt);
    }
    cfg.profile.validate().context("validating profile")?;
    Ok(cfg)
}

fn profile_context(profile: &MassProfile) -> String {
    serde_json::to_string(profile).unwrap_or_else(|_| "<profile>".into())
}

/// Natural start of the tau domain: the hyperbolic family is degenerate at
/// tau = 0 (u vanishes), so it starts at 0.1 by convention.
fn default_tau_min(profile: &MassProfile) -> f64 {
    match profile {
        MassProfile::Hyperbolic { .. } => 0.1,
        MassProfile::Quadratic { .. } => 0.0,
        MassProfile::Tabulated { samples } => samples.first().map(|s| s.0).unwrap_or(0.0),
    }
}

fn default_tau_max(profile: &MassProfile) -> f64 {
    match profile {
        MassProfile::Hyperbolic { .. } => 6.0,
        MassProfile::Quadratic { .. } => 10.0,
        MassProfile::Tabulated { samples } => samples.last().map(|s| s.0).unwrap_or(1.0),
    }
}

/// Ermakov data for any profile: closed form when the family has one,
/// otherwise direct integration from the adiabatic initial condition
/// rho = (kappa M)^{1/4}, rho_dot = 0.
fn solve_profile(profile: &MassProfile, grid: &[f64]) -> Result<ErmakovSolution> {
    let sol = if profile.has_closed_form() {
        closed_form(profile, grid)
    } else {
        let tau0 = grid[0];
        let rho0 = profile.eval_kappa_m(tau0)?.powf(0.25);
        solve_ermakov_direct(profile, tau0, rho0, 0.0, grid)
    };
    sol.with_context(|| format!("solving Ermakov equation for {}", profile_context(profile)))
}

fn write_rho_omega(sol: &ErmakovSolution, path: &Path) -> Result<()> {
    let file = fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "tau,rho,omega,theta")?;
    for i in 0..sol.tau.len() {
        let omega = 1.0 / (sol.rho[i] * sol.rho[i]);
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            sol.tau[i], sol.rho[i], omega, sol.theta[i]
        )?;
    }
    Ok(())
}

fn cmd_ermakov(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;

    // One (name, profile, range) job per canonical parameter value.
    let jobs: Vec<(String, MassProfile, f64, f64)> = match &cfg.profile {
        MassProfile::Hyperbolic { .. } => {
            let tau0 = cfg.tau_min.unwrap_or(0.1);
            let tau1 = cfg.tau_max.unwrap_or(6.0);
            [0.2, 0.5, 1.0]
                .iter()
                .map(|&beta| {
                    (
                        format!("rho_omega_beta_{beta}.csv"),
                        MassProfile::Hyperbolic { beta },
                        tau0,
                        tau1,
                    )
                })
                .collect()
        }
        MassProfile::Quadratic { .. } => {
            let tau0 = cfg.tau_min.unwrap_or(0.0);
            let tau1 = cfg.tau_max.unwrap_or(10.0);
            [1.0, 5.0, 10.0]
                .iter()
                .map(|&gamma| {
                    (
                        format!("rho_omega_gamma_{gamma}.csv"),
                        MassProfile::Quadratic { gamma },
                        tau0,
                        tau1,
                    )
                })
                .collect()
        }
        tab @ MassProfile::Tabulated { .. } => {
            let tau0 = cfg.tau_min.unwrap_or_else(|| default_tau_min(tab));
            let tau1 = cfg.tau_max.unwrap_or_else(|| default_tau_max(tab));
            vec![("rho_omega_tabulated.csv".to_string(), tab.clone(), tau0, tau1)]
        }
    };

    // Each worker owns its output file; results are joined before returning.
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(name, profile, tau0, tau1)| {
                let out = cfg.out.join(name);
                let samples = cfg.samples;
                scope.spawn(move || -> Result<PathBuf> {
                    let grid = linspace(*tau0, *tau1, samples);
                    let sol = solve_profile(profile, &grid)?;
                    write_rho_omega(&sol, &out)?;
                    Ok(out)
                })
            })
            .collect();
        for handle in handles {
            let path = handle.join().expect("ermakov worker panicked")?;
            println!("wrote {}", path.display());
        }
        Ok(())
    })
}

fn cmd_evolve(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    let profile = &cfg.profile;
    let tau0 = cfg.tau_min.unwrap_or_else(|| default_tau_min(profile));
    let tau1 = cfg.tau_max.unwrap_or_else(|| default_tau_max(profile));
    let grid = linspace(tau0, tau1, cfg.samples);
    let sol = solve_profile(profile, &grid)?;

    // Invariant-matched initial state: the Fourier transform of |alpha>,
    // pulled back through T at the start time. This is the family for which
    // the critical points yield exact squeezed states.
    let alpha = Complex64::new(cfg.alpha_re, cfg.alpha_im);
    let (rho0, rhodot0, _) = sol.eval(tau0)?;
    let initial = make_coherent(alpha)
        .fourier_map(FourierDirection::Forward)
        .apply_t_dagger(rho0, rhodot0)
        .with_context(|| format!("building initial state for {}", profile_context(profile)))?;

    let reports = propagate_series(profile, &sol, &grid, &initial)
        .with_context(|| format!("propagating {}", profile_context(profile)))?;

    let series_path = cfg.out.join("evolve_series.csv");
    let file = fs::File::create(&series_path)
        .with_context(|| format!("creating {}", series_path.display()))?;
    let mut w = BufWriter::new(file);
    write_report_csv(&reports, &mut w).context("writing series CSV")?;
    w.flush()?;
    println!("wrote {}", series_path.display());

    let points = find_critical_points(&sol);
    let mut tau_p = Vec::new();
    let mut rho_at = Vec::new();
    let mut r_at = Vec::new();
    let mut uncertainty_at = Vec::new();
    for &(tp, rp) in &points {
        let rep = propagate(profile, &sol, tp, &initial)
            .with_context(|| format!("propagating to critical point tau = {tp}"))?;
        tau_p.push(tp);
        rho_at.push(rp);
        r_at.push(rep.r);
        uncertainty_at.push(rep.uncertainty);
    }
    let min_uncertainty =
        reports.iter().map(|r| r.uncertainty).fold(f64::INFINITY, f64::min);

    let summary = json!({
        "profile": profile,
        "alpha_re": cfg.alpha_re,
        "alpha_im": cfg.alpha_im,
        "tau_min": tau0,
        "tau_max": tau1,
        "samples": cfg.samples,
        "tau_p": tau_p,
        "rho_at_tau_p": rho_at,
        "r_at_tau_p": r_at,
        "uncertainty_at_tau_p": uncertainty_at,
        "min_uncertainty": min_uncertainty,
    });
    let summary_path = cfg.out.join("evolve_summary.json");
    fs::write(&summary_path, format!("{}\n", serde_json::to_string_pretty(&summary)?))
        .with_context(|| format!("writing {}", summary_path.display()))?;
    println!("wrote {}", summary_path.display());
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutcome {
    pass: bool,
    checks: Vec<serde_json::Value>,
}

fn push_entry(
    entries: &mut Vec<serde_json::Value>,
    check: &str,
    parameters: serde_json::Value,
    discrepancy: f64,
    pass: bool,
) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("check {check}: {verdict} (discrepancy {discrepancy:.3e})");
    entries.push(json!({
        "check": check,
        "parameters": parameters,
        "discrepancy": discrepancy,
        "pass": pass,
    }));
}

fn run_verify(cfg: &RunConfig, corrupt_bch_sign: bool) -> Result<VerifyOutcome> {
    let profile = &cfg.profile;
    if !profile.has_closed_form() {
        bail!("verify needs a closed-form profile family (hyperbolic or quadratic)");
    }
    let mut entries = Vec::new();
    let alpha = Complex64::new(cfg.alpha_re, cfg.alpha_im);

    // Grid checks on [tau0, tau0 + 0.9] with the configured box.
    let tau0 = cfg.tau_min.unwrap_or_else(|| default_tau_min(profile));
    let tau1 = tau0 + 0.9;
    let nodes = ((tau1 - tau0) / 1e-3).round() as usize + 1;
    let sol = closed_form(profile, &linspace(tau0, tau1, nodes))?;
    let grid_params = json!({
        "profile": profile,
        "tau0": tau0,
        "tau1": tau1,
        "dt": cfg.dt,
        "grid_n": cfg.grid_n,
        "grid_l": cfg.grid_l,
        "alpha_re": cfg.alpha_re,
        "alpha_im": cfg.alpha_im,
    });

    let psi0 = sample_gaussian(&make_coherent(alpha), cfg.grid_n, cfg.grid_l)
        .context("sampling the initial state onto the grid")?;

    // Picture equivalence: evolving the Fourier transform under the original
    // picture must match Fourier-transforming the transformed evolution.
    let via_original = psi0
        .apply_fourier_grid(GridFourierDirection::Forward)?
        .evolve_original(profile, tau0, tau1, cfg.dt)
        .with_context(|| format!("original-picture evolution for {}", profile_context(profile)))?;
    let transformed = psi0
        .evolve_transformed(profile, tau0, tau1, cfg.dt)
        .with_context(|| format!("transformed evolution for {}", profile_context(profile)))?;
    let via_transformed = transformed.apply_fourier_grid(GridFourierDirection::Forward)?;
    let f = via_original.fidelity(&via_transformed)?;
    push_entry(&mut entries, "picture_equivalence", grid_params.clone(), 1.0 - f, f >= 0.999);

    // Propagator fidelity: factored-propagator moments vs the grid state.
    let rep = propagate(profile, &sol, tau1, &make_coherent(alpha))?;
    let reference = sample_gaussian(&rep.state, cfg.grid_n, cfg.grid_l)?;
    let f = transformed.fidelity(&reference)?;
    push_entry(&mut entries, "propagator_fidelity", grid_params.clone(), 1.0 - f, f >= 0.999);

    // Invariant drift along the grid evolution.
    let (rho0, rhodot0, _) = sol.eval(tau0)?;
    let (rho1, rhodot1, _) = sol.eval(tau1)?;
    let i0 = psi0.observables()?.invariant_expectation(rho0, rhodot0);
    let i1 = transformed.observables()?.invariant_expectation(rho1, rhodot1);
    let drift = ((i1 - i0) / i0).abs();
    push_entry(&mut entries, "invariant_drift", grid_params, drift, drift < 1e-3);

    // Operator identities in the number basis.
    for (rho, rho_dot) in [(2.0, 1.0), (0.5, -1.0)] {
        let rep = if corrupt_bch_sign {
            check_bch_sign_flipped(rho, rho_dot, cfg.fock_dim)?
        } else {
            check_bch(rho, rho_dot, cfg.fock_dim)?
        };
        let verdict = if rep.pass { "PASS" } else { "FAIL" };
        println!("check {}: {verdict} (discrepancy {:.3e})", rep.check, rep.discrepancy);
        entries.push(serde_json::to_value(&rep)?);
    }
    for (rho, rho_dot) in [(2.0, 0.7), (0.8, -0.5)] {
        let rep = check_invariant_similarity(rho, rho_dot, cfg.fock_dim)?;
        let verdict = if rep.pass { "PASS" } else { "FAIL" };
        println!("check {}: {verdict} (discrepancy {:.3e})", rep.check, rep.discrepancy);
        entries.push(serde_json::to_value(&rep)?);
    }

    // Convergence order on the canonical hyperbolic run: halving dt must
    // cut the state error sqrt(1 - F) by four (second-order splitting).
    let conv_profile = MassProfile::Hyperbolic { beta: 1.0 };
    let conv_l = 32.0;
    let conv_alpha = Complex64::new(2.0, 0.0);
    let conv_sol = closed_form(&conv_profile, &linspace(0.1, 2.0, 1901))?;
    let conv_rep = propagate(&conv_profile, &conv_sol, 2.0, &make_coherent(conv_alpha))?;
    let conv_ref = sample_gaussian(&conv_rep.state, cfg.grid_n, conv_l)?;
    let mut errs = Vec::new();
    for dt in [cfg.dt, cfg.dt / 2.0] {
        let psi = sample_gaussian(&make_coherent(conv_alpha), cfg.grid_n, conv_l)?
            .evolve_transformed(&conv_profile, 0.1, 2.0, dt)?;
        errs.push((1.0 - psi.fidelity(&conv_ref)?).max(0.0).sqrt());
    }
    let ratio = errs[0] / errs[1];
    push_entry(
        &mut entries,
        "convergence_order",
        json!({ "dt_coarse": cfg.dt, "dt_fine": cfg.dt / 2.0, "ratio": ratio }),
        (ratio - 4.0).abs(),
        (3.0..=5.0).contains(&ratio),
    );

    let pass = entries.iter().all(|e| e["pass"].as_bool() == Some(true));
    Ok(VerifyOutcome { pass, checks: entries })
}

fn cmd_verify(cfg: &RunConfig, corrupt_bch_sign: bool) -> Result<bool> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    let outcome = run_verify(cfg, corrupt_bch_sign)?;
    let report_path = cfg.out.join("verify_report.json");
    fs::write(&report_path, format!("{}\n", serde_json::to_string_pretty(&outcome)?))
        .with_context(|| format!("writing {}", report_path.display()))?;
    println!("wrote {}", report_path.display());
    println!("verify: {}", if outcome.pass { "PASS" } else { "FAIL" });
    Ok(outcome.pass)
}

fn main() {
    let cli = Cli::parse();
    let result = resolve_config(&cli).and_then(|cfg| match cli.cmd {
        Cmd::Ermakov => cmd_ermakov(&cfg).map(|()| true),
        Cmd::Evolve => cmd_evolve(&cfg).map(|()| true),
        Cmd::Verify { corrupt_bch_sign } => cmd_verify(&cfg, corrupt_bch_sign),
    });
    match result {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
