//! Acceptance gate for the time-dependent-mass oscillator stack.
//!
//! Eleven numbered criteria, each implemented as one test that prints a
//! single PASS/FAIL line with the measured numbers. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use tdho::ermakov::{
    closed_form, ermakov_residual, find_critical_points, linspace, rho_from_u,
    solve_ermakov_direct, solve_u, ErmakovSolution,
};
use tdho::fock::{check_bch_grid, check_similarity_grid, BCH_TOL, SIMILARITY_TOL};
use tdho::gaussian::{make_coherent, propagate, propagate_series, FourierDirection};
use tdho::grid::{sample_gaussian, GridFourierDirection, GridWavefunction};
use tdho::profiles::MassProfile;

const GRID_N: usize = 2048;
const GRID_DT: f64 = 1e-4;

fn check(num: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {num:02} {name}: {verdict} ({detail})");
    assert!(pass, "criterion {num:02} {name}: {detail}");
}

fn alpha_one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

static HYP: Lazy<MassProfile> = Lazy::new(|| MassProfile::Hyperbolic { beta: 1.0 });
static QUAD: Lazy<MassProfile> = Lazy::new(|| MassProfile::Quadratic { gamma: 1.0 });

/// Closed-form Ermakov data on [tau0, 2] with millisecond node spacing.
fn short_solution(profile: &MassProfile, tau0: f64) -> ErmakovSolution {
    let n = ((2.0 - tau0) / 1e-3).round() as usize + 1;
    closed_form(profile, &linspace(tau0, 2.0, n)).expect("closed-form solution")
}

static HYP_SOL: Lazy<ErmakovSolution> = Lazy::new(|| short_solution(&HYP, 0.1));
static QUAD_SOL: Lazy<ErmakovSolution> = Lazy::new(|| short_solution(&QUAD, 0.0));

/// A transformed-picture grid evolution of the coherent state alpha = 1,
/// with states kept at tau = 0.5, 1, 2 and the invariant expectation
/// monitored every 0.05 along the way.
struct TransformedRun {
    tau0: f64,
    length: f64,
    checkpoints: Vec<(f64, GridWavefunction)>,
    invariant_drift: f64,
}

fn transformed_run(
    profile: &MassProfile,
    sol: &ErmakovSolution,
    tau0: f64,
    length: f64,
) -> TransformedRun {
    let mut psi = sample_gaussian(&make_coherent(alpha_one()), GRID_N, length).expect("sample");
    let (rho0, rhodot0, _) = sol.eval(tau0).expect("eval at start");
    let i0 = psi.observables().expect("observables").invariant_expectation(rho0, rhodot0);
    let mut drift: f64 = 0.0;
    let mut checkpoints = Vec::new();
    let nseg = ((2.0 - tau0) / 0.05).round() as usize;
    for k in 1..=nseg {
        let a = tau0 + (k - 1) as f64 * 0.05;
        let b = tau0 + k as f64 * 0.05;
        psi = psi.evolve_transformed(profile, a, b, GRID_DT).expect("evolve");
        let (rho, rho_dot, _) = sol.eval(b).expect("eval");
        let inv = psi.observables().expect("observables").invariant_expectation(rho, rho_dot);
        drift = drift.max(((inv - i0) / i0).abs());
        for target in [0.5, 1.0, 2.0] {
            if (b - target).abs() < 1e-9 {
                checkpoints.push((b, psi.clone()));
            }
        }
    }
    assert_eq!(checkpoints.len(), 3, "expected checkpoints at 0.5, 1, 2");
    TransformedRun { tau0, length, checkpoints, invariant_drift: drift }
}

static HYP_RUN: Lazy<TransformedRun> =
    Lazy::new(|| transformed_run(&HYP, &HYP_SOL, 0.1, 24.0));
static QUAD_RUN: Lazy<TransformedRun> =
    Lazy::new(|| transformed_run(&QUAD, &QUAD_SOL, 0.0, 44.0));

#[test]
fn criterion_01_ermakov_residual() {
    let hyp = closed_form(&HYP, &linspace(0.2, 5.0, 2000)).expect("hyperbolic closed form");
    let quad = closed_form(&QUAD, &linspace(0.0, 5.0, 2000)).expect("quadratic closed form");
    let r_hyp = ermakov_residual(&hyp, &HYP).expect("residual");
    let r_quad = ermakov_residual(&quad, &QUAD).expect("residual");
    let pass = r_hyp < 1e-6 && r_quad < 1e-6;
    check(
        1,
        "ermakov-residual",
        pass,
        &format!("hyperbolic {r_hyp:.3e}, quadratic {r_quad:.3e}, tolerance 1e-6"),
    );
}

#[test]
fn criterion_02_auxiliary_consistency() {
    let mut worst_rho: f64 = 0.0;
    let mut worst_theta: f64 = 0.0;

    let cases: [(&MassProfile, f64); 2] = [(&HYP, 0.1), (&QUAD, 0.0)];
    for (profile, tau0) in cases {
        let grid = linspace(tau0, 5.0, 2000);
        let reference = closed_form(profile, &grid).expect("closed form");

        let u0 = profile.analytic_u(tau0).expect("analytic u");
        let udot0 = profile.analytic_udot(tau0).expect("analytic udot");
        let s0 = profile.analytic_s(tau0).expect("analytic S");
        let (u, udot) = solve_u(profile, tau0, u0, udot0, &grid).expect("solve_u");
        let via_u = rho_from_u(&grid, &u, &udot, s0).expect("rho_from_u");

        let rho0 = profile.analytic_rho(tau0).expect("analytic rho");
        let rhodot0 = profile.analytic_rhodot(tau0).expect("analytic rhodot");
        let direct =
            solve_ermakov_direct(profile, tau0, rho0, rhodot0, &grid).expect("direct solve");

        for sol in [&via_u, &direct] {
            for i in 0..grid.len() {
                worst_rho = worst_rho.max((sol.rho[i] - reference.rho[i]).abs());
                worst_theta = worst_theta.max((sol.theta[i] - reference.theta[i]).abs());
            }
        }
    }
    let pass = worst_rho < 1e-6 && worst_theta < 1e-6;
    check(
        2,
        "auxiliary-consistency",
        pass,
        &format!("max |drho| {worst_rho:.3e}, max |dTheta| {worst_theta:.3e}, tolerance 1e-6"),
    );
}

#[test]
fn criterion_03_phase_integral_identity() {
    let mut worst: f64 = 0.0;
    let cases: [(&MassProfile, f64); 2] = [(&HYP, 0.2), (&QUAD, 0.0)];
    for (profile, tau0) in cases {
        let grid = linspace(tau0, 5.0, 20001);
        let sol = closed_form(profile, &grid).expect("closed form");
        let h = grid[1] - grid[0];
        for i in 1..grid.len() - 1 {
            let fd = (sol.theta[i + 1] - sol.theta[i - 1]) / (2.0 * h);
            let omega = 1.0 / (sol.rho[i] * sol.rho[i]);
            worst = worst.max((fd - omega).abs());
        }
    }
    let pass = worst < 1e-6;
    check(
        3,
        "phase-integral-identity",
        pass,
        &format!("max |dTheta/dtau - 1/rho^2| {worst:.3e}, tolerance 1e-6"),
    );
}

#[test]
fn criterion_04_invariant_conservation() {
    let grid_drift = HYP_RUN.invariant_drift.max(QUAD_RUN.invariant_drift);

    let mut analytic_drift: f64 = 0.0;
    let cases: [(&MassProfile, &ErmakovSolution, f64); 2] =
        [(&HYP, &HYP_SOL, 0.1), (&QUAD, &QUAD_SOL, 0.0)];
    for (profile, sol, tau0) in cases {
        let nseg = ((2.0 - tau0) / 0.05).round() as usize;
        let taus: Vec<f64> = (0..=nseg).map(|k| tau0 + k as f64 * 0.05).collect();
        let reports =
            propagate_series(profile, sol, &taus, &make_coherent(alpha_one())).expect("series");
        let i0 = reports[0].invariant;
        for rep in &reports {
            analytic_drift = analytic_drift.max(((rep.invariant - i0) / i0).abs());
        }
    }
    let pass = grid_drift < 1e-3 && analytic_drift < 1e-9;
    check(
        4,
        "invariant-conservation",
        pass,
        &format!("grid drift {grid_drift:.3e} (tol 1e-3), analytic drift {analytic_drift:.3e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_05_propagator_fidelity() {
    let mut worst = f64::INFINITY;
    let cases: [(&MassProfile, &ErmakovSolution, &TransformedRun); 2] =
        [(&HYP, &HYP_SOL, &HYP_RUN), (&QUAD, &QUAD_SOL, &QUAD_RUN)];
    for (profile, sol, run) in cases {
        for (tau, state) in &run.checkpoints {
            let rep =
                propagate(profile, sol, *tau, &make_coherent(alpha_one())).expect("propagate");
            let reference =
                sample_gaussian(&rep.state, GRID_N, run.length).expect("sample reference");
            let f = state.fidelity(&reference).expect("fidelity");
            worst = worst.min(f);
        }
    }
    let pass = worst >= 0.999;
    check(5, "propagator-fidelity", pass, &format!("min fidelity {worst:.12}, floor 0.999"));
}

#[test]
fn criterion_06_picture_equivalence() {
    let mut worst = f64::INFINITY;
    let cases: [(&MassProfile, &TransformedRun); 2] = [(&HYP, &HYP_RUN), (&QUAD, &QUAD_RUN)];
    for (profile, run) in cases {
        let psi0 =
            sample_gaussian(&make_coherent(alpha_one()), GRID_N, run.length).expect("sample");
        let mut original = psi0.apply_fourier_grid(GridFourierDirection::Forward).expect("F");
        let mut prev = run.tau0;
        for (tau, transformed) in &run.checkpoints {
            original = original.evolve_original(profile, prev, *tau, GRID_DT).expect("evolve");
            prev = *tau;
            let via_transformed =
                transformed.apply_fourier_grid(GridFourierDirection::Forward).expect("F");
            let f = original.fidelity(&via_transformed).expect("fidelity");
            worst = worst.min(f);
        }
    }
    let pass = worst >= 0.999;
    check(6, "picture-equivalence", pass, &format!("min fidelity {worst:.12}, floor 0.999"));
}

#[test]
fn criterion_07_bch_identity() {
    let reports64 = check_bch_grid(64).expect("bch grid dim 64");
    let worst64 = reports64.iter().map(|r| r.discrepancy).fold(0.0f64, f64::max);
    let all64 = reports64.iter().all(|r| r.pass);

    let reports128 = check_bch_grid(128).expect("bch grid dim 128");
    let worst128 = reports128.iter().map(|r| r.discrepancy).fold(0.0f64, f64::max);
    let stable = reports128.iter().all(|r| r.pass) && worst128 <= (10.0 * worst64).max(BCH_TOL);

    let pass = all64 && stable;
    check(
        7,
        "bch-identity",
        pass,
        &format!("16-point worst: dim=64 {worst64:.3e}, dim=128 {worst128:.3e}, tolerance 1e-6"),
    );
}

#[test]
fn criterion_08_invariant_similarity() {
    let reports = check_similarity_grid(64).expect("similarity grid");
    let worst = reports.iter().map(|r| r.discrepancy).fold(0.0f64, f64::max);
    let pass = reports.iter().all(|r| r.pass);
    check(
        8,
        "invariant-similarity",
        pass,
        &format!("16-point worst discrepancy {worst:.3e}, tolerance {SIMILARITY_TOL:.0e}"),
    );
}

#[test]
fn criterion_09_squeezing_at_critical_point() {
    struct BetaCase {
        beta: f64,
        span_end: f64,
        length: f64,
        dt: f64,
    }
    let cases = [
        BetaCase { beta: 1.0, span_end: 2.0, length: 24.0, dt: 1e-4 },
        BetaCase { beta: 0.5, span_end: 3.0, length: 40.0, dt: 1e-4 },
        BetaCase { beta: 0.2, span_end: 7.0, length: 80.0, dt: 2e-4 },
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for case in &cases {
        let profile = MassProfile::Hyperbolic { beta: case.beta };
        let tau0 = 0.1;
        let n = ((case.span_end - tau0) / 1e-3).round() as usize + 1;
        let sol = closed_form(&profile, &linspace(tau0, case.span_end, n)).expect("closed form");

        let points = find_critical_points(&sol);
        if points.is_empty() {
            pass = false;
            details.push(format!("beta={}: no critical point", case.beta));
            continue;
        }
        let (tau_p, rho_p) = points[0];
        let rhodot_p = profile.analytic_rhodot(tau_p).expect("analytic rhodot");

        // Invariant-matched squeezed-vacuum-free initial state: the Fourier
        // transform of |alpha>, pulled back through T at the start time.
        let (rho0, rhodot0, _) = sol.eval(tau0).expect("eval");
        let initial = make_coherent(alpha_one())
            .fourier_map(FourierDirection::Forward)
            .apply_t_dagger(rho0, rhodot0)
            .expect("initial state");

        let rep = propagate(&profile, &sol, tau_p, &initial).expect("propagate");
        let analytic_err = (rep.uncertainty - 0.5).abs();
        let r_err = (rep.r.abs() - rho_p.ln().abs()).abs();

        let psi = sample_gaussian(&initial, GRID_N, case.length)
            .expect("sample")
            .evolve_transformed(&profile, tau0, tau_p, case.dt)
            .expect("grid evolve");
        let grid_err = (psi.observables().expect("observables").uncertainty() - 0.5).abs();

        let ok = rhodot_p.abs() < 1e-8
            && analytic_err < 1e-4
            && grid_err < 1e-3
            && r_err < 1e-6;
        pass = pass && ok;
        details.push(format!(
            "beta={}: tau_p {tau_p:.6}, |rho_dot| {:.1e}, analytic {analytic_err:.1e}, grid {grid_err:.1e}, |r|-|ln rho_p| {r_err:.1e}",
            case.beta,
            rhodot_p.abs(),
        ));
    }
    check(9, "squeezing-at-critical-point", pass, &details.join("; "));
}

#[test]
fn criterion_10_quadratic_no_critical_points() {
    let mut pass = true;
    let mut min_rhodot = f64::INFINITY;
    for gamma in [1.0, 5.0, 10.0] {
        let profile = MassProfile::Quadratic { gamma };
        let sol = closed_form(&profile, &linspace(0.0, 10.0, 2001)).expect("closed form");
        let all_positive = sol.rho_dot.iter().all(|&rd| rd > 0.0);
        min_rhodot = sol.rho_dot.iter().fold(min_rhodot, |m, &rd| m.min(rd));
        let points = find_critical_points(&sol);
        pass = pass && all_positive && points.is_empty();
    }
    check(
        10,
        "quadratic-no-critical-points",
        pass,
        &format!("gamma in {{1,5,10}}, tau in [0,10]: min rho_dot {min_rhodot:.3}, no critical points"),
    );
}

#[test]
fn criterion_11_convergence_order() {
    // Strang splitting is second order in the wavefunction, so the
    // grid-vs-analytic state error sqrt(1 - F) drops by 4 when dt halves.
    // alpha = 2 keeps the error above the sampling floor.
    let profile = &*HYP;
    let tau0 = 0.1;
    let tau1 = 2.0;
    let length = 32.0;
    let alpha = Complex64::new(2.0, 0.0);
    let sol = closed_form(profile, &linspace(tau0, tau1, 1901)).expect("closed form");
    let rep = propagate(profile, &sol, tau1, &make_coherent(alpha)).expect("propagate");
    let reference = sample_gaussian(&rep.state, GRID_N, length).expect("sample reference");

    let mut errs = Vec::new();
    for dt in [1e-3, 5e-4] {
        let psi = sample_gaussian(&make_coherent(alpha), GRID_N, length)
            .expect("sample")
            .evolve_transformed(profile, tau0, tau1, dt)
            .expect("evolve");
        let f = psi.fidelity(&reference).expect("fidelity");
        errs.push((1.0 - f).max(0.0).sqrt());
    }
    let ratio = errs[0] / errs[1];
    let pass = (3.0..=5.0).contains(&ratio);
    check(
        11,
        "convergence-order",
        pass,
        &format!(
            "sqrt(1-F): dt=1e-3 {:.3e}, dt=5e-4 {:.3e}, ratio {ratio:.2} in 4 +/- 1",
            errs[0], errs[1]
        ),
    );
}
