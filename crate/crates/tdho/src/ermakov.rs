//! Ermakov auxiliary dynamics: the linear equation for u, the nonlinear
//! Ermakov equation for rho, the accumulated phase Theta, and critical points.
//!
//! The Ermakov function rho solves rho'' + rho/(kappa*M) = 1/rho^3 and
//! parametrizes the quadratic invariant I = [q^2/rho^2 + (rho p - rho' q)^2]/2.
//! It can be built three ways, which must agree: from the closed forms of the
//! analytic profiles, from the linear auxiliary u via rho = u sqrt(1 + S^2)
//! with S' = 1/u^2, or by direct integration of the nonlinear equation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::ode::integrate_to;
use crate::profiles::MassProfile;

/// How an [`ErmakovSolution`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    ClosedForm,
    FromU,
    DirectOde,
}

/// Sampled Ermakov data on a strictly increasing time grid.
///
/// `theta` is the accumulated phase integral of 1/rho^2 measured from the
/// first grid point, so `theta[0] == 0`; propagation only ever consumes
/// phase differences, so the choice of origin is free.
#[derive(Debug, Clone)]
pub struct ErmakovSolution {
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_dot: Vec<f64>,
    pub theta: Vec<f64>,
    pub source: Source,
}

/// Tolerance to which critical points are refined: |rho_dot| at the reported
/// tau_p is below this.
pub const CRITICAL_POINT_TOL: f64 = 1e-8;

/// Local error tolerance for the adaptive integrations in this module.
const ODE_TOL: f64 = 1e-10;

/// Uniformly spaced grid of `n >= 2` points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect()
}

fn check_grid(tau: &[f64]) -> Result<()> {
    if tau.len() < 2 {
        return Err(Error::Domain("time grid needs at least two samples".into()));
    }
    for w in tau.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Domain(format!(
                "time grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Evaluate the closed-form rho, rho_dot and Theta of an analytic profile on
/// a grid. Fails for tabulated profiles, which have no closed form.
pub fn closed_form(profile: &MassProfile, tau_grid: &[f64]) -> Result<ErmakovSolution> {
    check_grid(tau_grid)?;
    profile.validate()?;
    let unavailable =
        || Error::Domain("profile has no closed-form Ermakov solution".to_string());
    let theta0 = profile.analytic_theta(tau_grid[0]).ok_or_else(unavailable)?;
    let mut rho = Vec::with_capacity(tau_grid.len());
    let mut rho_dot = Vec::with_capacity(tau_grid.len());
    let mut theta = Vec::with_capacity(tau_grid.len());
    for &t in tau_grid {
        if t < 0.0 {
            return Err(Error::Domain(format!("closed forms are defined for tau >= 0, got {t}")));
        }
        rho.push(profile.analytic_rho(t).ok_or_else(unavailable)?);
        rho_dot.push(profile.analytic_rhodot(t).ok_or_else(unavailable)?);
        theta.push(profile.analytic_theta(t).ok_or_else(unavailable)? - theta0);
    }
    Ok(ErmakovSolution {
        tau: tau_grid.to_vec(),
        rho,
        rho_dot,
        theta,
        source: Source::ClosedForm,
    })
}

/// Integrate the linear auxiliary equation u'' + u/(kappa*M) = 0 from
/// (u0, udot0) at tau0 = tau_grid[0], returning (u, u_dot) samples.
pub fn solve_u(
    profile: &MassProfile,
    tau0: f64,
    u0: f64,
    udot0: f64,
    tau_grid: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_grid(tau_grid)?;
    profile.validate()?;
    if (tau_grid[0] - tau0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "tau_grid must start at tau0 = {tau0}, got {}",
            tau_grid[0]
        )));
    }
    let rhs = |t: f64, y: &[f64; 2]| -> Result<[f64; 2]> {
        let km = profile.eval_kappa_m(t)?;
        Ok([y[1], -y[0] / km])
    };
    let states = integrate_to(rhs, tau0, [u0, udot0], &tau_grid[1..], ODE_TOL)?;
    let mut u = Vec::with_capacity(tau_grid.len());
    let mut u_dot = Vec::with_capacity(tau_grid.len());
    u.push(u0);
    u_dot.push(udot0);
    for s in states {
        u.push(s[0]);
        u_dot.push(s[1]);
    }
    Ok((u, u_dot))
}

/// Build the Ermakov solution from auxiliary samples via rho = u sqrt(1+S^2),
/// S(tau) = s0 + integral of 1/u^2 from the grid start.
///
/// The integral uses corrected-trapezoid (two-point Hermite) quadrature with
/// the exact integrand derivative d(1/u^2)/dtau = -2 u_dot / u^3, matching
/// the accuracy of the ODE samples. rho_dot and Theta follow from
/// rho_dot = u_dot sqrt(1+S^2) + S/(u sqrt(1+S^2)) and
/// Theta = arctan S - arctan s0.
pub fn rho_from_u(
    tau_grid: &[f64],
    u: &[f64],
    u_dot: &[f64],
    s0: f64,
) -> Result<ErmakovSolution> {
    check_grid(tau_grid)?;
    if u.len() != tau_grid.len() || u_dot.len() != tau_grid.len() {
        return Err(Error::GridMismatch(format!(
            "u ({}), u_dot ({}) and tau ({}) lengths differ",
            u.len(),
            u_dot.len(),
            tau_grid.len()
        )));
    }
    if let Some(i) = (0..u.len()).find(|&i| u[i] == 0.0 || (i > 0 && u[i] * u[i - 1] < 0.0)) {
        return Err(Error::Singular {
            tau: tau_grid[i],
            what: "auxiliary u crosses zero; 1/u^2 is not integrable".into(),
        });
    }

    let n = tau_grid.len();
    let mut s = Vec::with_capacity(n);
    s.push(s0);
    for i in 1..n {
        let h = tau_grid[i] - tau_grid[i - 1];
        let (fa, fb) = (1.0 / (u[i - 1] * u[i - 1]), 1.0 / (u[i] * u[i]));
        let (da, db) = (
            -2.0 * u_dot[i - 1] / u[i - 1].powi(3),
            -2.0 * u_dot[i] / u[i].powi(3),
        );
        let seg = 0.5 * h * (fa + fb) + h * h / 12.0 * (da - db);
        s.push(s[i - 1] + seg);
    }

    let mut rho = Vec::with_capacity(n);
    let mut rho_dot = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let at0 = s0.atan();
    for i in 0..n {
        let root = (1.0 + s[i] * s[i]).sqrt();
        let r = u[i].abs() * root;
        rho.push(r);
        rho_dot.push(u_dot[i] * u[i].signum() * root + s[i] / (u[i].abs() * root));
        theta.push(s[i].atan() - at0);
    }
    Ok(ErmakovSolution { tau: tau_grid.to_vec(), rho, rho_dot, theta, source: Source::FromU })
}

/// Integrate the nonlinear Ermakov equation rho'' + rho/(kappa*M) = 1/rho^3
/// directly from (rho0, rhodot0), accumulating Theta' = 1/rho^2 alongside.
pub fn solve_ermakov_direct(
    profile: &MassProfile,
    tau0: f64,
    rho0: f64,
    rhodot0: f64,
    tau_grid: &[f64],
) -> Result<ErmakovSolution> {
    check_grid(tau_grid)?;
    profile.validate()?;
    if rho0 <= 0.0 {
        return Err(Error::Domain(format!("Ermakov initial rho must be positive, got {rho0}")));
    }
    if (tau_grid[0] - tau0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "tau_grid must start at tau0 = {tau0}, got {}",
            tau_grid[0]
        )));
    }
    let rhs = |t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let r = y[0];
        if r < 1e-8 {
            return Err(Error::Singular {
                tau: t,
                what: format!("rho collapsed to {r}; 1/rho^3 blows up"),
            });
        }
        let km = profile.eval_kappa_m(t)?;
        Ok([y[1], 1.0 / (r * r * r) - r / km, 1.0 / (r * r)])
    };
    let states = integrate_to(rhs, tau0, [rho0, rhodot0, 0.0], &tau_grid[1..], ODE_TOL)?;
    let mut rho = vec![rho0];
    let mut rho_dot = vec![rhodot0];
    let mut theta = vec![0.0];
    for s in states {
        rho.push(s[0]);
        rho_dot.push(s[1]);
        theta.push(s[2]);
    }
    Ok(ErmakovSolution {
        tau: tau_grid.to_vec(),
        rho,
        rho_dot,
        theta,
        source: Source::DirectOde,
    })
}

/// Maximum Ermakov-equation residual |rho'' + rho/(kappa*M) - 1/rho^3| over
/// interior samples, with rho'' from 4th-order central differences.
/// Requires a uniform grid (the stencil assumes one) with >= 5 samples.
pub fn ermakov_residual(solution: &ErmakovSolution, profile: &MassProfile) -> Result<f64> {
    let (tau, rho) = (&solution.tau, &solution.rho);
    let n = tau.len();
    if n < 5 {
        return Err(Error::Domain("residual stencil needs at least 5 samples".into()));
    }
    let h = tau[1] - tau[0];
    for w in tau.windows(2) {
        if ((w[1] - w[0]) / h - 1.0).abs() > 1e-8 {
            return Err(Error::GridMismatch(
                "residual evaluation requires a uniform time grid".into(),
            ));
        }
    }
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let dd = (-rho[i + 2] + 16.0 * rho[i + 1] - 30.0 * rho[i] + 16.0 * rho[i - 1]
            - rho[i - 2])
            / (12.0 * h * h);
        let km = profile.eval_kappa_m(tau[i])?;
        let res = dd + rho[i] / km - 1.0 / rho[i].powi(3);
        worst = worst.max(res.abs());
    }
    Ok(worst)
}

/// Locate the times tau_p where rho_dot crosses zero, refined by bisection on
/// the interpolant until |rho_dot| < [`CRITICAL_POINT_TOL`]. Returns
/// (tau_p, rho(tau_p)) pairs in increasing order. Plateaus where rho_dot
/// vanishes identically over consecutive samples are not critical points.
pub fn find_critical_points(solution: &ErmakovSolution) -> Vec<(f64, f64)> {
    let n = solution.tau.len();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        let (a, b) = (solution.rho_dot[i], solution.rho_dot[i + 1]);
        if a == 0.0 {
            // A node-exact zero counts only if it is an isolated sign change.
            let before = if i > 0 { solution.rho_dot[i - 1] } else { 0.0 };
            if before * b < 0.0 {
                out.push((solution.tau[i], solution.rho[i]));
            }
            continue;
        }
        if a * b < 0.0 {
            let (mut lo, mut hi) = (solution.tau[i], solution.tau[i + 1]);
            let mut flo = a;
            let mut mid = 0.5 * (lo + hi);
            for _ in 0..200 {
                mid = 0.5 * (lo + hi);
                let fm = solution.eval(mid).map(|(_, rd, _)| rd).unwrap_or(f64::NAN);
                if !fm.is_finite() || fm.abs() < CRITICAL_POINT_TOL {
                    break;
                }
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            if let Ok((r, _, _)) = solution.eval(mid) {
                out.push((mid, r));
            }
        }
    }
    out
}

impl ErmakovSolution {
    /// Interpolate (rho, rho_dot, theta) at `tau` inside the grid range.
    ///
    /// rho uses the cubic Hermite interpolant built from the stored values
    /// and slopes (exact at nodes); rho_dot is that cubic's derivative; theta
    /// uses Hermite interpolation with its known slope 1/rho^2.
    pub fn eval(&self, tau: f64) -> Result<(f64, f64, f64)> {
        let t0 = self.tau[0];
        let t1 = self.tau[self.tau.len() - 1];
        if tau < t0 || tau > t1 {
            return Err(Error::Domain(format!("tau = {tau} outside solution range [{t0}, {t1}]")));
        }
        // Largest index with tau[lo] <= tau.
        let mut lo = 0;
        let mut hi = self.tau.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.tau[mid] <= tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if tau == self.tau[lo] {
            return Ok((self.rho[lo], self.rho_dot[lo], self.theta[lo]));
        }
        if tau == self.tau[hi] {
            return Ok((self.rho[hi], self.rho_dot[hi], self.theta[hi]));
        }

        let h = self.tau[hi] - self.tau[lo];
        let t = (tau - self.tau[lo]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let hermite = |y0: f64, m0: f64, y1: f64, m1: f64| {
            h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
        };

        let rho = hermite(self.rho[lo], self.rho_dot[lo], self.rho[hi], self.rho_dot[hi]);
        // Derivative of the same cubic.
        let rho_dot = (6.0 * t2 - 6.0 * t) * (self.rho[lo] - self.rho[hi]) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * self.rho_dot[lo]
            + (3.0 * t2 - 2.0 * t) * self.rho_dot[hi];
        let theta = hermite(
            self.theta[lo],
            1.0 / (self.rho[lo] * self.rho[lo]),
            self.theta[hi],
            1.0 / (self.rho[hi] * self.rho[hi]),
        );
        Ok((rho, rho_dot, theta))
    }

    /// Serialize as CSV with columns tau, rho, rho_dot, theta, kappa_m
    /// (17 significant digits, one row per sample).
    pub fn write_csv<W: Write>(&self, profile: &MassProfile, out: &mut W) -> Result<()> {
        writeln!(out, "tau,rho,rho_dot,theta,kappa_m")?;
        for i in 0..self.tau.len() {
            let km = profile.eval_kappa_m(self.tau[i])?;
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.tau[i], self.rho[i], self.rho_dot[i], self.theta[i], km
            )?;
        }
        Ok(())
    }
}
