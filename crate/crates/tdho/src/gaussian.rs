//! Symplectic propagation of pure Gaussian states.
//!
//! Every operator in the model — Fourier rotation, shear e^{ic q^2}, dilation
//! e^{-i(s/2)(qp+pq)}, invariant rotation e^{-i H0 Theta} — is quadratic, so
//! Gaussian states close under the dynamics and a state is fully described by
//! its mean vector (<q>, <p>) and 2x2 covariance matrix. The evolved state is
//!
//! ```text
//! |Psi(tau)> = T^dag(tau) R(Theta(tau) - Theta(tau0)) T(tau0) |Psi(tau0)>
//! ```
//!
//! with T^dag built from the Ermakov pair (rho, rho_dot) and R a phase-space
//! rotation. Global phase is not tracked; all comparisons use moments or
//! |overlap|^2.
//!
//! Sign conventions (dilation direction, rotation sense, Fourier branch) are
//! fixed once by the number-basis engine in [`crate::fock`] and frozen here;
//! a shared fixture test asserts the two layers agree.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::ermakov::ErmakovSolution;
use crate::error::{Error, Result};
use crate::par::maybe_par_map;
use crate::profiles::MassProfile;

/// Pure Gaussian state: means and covariance entries (hbar = 1 quadratures).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianState {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
}

/// Direction for [`GaussianState::fourier_map`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierDirection {
    Forward,
    Inverse,
}

/// Coherent state |alpha>: mean (sqrt2 Re alpha, sqrt2 Im alpha), isotropic
/// covariance diag(1/2, 1/2).
pub fn make_coherent(alpha: Complex64) -> GaussianState {
    let s = std::f64::consts::SQRT_2;
    GaussianState {
        mean_q: s * alpha.re,
        mean_p: s * alpha.im,
        var_q: 0.5,
        var_p: 0.5,
        cov_qp: 0.0,
    }
}

impl GaussianState {
    /// det of the covariance matrix; 1/4 for every pure Gaussian.
    pub fn cov_det(&self) -> f64 {
        self.var_q * self.var_p - self.cov_qp * self.cov_qp
    }

    /// Uncertainty product (Delta q)(Delta p) = sqrt(Var q * Var p).
    pub fn uncertainty(&self) -> f64 {
        (self.var_q * self.var_p).sqrt()
    }

    /// Check the purity constraint det Sigma = 1/4 and positivity.
    pub fn validate(&self) -> Result<()> {
        if self.var_q <= 0.0 || self.var_p <= 0.0 {
            return Err(Error::Domain("covariance must be positive definite".into()));
        }
        let det = self.cov_det();
        if (det - 0.25).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "state is not pure: det Sigma = {det}, expected 0.25"
            )));
        }
        Ok(())
    }

    /// Apply a linear phase-space map (q,p) -> (m11 q + m12 p, m21 q + m22 p)
    /// to the mean and as a congruence to the covariance.
    fn linear_map(&self, m: [[f64; 2]; 2]) -> GaussianState {
        let mean_q = m[0][0] * self.mean_q + m[0][1] * self.mean_p;
        let mean_p = m[1][0] * self.mean_q + m[1][1] * self.mean_p;
        // Sigma -> M Sigma M^T for Sigma = [[vq, c], [c, vp]].
        let (vq, vp, c) = (self.var_q, self.var_p, self.cov_qp);
        let r0 = [m[0][0] * vq + m[0][1] * c, m[0][0] * c + m[0][1] * vp];
        let r1 = [m[1][0] * vq + m[1][1] * c, m[1][0] * c + m[1][1] * vp];
        GaussianState {
            mean_q,
            mean_p,
            var_q: r0[0] * m[0][0] + r0[1] * m[0][1],
            var_p: r1[0] * m[1][0] + r1[1] * m[1][1],
            cov_qp: r0[0] * m[1][0] + r0[1] * m[1][1],
        }
    }

    /// Quarter-cycle rotation of the Fourier operator F = e^{-i pi/4 (p^2+q^2)}
    /// e^{i pi/4}: forward maps alpha -> -i alpha, i.e. (q,p) -> (p,-q);
    /// inverse is the transpose rotation.
    pub fn fourier_map(&self, direction: FourierDirection) -> GaussianState {
        match direction {
            FourierDirection::Forward => self.linear_map([[0.0, 1.0], [-1.0, 0.0]]),
            FourierDirection::Inverse => self.linear_map([[0.0, -1.0], [1.0, 0.0]]),
        }
    }

    /// Momentum shear of the multiplier e^{ic q^2}: (q,p) -> (q, p + 2c q).
    pub fn apply_shear(&self, c: f64) -> GaussianState {
        self.linear_map([[1.0, 0.0], [2.0 * c, 1.0]])
    }

    /// Scale map (q,p) -> (e^s q, e^{-s} p), the moment action of the
    /// dilation factor e^{-i(s/2)(qp+pq)}.
    pub fn apply_dilation(&self, s: f64) -> GaussianState {
        self.linear_map([[s.exp(), 0.0], [0.0, (-s).exp()]])
    }

    /// Phase-space rotation by `theta`: coherent alpha -> alpha e^{-i theta},
    /// i.e. (q,p) -> (q cos + p sin, -q sin + p cos).
    pub fn apply_rotation(&self, theta: f64) -> GaussianState {
        let (s, c) = theta.sin_cos();
        self.linear_map([[c, s], [-s, c]])
    }

    /// The squeeze unitary T^dag = e^{i(rho_dot/2rho) q^2} e^{-i(ln rho/2)(qp+pq)}:
    /// dilation by ln rho (q stretches by rho; at rho=2, rho_dot=0 the vacuum
    /// acquires Var q/Var p = rho^4 = 16, the orientation measured by the
    /// number-basis engine) followed by shear rho_dot/(2 rho).
    pub fn apply_t_dagger(&self, rho: f64, rho_dot: f64) -> Result<GaussianState> {
        if rho <= 0.0 {
            return Err(Error::Domain(format!("t_dagger needs rho > 0, got {rho}")));
        }
        Ok(self.apply_dilation(rho.ln()).apply_shear(rho_dot / (2.0 * rho)))
    }

    /// Inverse of [`Self::apply_t_dagger`] with the same parameters.
    pub fn apply_t(&self, rho: f64, rho_dot: f64) -> Result<GaussianState> {
        if rho <= 0.0 {
            return Err(Error::Domain(format!("t needs rho > 0, got {rho}")));
        }
        Ok(self.apply_shear(-rho_dot / (2.0 * rho)).apply_dilation(-rho.ln()))
    }

    /// Expectation of the invariant I = [q^2/rho^2 + (rho p - rho_dot q)^2]/2.
    pub fn invariant_expectation(&self, rho: f64, rho_dot: f64) -> f64 {
        let q2 = self.var_q + self.mean_q * self.mean_q;
        let p2 = self.var_p + self.mean_p * self.mean_p;
        let qp = self.cov_qp + self.mean_q * self.mean_p;
        0.5 * (q2 / (rho * rho) + rho * rho * p2 - 2.0 * rho * rho_dot * qp
            + rho_dot * rho_dot * q2)
    }

    /// Squeeze magnitude and principal-axis angle: r = ln(2 lambda_max)/2 with
    /// lambda_max the larger covariance eigenvalue, phi in [0, pi), phi = 0
    /// for the isotropic state.
    pub fn squeeze_params(&self) -> (f64, f64) {
        let half_tr = 0.5 * (self.var_q + self.var_p);
        let half_diff = 0.5 * (self.var_q - self.var_p);
        let disc = (half_diff * half_diff + self.cov_qp * self.cov_qp).sqrt();
        let lambda_max = half_tr + disc;
        let r = 0.5 * (2.0 * lambda_max).ln();
        if disc < 1e-14 {
            return (if r.abs() < 1e-12 { 0.0 } else { r }, 0.0);
        }
        let mut phi = 0.5 * (2.0 * self.cov_qp).atan2(self.var_q - self.var_p);
        if phi < 0.0 {
            phi += std::f64::consts::PI;
        }
        if phi >= std::f64::consts::PI {
            phi -= std::f64::consts::PI;
        }
        (r, phi)
    }
}

/// Per-time propagation output: the state plus derived scalars.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PropagationReport {
    pub tau: f64,
    pub state: GaussianState,
    /// Uncertainty product (Delta q)(Delta p).
    pub uncertainty: f64,
    /// Expectation of the invariant at this time's (rho, rho_dot).
    pub invariant: f64,
    /// Squeeze magnitude.
    pub r: f64,
    /// Squeeze principal-axis angle in [0, pi).
    pub phi: f64,
}

/// Evolve `initial` (the state at the Ermakov grid start) to time `tau`:
/// T(tau0) maps into the invariant frame, the frame rotates by the phase
/// difference Theta(tau), and T^dag(tau) maps back.
pub fn propagate(
    profile: &MassProfile,
    ermakov: &ErmakovSolution,
    tau: f64,
    initial: &GaussianState,
) -> Result<PropagationReport> {
    profile.validate()?;
    profile.eval_kappa_m(tau)?;
    initial.validate()?;
    let (rho0, rhodot0, _) = ermakov.eval(ermakov.tau[0])?;
    let (rho, rho_dot, theta) = ermakov.eval(tau)?;
    let state = initial
        .apply_t(rho0, rhodot0)?
        .apply_rotation(theta)
        .apply_t_dagger(rho, rho_dot)?;
    let (r, phi) = state.squeeze_params();
    Ok(PropagationReport {
        tau,
        state,
        uncertainty: state.uncertainty(),
        invariant: state.invariant_expectation(rho, rho_dot),
        r,
        phi,
    })
}

/// [`propagate`] over a whole grid of times. Samples are independent and are
/// evaluated on the rayon pool when the `parallel` feature is enabled.
pub fn propagate_series(
    profile: &MassProfile,
    ermakov: &ErmakovSolution,
    taus: &[f64],
    initial: &GaussianState,
) -> Result<Vec<PropagationReport>> {
    maybe_par_map(taus, |&tau| propagate(profile, ermakov, tau, initial))
        .into_iter()
        .collect()
}

/// Serialize a report series as CSV with columns
/// tau, mean_q, mean_p, var_q, var_p, cov_qp, uncertainty, invariant, r, phi
/// (17 significant digits).
pub fn write_report_csv<W: Write>(reports: &[PropagationReport], out: &mut W) -> Result<()> {
    writeln!(out, "tau,mean_q,mean_p,var_q,var_p,cov_qp,uncertainty,invariant,r,phi")?;
    for rep in reports {
        let s = &rep.state;
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            rep.tau,
            s.mean_q,
            s.mean_p,
            s.var_q,
            s.var_p,
            s.cov_qp,
            rep.uncertainty,
            rep.invariant,
            rep.r,
            rep.phi
        )?;
    }
    Ok(())
}
