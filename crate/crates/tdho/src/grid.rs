//! Brute-force split-step Schrödinger integrator on a uniform position grid.
//!
//! This layer knows nothing about the Ermakov machinery: it integrates
//! i d|psi>/dtau = H(tau)|psi> directly by second-order Strang splitting with
//! spectral (FFT) kinetic steps, in either picture:
//!
//! * transformed: H = [p^2 + q^2/(kappa*M(tau))]/2 (mass moved to the
//!   potential by the Fourier-operator picture change);
//! * original (rescaled time): H = [p^2/(kappa*M(tau)) + q^2]/2.
//!
//! The time-dependent coefficient is frozen at the step midpoint, which keeps
//! the splitting second order. The Fourier operator itself is realized as a
//! quarter period of the constant-mass oscillator (definitionally exact),
//! so the picture-change experiments use no analytic shortcut.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::profiles::MassProfile;

/// Complex amplitudes on the uniform grid q_j = -L/2 + j L/N, j = 0..N.
#[derive(Debug, Clone)]
pub struct GridWavefunction {
    n: usize,
    length: f64,
    pub psi: Vec<Complex64>,
}

/// Direction for [`GridWavefunction::apply_fourier_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFourierDirection {
    Forward,
    Inverse,
}

/// Largest allowed split step.
pub const MAX_DT: f64 = 1e-3;

/// Boundary-decay threshold: |psi| in the outermost cells must stay below
/// this for the state to count as resolved by the box.
pub const EDGE_TOL: f64 = 1e-8;

/// Number of split steps used to realize the Fourier operator as a quarter
/// period of the unit oscillator (step pi/2/4096, comfortably under MAX_DT;
/// measured moment error ~1e-8).
const FOURIER_STEPS: usize = 4096;

/// Moments of a grid state (computed by quadrature, p-moments spectrally).
#[derive(Debug, Clone, Copy)]
pub struct GridObservables {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
}

impl GridObservables {
    /// Expectation of the invariant, using the same moment formula as
    /// [`GaussianState::invariant_expectation`].
    pub fn invariant_expectation(&self, rho: f64, rho_dot: f64) -> f64 {
        GaussianState {
            mean_q: self.mean_q,
            mean_p: self.mean_p,
            var_q: self.var_q,
            var_p: self.var_p,
            cov_qp: self.cov_qp,
        }
        .invariant_expectation(rho, rho_dot)
    }

    /// Uncertainty product (Delta q)(Delta p).
    pub fn uncertainty(&self) -> f64 {
        (self.var_q * self.var_p).sqrt()
    }
}

/// Sample a pure Gaussian state onto the grid. The phase convention puts
/// zero phase at the mean: psi(q) = C exp(-a (q-q0)^2 + i p0 (q-q0)) with
/// a = 1/(4 Var q) - i Cov/(2 Var q), which reproduces all five moments.
pub fn sample_gaussian(state: &GaussianState, n: usize, length: f64) -> Result<GridWavefunction> {
    state.validate()?;
    if !n.is_power_of_two() || n < 16 {
        return Err(Error::Domain(format!("grid size must be a power of two >= 16, got {n}")));
    }
    if length <= 0.0 {
        return Err(Error::Domain(format!("grid length must be positive, got {length}")));
    }
    let a = Complex64::new(
        1.0 / (4.0 * state.var_q),
        -state.cov_qp / (2.0 * state.var_q),
    );
    let dq = length / n as f64;
    let mut psi = Vec::with_capacity(n);
    for j in 0..n {
        let q = -length / 2.0 + j as f64 * dq;
        let x = q - state.mean_q;
        let phase = Complex64::new(0.0, state.mean_p * x);
        psi.push((-a * x * x + phase).exp());
    }
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dq;
    let scale = 1.0 / norm.sqrt();
    for c in &mut psi {
        *c *= scale;
    }
    let wf = GridWavefunction { n, length, psi };
    wf.check_boundary(f64::NAN)?;
    Ok(wf)
}

impl GridWavefunction {
    /// Build from raw amplitudes (length must equal `n`, a power of two).
    pub fn from_amplitudes(n: usize, length: f64, psi: Vec<Complex64>) -> Result<Self> {
        if !n.is_power_of_two() || psi.len() != n {
            return Err(Error::GridMismatch(format!(
                "need a power-of-two grid with matching amplitude count, got n={n}, len={}",
                psi.len()
            )));
        }
        if length <= 0.0 {
            return Err(Error::Domain(format!("grid length must be positive, got {length}")));
        }
        Ok(GridWavefunction { n, length, psi })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dq(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Position of grid cell `j`.
    pub fn q_at(&self, j: usize) -> f64 {
        -self.length / 2.0 + j as f64 * self.dq()
    }

    /// Total probability sum |psi|^2 dq.
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dq()
    }

    fn check_boundary(&self, tau: f64) -> Result<()> {
        let edge = self.psi[0].norm().max(self.psi[self.n - 1].norm());
        if edge >= EDGE_TOL {
            return Err(Error::Resolution { tau, amplitude: edge });
        }
        Ok(())
    }

    /// Evolve under the transformed-picture Hamiltonian
    /// H = [p^2 + q^2/(kappa*M(tau))]/2 from `tau_start` to `tau_end`.
    pub fn evolve_transformed(
        &self,
        profile: &MassProfile,
        tau_start: f64,
        tau_end: f64,
        dt: f64,
    ) -> Result<GridWavefunction> {
        self.evolve_split(tau_start, tau_end, dt, |tau| {
            let km = profile.eval_kappa_m(tau)?;
            Ok((1.0, 1.0 / km))
        })
    }

    /// Evolve under the original-picture Hamiltonian (rescaled time)
    /// H = [p^2/(kappa*M(tau)) + q^2]/2.
    pub fn evolve_original(
        &self,
        profile: &MassProfile,
        tau_start: f64,
        tau_end: f64,
        dt: f64,
    ) -> Result<GridWavefunction> {
        self.evolve_split(tau_start, tau_end, dt, |tau| {
            let km = profile.eval_kappa_m(tau)?;
            Ok((1.0 / km, 1.0))
        })
    }

    /// Strang stepping with per-step (kinetic, potential) coefficients drawn
    /// from `coeffs` at the step midpoint: V(dt/2) K(dt) V(dt/2).
    fn evolve_split(
        &self,
        tau_start: f64,
        tau_end: f64,
        dt: f64,
        coeffs: impl Fn(f64) -> Result<(f64, f64)>,
    ) -> Result<GridWavefunction> {
        if dt <= 0.0 || dt > MAX_DT * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("split step needs 0 < dt <= {MAX_DT}, got {dt}")));
        }
        if tau_end < tau_start {
            return Err(Error::Domain(format!(
                "evolution runs forward only ({tau_start} to {tau_end})"
            )));
        }
        let span = tau_end - tau_start;
        let mut out = self.clone();
        if span == 0.0 {
            return Ok(out);
        }
        let nsteps = ((span / dt).round() as usize).max(1);
        let h = span / nsteps as f64;

        let n = self.n;
        let q2: Vec<f64> = (0..n).map(|j| self.q_at(j).powi(2)).collect();
        // FFT wavenumbers 2*pi*j/L with the upper half wrapped negative.
        let k2: Vec<f64> = (0..n)
            .map(|j| {
                let jj = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                (2.0 * std::f64::consts::PI * jj / self.length).powi(2)
            })
            .collect();

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let fft_scale = 1.0 / n as f64;

        let mut vphase = vec![Complex64::new(1.0, 0.0); n];
        let mut kphase = vec![Complex64::new(1.0, 0.0); n];
        for step in 0..nsteps {
            let tau_mid = tau_start + (step as f64 + 0.5) * h;
            let (ck, cv) = coeffs(tau_mid)?;
            for (j, (vp, kp)) in vphase.iter_mut().zip(kphase.iter_mut()).enumerate() {
                *vp = Complex64::from_polar(1.0, -cv * q2[j] * h / 4.0);
                *kp = Complex64::from_polar(1.0, -ck * k2[j] * h / 2.0);
            }
            for (p, vp) in out.psi.iter_mut().zip(&vphase) {
                *p *= vp;
            }
            fwd.process(&mut out.psi);
            for (p, kp) in out.psi.iter_mut().zip(&kphase) {
                *p *= kp;
            }
            inv.process(&mut out.psi);
            for (p, vp) in out.psi.iter_mut().zip(&vphase) {
                *p *= fft_scale * vp;
            }
            out.check_boundary(tau_start + (step as f64 + 1.0) * h)?;
        }
        Ok(out)
    }

    /// The Fourier operator F = e^{-i pi/4 (p^2+q^2)} e^{i pi/4}, realized as
    /// a quarter period of the constant unit-mass oscillator. The inverse
    /// uses the conjugation identity U^{-1} psi = conj(U conj(psi)), exact
    /// for the splitting because the generator is real in position space.
    pub fn apply_fourier_grid(&self, direction: GridFourierDirection) -> Result<GridWavefunction> {
        let quarter = std::f64::consts::FRAC_PI_2;
        let dt = quarter / FOURIER_STEPS as f64;
        let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        match direction {
            GridFourierDirection::Forward => {
                let mut out = self.evolve_split(0.0, quarter, dt, |_| Ok((1.0, 1.0)))?;
                for c in &mut out.psi {
                    *c *= phase;
                }
                Ok(out)
            }
            GridFourierDirection::Inverse => {
                let mut conj = self.clone();
                for c in &mut conj.psi {
                    *c = c.conj();
                }
                let mut out = conj.evolve_split(0.0, quarter, dt, |_| Ok((1.0, 1.0)))?;
                let phase_inv = phase.conj();
                for c in &mut out.psi {
                    *c = c.conj() * phase_inv;
                }
                Ok(out)
            }
        }
    }

    /// Moments by quadrature; p-moments and the q-p covariance use spectral
    /// differentiation, so they are accurate to the grid's spectral floor.
    pub fn observables(&self) -> Result<GridObservables> {
        self.check_boundary(f64::NAN)?;
        let n = self.n;
        let dq = self.dq();
        let norm = self.norm();
        if norm <= 0.0 {
            return Err(Error::Domain("cannot take moments of a null state".into()));
        }

        let mut mean_q = 0.0;
        for j in 0..n {
            mean_q += self.q_at(j) * self.psi[j].norm_sqr();
        }
        mean_q = mean_q * dq / norm;
        let mut var_q = 0.0;
        for j in 0..n {
            let x = self.q_at(j) - mean_q;
            var_q += x * x * self.psi[j].norm_sqr();
        }
        var_q = var_q * dq / norm;

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut phi = self.psi.clone();
        fwd.process(&mut phi);
        let k_at = |j: usize| {
            let jj = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            2.0 * std::f64::consts::PI * jj / self.length
        };
        let wsum: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
        let mean_p: f64 = (0..n).map(|j| k_at(j) * phi[j].norm_sqr()).sum::<f64>() / wsum;
        let var_p: f64 =
            (0..n).map(|j| (k_at(j) - mean_p).powi(2) * phi[j].norm_sqr()).sum::<f64>() / wsum;

        // Spectral derivative for Cov = Im integral (q - <q>) psi* psi' dq.
        let mut dpsi = phi;
        for (j, c) in dpsi.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, k_at(j));
        }
        inv.process(&mut dpsi);
        let fft_scale = 1.0 / n as f64;
        let mut cov = 0.0;
        for (j, (pj, dj)) in self.psi.iter().zip(&dpsi).enumerate() {
            let x = self.q_at(j) - mean_q;
            cov += (pj.conj() * dj * fft_scale).im * x;
        }
        cov = cov * dq / norm;

        Ok(GridObservables { mean_q, mean_p, var_q, var_p, cov_qp: cov })
    }

    /// |overlap|^2 with another state on the same grid, insensitive to global
    /// phase and to the normalization of either state.
    pub fn fidelity(&self, other: &GridWavefunction) -> Result<f64> {
        if self.n != other.n || (self.length - other.length).abs() > 1e-12 {
            return Err(Error::GridMismatch(format!(
                "grids differ: ({}, {}) vs ({}, {})",
                self.n, self.length, other.n, other.length
            )));
        }
        let dq = self.dq();
        let mut overlap = Complex64::new(0.0, 0.0);
        for j in 0..self.n {
            overlap += self.psi[j].conj() * other.psi[j];
        }
        let ov2 = (overlap * dq).norm_sqr();
        Ok(ov2 / (self.norm() * other.norm()))
    }

    /// Write a position-space snapshot as CSV with columns
    /// q, re_psi, im_psi, abs2 (17 significant digits).
    pub fn write_snapshot_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "q,re_psi,im_psi,abs2")?;
        for j in 0..self.n {
            let c = self.psi[j];
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.q_at(j),
                c.re,
                c.im,
                c.norm_sqr()
            )?;
        }
        Ok(())
    }
}
