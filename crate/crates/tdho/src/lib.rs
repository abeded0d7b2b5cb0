//! Quantum harmonic oscillator with time-dependent mass.
//!
//! The Hamiltonian H = p^2/(2 M(t)) + kappa q^2 / 2 (hbar = 1) maps, after a
//! Fourier transform of the state and a rescaled time tau, onto an oscillator
//! whose *frequency* varies while the kinetic term stays clean:
//!
//!   i dPsi/dtau = 1/2 [ p^2 + q^2 / (kappa M(tau)) ] Psi.
//!
//! That equation is solved exactly by an Ermakov-Lewis construction: with
//! rho(tau) solving rho'' + rho/(kappa M) = 1/rho^3, the propagator factors
//! into a shear e^{-i(rho'/2rho) q^2}, a dilation e^{i(ln rho/2)(qp+pq)} and a
//! rotation by the collective phase Theta(tau) = integral of 1/rho^2.
//!
//! The crate layers that construction and two independent brute-force
//! engines against each other:
//!
//! - [`profiles`]: mass profiles kappa M(tau), with closed-form Ermakov data
//!   for the hyperbolic and quadratic families.
//! - [`ermakov`]: the invariant machinery — linear-equation route, direct
//!   nonlinear integration, residual and critical-point analysis.
//! - [`gaussian`]: exact second-moment propagation of Gaussian states through
//!   the factored propagator; squeezing diagnostics.
//! - [`grid`]: a split-step Fourier integrator for the same dynamics on a
//!   position grid, including the Fourier-operator picture map.
//! - [`fock`]: a truncated number-basis operator engine that verifies the
//!   BCH factorization and the invariant similarity as operator identities.
//! - [`ode`]: the embedded Runge-Kutta integrator shared by the above.
//!
//! The parallel feature (`parallel`, on by default) runs independent
//! time-samples and verification columns through rayon; disabling it yields
//! the same results sequentially.

pub mod error;
pub mod ermakov;
pub mod fock;
pub mod gaussian;
pub mod grid;
pub mod ode;
pub(crate) mod par;
pub mod profiles;

pub use error::{Error, Result};
pub use ermakov::{linspace, ErmakovSolution};
pub use gaussian::{make_coherent, FourierDirection, GaussianState, PropagationReport};
pub use grid::GridWavefunction;
pub use profiles::MassProfile;
