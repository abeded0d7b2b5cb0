//! Time-dependent mass profiles kappa*M(tau) and their closed-form auxiliaries.
//!
//! The oscillator Hamiltonian is H = (p^2/M(t) + kappa q^2)/2 with hbar = 1 and
//! time rescaled as tau = kappa t, so the dynamics depend on mass and stiffness
//! only through the dimensionless product kappa*M(tau). Two families have full
//! closed-form solutions of the auxiliary linear equation u'' + u/(kappa*M) = 0:
//!
//! * hyperbolic: kappa*M = cosh^2(beta*tau) / (2 beta^2), with u = tanh(beta*tau);
//! * quadratic:  kappa*M = (gamma + 2 tau)^2, with u = sqrt(gamma + 2 tau).
//!
//! From u the Ermakov function is rho = u sqrt(1 + S^2) with S' = 1/u^2, and the
//! accumulated phase is Theta = arctan S (up to the integration constant fixed
//! here so that Theta(0) = 0).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive mass profile kappa*M(tau), either analytic or tabulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MassProfile {
    /// kappa*M(tau) = cosh^2(beta*tau) / (2 beta^2), beta > 0.
    Hyperbolic { beta: f64 },
    /// kappa*M(tau) = (gamma + 2 tau)^2, gamma > 0.
    Quadratic { gamma: f64 },
    /// Sampled (tau, kappa*M) pairs, strictly increasing in tau, interpolated
    /// by a monotone cubic so that positivity of the samples is preserved.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl MassProfile {
    /// Check the parameter-domain invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            MassProfile::Hyperbolic { beta } if *beta > 0.0 => Ok(()),
            MassProfile::Hyperbolic { beta } => {
                Err(Error::Domain(format!("hyperbolic profile needs beta > 0, got {beta}")))
            }
            MassProfile::Quadratic { gamma } if *gamma > 0.0 => Ok(()),
            MassProfile::Quadratic { gamma } => {
                Err(Error::Domain(format!("quadratic profile needs gamma > 0, got {gamma}")))
            }
            MassProfile::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::Domain("tabulated profile needs >= 2 samples".into()));
                }
                for w in samples.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::Domain(format!(
                            "tabulated tau values must be strictly increasing ({} then {})",
                            w[0].0, w[1].0
                        )));
                    }
                }
                if let Some((tau, km)) = samples.iter().find(|(_, km)| *km <= 0.0) {
                    return Err(Error::Domain(format!(
                        "tabulated kappa_m must be positive, got {km} at tau = {tau}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Evaluate kappa*M(tau).
    pub fn eval_kappa_m(&self, tau: f64) -> Result<f64> {
        match self {
            MassProfile::Hyperbolic { beta } => {
                if tau < 0.0 {
                    return Err(Error::Domain(format!("hyperbolic profile needs tau >= 0, got {tau}")));
                }
                let c = (beta * tau).cosh();
                Ok(c * c / (2.0 * beta * beta))
            }
            MassProfile::Quadratic { gamma } => {
                if tau < 0.0 {
                    return Err(Error::Domain(format!("quadratic profile needs tau >= 0, got {tau}")));
                }
                let g = gamma + 2.0 * tau;
                Ok(g * g)
            }
            MassProfile::Tabulated { samples } => {
                let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
                if tau < first || tau > last {
                    return Err(Error::Domain(format!(
                        "tau = {tau} outside tabulated range [{first}, {last}]"
                    )));
                }
                Ok(pchip_eval(samples, tau))
            }
        }
    }

    /// Closed-form auxiliary u(tau), if the profile has one.
    pub fn analytic_u(&self, tau: f64) -> Option<f64> {
        match self {
            MassProfile::Hyperbolic { beta } => Some((beta * tau).tanh()),
            MassProfile::Quadratic { gamma } => Some((gamma + 2.0 * tau).sqrt()),
            MassProfile::Tabulated { .. } => None,
        }
    }

    /// Closed-form du/dtau, if available.
    pub fn analytic_udot(&self, tau: f64) -> Option<f64> {
        match self {
            MassProfile::Hyperbolic { beta } => {
                let c = (beta * tau).cosh();
                Some(beta / (c * c))
            }
            MassProfile::Quadratic { gamma } => Some(1.0 / (gamma + 2.0 * tau).sqrt()),
            MassProfile::Tabulated { .. } => None,
        }
    }

    /// Closed-form S(tau) = integral of 1/u^2 with the antiderivative chosen by
    /// matching the closed-form rho expressions:
    /// hyperbolic S = tau - coth(beta*tau)/beta, quadratic S = ln(gamma + 2 tau)/2.
    pub fn analytic_s(&self, tau: f64) -> Option<f64> {
        match self {
            MassProfile::Hyperbolic { beta } => Some(tau - 1.0 / (beta * (beta * tau).tanh())),
            MassProfile::Quadratic { gamma } => Some(0.5 * (gamma + 2.0 * tau).ln()),
            MassProfile::Tabulated { .. } => None,
        }
    }

    /// Closed-form Ermakov function rho = u sqrt(1 + S^2). The hyperbolic
    /// expression has a removable singularity at tau = 0 with limit 1/beta.
    pub fn analytic_rho(&self, tau: f64) -> Option<f64> {
        match self {
            MassProfile::Hyperbolic { beta } => {
                if tau == 0.0 {
                    return Some(1.0 / beta);
                }
                let u = (beta * tau).tanh();
                let s = tau - 1.0 / (beta * u);
                Some(u * (1.0 + s * s).sqrt())
            }
            MassProfile::Quadratic { gamma } => {
                let g = gamma + 2.0 * tau;
                let l = 0.5 * g.ln();
                Some((g * (1.0 + l * l)).sqrt())
            }
            MassProfile::Tabulated { .. } => None,
        }
    }

    /// Closed-form drho/dtau = (u u' (1 + S^2) + S) / rho; limit 0 at tau = 0
    /// for the hyperbolic profile.
    pub fn analytic_rhodot(&self, tau: f64) -> Option<f64> {
        if let MassProfile::Hyperbolic { .. } = self {
            if tau == 0.0 {
                return Some(0.0);
            }
        }
        let (u, ud, s, rho) = (
            self.analytic_u(tau)?,
            self.analytic_udot(tau)?,
            self.analytic_s(tau)?,
            self.analytic_rho(tau)?,
        );
        Some((u * ud * (1.0 + s * s) + s) / rho)
    }

    /// Closed-form accumulated phase Theta(tau) = integral of 1/rho^2 from 0,
    /// i.e. arctan S(tau) - arctan S(0+). For the hyperbolic profile
    /// S(0+) = -infinity, so Theta = arctan S + pi/2.
    pub fn analytic_theta(&self, tau: f64) -> Option<f64> {
        match self {
            MassProfile::Hyperbolic { .. } => {
                if tau == 0.0 {
                    return Some(0.0);
                }
                Some(self.analytic_s(tau)?.atan() + std::f64::consts::FRAC_PI_2)
            }
            MassProfile::Quadratic { gamma } => {
                Some(self.analytic_s(tau)?.atan() - (0.5 * gamma.ln()).atan())
            }
            MassProfile::Tabulated { .. } => None,
        }
    }

    /// True if the closed-form auxiliaries above are available.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self, MassProfile::Tabulated { .. })
    }
}

/// Monotone cubic (Fritsch–Carlson) interpolation of tabulated samples.
/// Node values are reproduced exactly; between nodes the interpolant stays
/// within the data range, so positive samples give a positive profile.
fn pchip_eval(samples: &[(f64, f64)], tau: f64) -> f64 {
    let n = samples.len();
    // Locate the interval; exact node hits return the stored value bit-for-bit.
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if samples[mid].0 <= tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if tau == samples[lo].0 {
        return samples[lo].1;
    }
    if tau == samples[hi].0 {
        return samples[hi].1;
    }

    let slope = pchip_slopes(samples);
    let (x0, y0) = samples[lo];
    let (x1, y1) = samples[hi];
    let h = x1 - x0;
    let t = (tau - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * slope[lo] + h01 * y1 + h11 * h * slope[hi]
}

/// Fritsch–Carlson limited slopes: harmonic mean of adjacent secants where the
/// data is monotone, zero at local extrema of the data.
fn pchip_slopes(samples: &[(f64, f64)]) -> Vec<f64> {
    let n = samples.len();
    let mut d = vec![0.0; n - 1];
    for i in 0..n - 1 {
        d[i] = (samples[i + 1].1 - samples[i].1) / (samples[i + 1].0 - samples[i].0);
    }
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let h0 = samples[i].0 - samples[i - 1].0;
            let h1 = samples[i + 1].0 - samples[i].0;
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hyp(beta: f64) -> MassProfile {
        MassProfile::Hyperbolic { beta }
    }
    fn quad(gamma: f64) -> MassProfile {
        MassProfile::Quadratic { gamma }
    }

    #[test]
    fn kappa_m_closed_forms() {
        assert_abs_diff_eq!(hyp(1.0).eval_kappa_m(0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(quad(1.0).eval_kappa_m(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(hyp(0.5).eval_kappa_m(2.0).unwrap(), 4.76220, epsilon = 1e-5);
    }

    #[test]
    fn analytic_u_values() {
        assert_abs_diff_eq!(hyp(1.0).analytic_u(1.0).unwrap(), 0.761594, epsilon = 1e-6);
        assert_abs_diff_eq!(quad(1.0).analytic_u(1.5).unwrap(), 2.0);
        assert!(MassProfile::Tabulated { samples: vec![(0.0, 1.0), (1.0, 1.0)] }
            .analytic_u(0.5)
            .is_none());
    }

    #[test]
    fn analytic_rho_values() {
        assert_abs_diff_eq!(hyp(1.0).analytic_rho(1.0).unwrap(), 0.798037, epsilon = 1e-5);
        let tau = (std::f64::consts::E.powi(2) - 1.0) / 2.0;
        assert_abs_diff_eq!(
            quad(1.0).analytic_rho(tau).unwrap(),
            std::f64::consts::E * 2f64.sqrt(),
            epsilon = 1e-5
        );
        // Removable singularity: limit 1/beta.
        assert_abs_diff_eq!(hyp(1.0).analytic_rho(1e-4).unwrap(), 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(hyp(1.0).analytic_rho(0.0).unwrap(), 1.0);
    }

    #[test]
    fn analytic_theta_values() {
        let tau = (std::f64::consts::E.powi(2) - 1.0) / 2.0;
        assert_abs_diff_eq!(
            quad(1.0).analytic_theta(tau).unwrap(),
            std::f64::consts::FRAC_PI_4,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(quad(3.0).analytic_theta(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(hyp(1.0).analytic_theta(0.0).unwrap(), 0.0);
    }

    #[test]
    fn theta_derivative_is_inverse_rho_squared() {
        // dTheta/dtau = 1/rho^2 via central differences, both profiles.
        let h = 1e-5;
        for profile in [hyp(1.0), quad(1.0)] {
            for tau in [0.5, 1.0, 2.0, 4.0] {
                let fd = (profile.analytic_theta(tau + h).unwrap()
                    - profile.analytic_theta(tau - h).unwrap())
                    / (2.0 * h);
                let rho = profile.analytic_rho(tau).unwrap();
                assert_abs_diff_eq!(fd, 1.0 / (rho * rho), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn auxiliary_equation_residual() {
        // u'' + u/(kappa M) = 0 checked by 2nd-order central differences.
        let h = 1e-4;
        for profile in [hyp(1.0), hyp(0.5), quad(1.0), quad(5.0)] {
            for i in 0..100 {
                let tau = 0.1 + 4.9 * (i as f64) / 99.0;
                let u = |t: f64| profile.analytic_u(t).unwrap();
                let udd = (u(tau + h) - 2.0 * u(tau) + u(tau - h)) / (h * h);
                let res = udd + u(tau) / profile.eval_kappa_m(tau).unwrap();
                assert!(res.abs() < 1e-6, "residual {res} at tau {tau} for {profile:?}");
            }
        }
    }

    #[test]
    fn rho_u_s_relation() {
        for profile in [hyp(0.7), quad(2.0)] {
            for tau in [0.3, 1.0, 2.5, 4.0] {
                let (u, s, rho) = (
                    profile.analytic_u(tau).unwrap(),
                    profile.analytic_s(tau).unwrap(),
                    profile.analytic_rho(tau).unwrap(),
                );
                assert_abs_diff_eq!(rho, u * (1.0 + s * s).sqrt(), epsilon = 1e-8);
                // dS/dtau = 1/u^2.
                let h = 1e-5;
                let fd = (profile.analytic_s(tau + h).unwrap()
                    - profile.analytic_s(tau - h).unwrap())
                    / (2.0 * h);
                assert_abs_diff_eq!(fd, 1.0 / (u * u), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn tabulated_interpolation() {
        let samples: Vec<(f64, f64)> =
            (0..20).map(|i| (0.3 * i as f64, 1.0 + (0.2 * i as f64).sin().powi(2))).collect();
        let profile = MassProfile::Tabulated { samples: samples.clone() };
        profile.validate().unwrap();
        // Exact node reproduction, bit for bit.
        for &(tau, km) in &samples {
            assert_eq!(profile.eval_kappa_m(tau).unwrap(), km);
        }
        // Positivity between nodes.
        for i in 0..570 {
            let tau = 0.01 * i as f64;
            assert!(profile.eval_kappa_m(tau).unwrap() > 0.0);
        }
        // Out of range is a domain error.
        assert!(profile.eval_kappa_m(-0.1).is_err());
        assert!(profile.eval_kappa_m(6.0).is_err());
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(hyp(-1.0).validate().is_err());
        assert!(quad(0.0).validate().is_err());
        assert!(MassProfile::Tabulated { samples: vec![(0.0, 1.0), (0.0, 2.0)] }
            .validate()
            .is_err());
        assert!(MassProfile::Tabulated { samples: vec![(0.0, 1.0), (1.0, -2.0)] }
            .validate()
            .is_err());
    }

    #[test]
    fn profile_json_round_trip() {
        let p: MassProfile = serde_json::from_str(r#"{"kind":"hyperbolic","beta":1.0}"#).unwrap();
        assert_eq!(p, hyp(1.0));
        let p: MassProfile = serde_json::from_str(r#"{"kind":"quadratic","gamma":2.5}"#).unwrap();
        assert_eq!(p, quad(2.5));
        let p: MassProfile =
            serde_json::from_str(r#"{"kind":"tabulated","samples":[[0.0,1.0],[1.0,2.0]]}"#).unwrap();
        assert!(matches!(&p, MassProfile::Tabulated { samples } if samples.len() == 2));
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(p, serde_json::from_str(&text).unwrap());
    }
}
