//! Numerical thresholds shared by every analysis.
//!
//! All strict-inequality certificates compare against these values; a quantity
//! within tolerance is reported as borderline rather than guessed. The whole set
//! can be scaled uniformly, e.g. from the `FILIPPOV_TOLERANCE_SCALE` environment
//! variable.

use serde::{Deserialize, Serialize};

/// Environment variable read by [`Tolerances::from_env`].
pub const TOLERANCE_SCALE_ENV: &str = "FILIPPOV_TOLERANCE_SCALE";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute accuracy of isolated real roots.
    pub root: f64,
    /// Threshold for sign certificates (`Xf`, `det[X,Y]`, eigenvalue real parts, ...).
    pub sign: f64,
    /// Residual norm accepted by Newton iterations.
    pub newton: f64,
    /// Separates an elementary circle at infinity from a non-elementary one.
    pub mu: f64,
    /// State accuracy of localized events.
    pub event: f64,
    /// Distance under which an orbit is considered to have closed.
    pub close: f64,
    /// Relative finite-difference step for return-map derivatives.
    pub fd_step: f64,
    /// Offset along eigendirections when tracing separatrices.
    pub separatrix_offset: f64,
    /// Separatrix distance below which a connection is flagged.
    pub connect: f64,
    /// Absolute tolerance of adaptive quadrature.
    pub quad: f64,
    /// Relative tolerance of the Runge-Kutta step controller.
    pub ode_rtol: f64,
    /// Absolute tolerance of the Runge-Kutta step controller.
    pub ode_atol: f64,
    /// Zero test for polynomial coefficients during gcd computations.
    pub coeff_zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root: 1e-10,
            sign: 1e-9,
            newton: 1e-11,
            mu: 1e-8,
            event: 1e-9,
            close: 1e-6,
            fd_step: 1e-5,
            separatrix_offset: 1e-6,
            connect: 1e-4,
            quad: 1e-10,
            ode_rtol: 1e-10,
            ode_atol: 1e-12,
            coeff_zero: 1e-12,
        }
    }
}

impl Tolerances {
    /// Every tolerance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            root: self.root * factor,
            sign: self.sign * factor,
            newton: self.newton * factor,
            mu: self.mu * factor,
            event: self.event * factor,
            close: self.close * factor,
            fd_step: self.fd_step * factor,
            separatrix_offset: self.separatrix_offset * factor,
            connect: self.connect * factor,
            quad: self.quad * factor,
            ode_rtol: self.ode_rtol * factor,
            ode_atol: self.ode_atol * factor,
            coeff_zero: self.coeff_zero * factor,
        }
    }

    /// Defaults scaled by `FILIPPOV_TOLERANCE_SCALE` when it holds a positive number.
    pub fn from_env() -> Self {
        let base = Self::default();
        match std::env::var(TOLERANCE_SCALE_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
        {
            Some(f) if f.is_finite() && f > 0.0 => base.scaled(f),
            _ => base,
        }
    }
}

/// Three-valued outcome of a numerical certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Certainty {
    Yes,
    No,
    Borderline,
}
