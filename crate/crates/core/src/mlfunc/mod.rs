//! One- and two-parameter Mittag-Leffler functions at complex arguments,
//! and the scalar maps of the order whose real parts the inverse solver
//! brackets.
//!
//! Small arguments go through the power series, everything else through
//! the Hankel-path representation in [`contour`]. α = β = 1 is evaluated
//! as the exponential.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::rgamma;

pub mod contour;
pub mod series;

pub use contour::{choose_contour, ml_contour, ml_contour_with, HankelContour, Side};
pub use series::ml_series;

pub type ComplexValue = Complex64;

/// Above |z|^{1/α} = this, the series loses more digits than it is worth.
const SERIES_GROWTH_LIMIT: f64 = 9.0;

/// Regime switch and quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlPolicy {
    pub series_radius: f64,
    pub series_tol: f64,
    pub contour_nodes: usize,
    pub contour_epsilon_fraction: f64,
    /// Agreement required between successive node doublings.
    pub contour_tol: f64,
}

impl Default for MlPolicy {
    fn default() -> Self {
        Self {
            series_radius: 5.0,
            series_tol: 1e-16,
            contour_nodes: 96,
            contour_epsilon_fraction: 0.9,
            contour_tol: 1e-12,
        }
    }
}

impl MlPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_radius >= 1.0 && self.series_radius.is_finite()) {
            return Err(Error::param("series_radius", "must be at least 1"));
        }
        if !(self.series_tol > 0.0) {
            return Err(Error::param("series_tol", "must be positive"));
        }
        if self.contour_nodes < 64 {
            return Err(Error::param("contour_nodes", "must be at least 64"));
        }
        if !(self.contour_epsilon_fraction > 0.0 && self.contour_epsilon_fraction < 1.0) {
            return Err(Error::param("contour_epsilon_fraction", "must lie in (0, 1)"));
        }
        if !(self.contour_tol > 0.0) {
            return Err(Error::param("contour_tol", "must be positive"));
        }
        Ok(())
    }

    /// Largest |z| routed to the series for parameter α.
    pub fn series_reach(&self, alpha: f64) -> f64 {
        self.series_radius.min(SERIES_GROWTH_LIMIT.powf(alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum Regime {
    Origin,
    Exponential,
    Series,
    SeriesExtended { bits: u32, terms: usize },
    ContourLeft { theta: f64 },
    ContourRight { theta: f64 },
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Origin => "origin",
            Regime::Exponential => "exponential",
            Regime::Series => "series",
            Regime::SeriesExtended { .. } => "series-mpfr",
            Regime::ContourLeft { .. } => "contour-left",
            Regime::ContourRight { .. } => "contour-right",
        }
    }
}

/// A function value with the route that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: Complex64,
    pub error_estimate: f64,
    pub regime: Regime,
}

/// Regime-dispatching evaluator.
#[derive(Debug, Clone, Copy, Default)]
pub struct MittagLeffler {
    pub policy: MlPolicy,
}

impl MittagLeffler {
    pub fn new(policy: MlPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(Self { policy })
    }

    pub fn evaluate(&self, alpha: f64, beta: f64, z: Complex64) -> Result<Evaluation> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", format!("must be positive, got {beta}")));
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::param("z", "must be finite"));
        }
        if z == Complex64::new(0.0, 0.0) {
            return Ok(Evaluation { value: Complex64::new(rgamma(beta), 0.0), error_estimate: 0.0, regime: Regime::Origin });
        }
        if alpha == 1.0 && beta == 1.0 {
            let value = z.exp();
            if !value.is_finite() {
                return Err(Error::Overflow(format!("exp({z})")));
            }
            return Ok(Evaluation { value, error_estimate: f64::EPSILON * value.norm(), regime: Regime::Exponential });
        }
        let eval = if z.norm() <= self.policy.series_reach(alpha) {
            let fast = series::series_f64(alpha, beta, z, self.policy.series_tol)?;
            if fast.rounding <= 1e-12 * fast.value.norm() {
                Evaluation {
                    value: fast.value,
                    error_estimate: fast.truncation + fast.rounding,
                    regime: Regime::Series,
                }
            } else {
                ml_series(alpha, beta, z, self.policy.series_tol)?
            }
        } else {
            let (path, side) = choose_contour(alpha, z, &self.policy)?;
            contour::hankel_eval(alpha, beta, z, &path, side, contour::DEFAULT_EXPLICIT_TERMS, self.policy.contour_tol)?
        };
        if !eval.value.is_finite() {
            return Err(Error::Overflow(format!("E_{{{alpha},{beta}}}({z})")));
        }
        Ok(eval)
    }

    pub fn one(&self, beta: f64, z: Complex64) -> Result<Complex64> {
        Ok(self.evaluate(beta, 1.0, z)?.value)
    }

    pub fn two(&self, alpha: f64, beta: f64, z: Complex64) -> Result<Complex64> {
        Ok(self.evaluate(alpha, beta, z)?.value)
    }
}

/// E_β(z), β ∈ (0, 1].
pub fn ml_one(beta: f64, z: Complex64) -> Result<Complex64> {
    MittagLeffler::default().one(beta, z)
}

/// E_{α,β}(z), α ∈ (0, 1], β > 0.
pub fn ml_two(alpha: f64, beta: f64, z: Complex64) -> Result<Complex64> {
    MittagLeffler::default().two(alpha, beta, z)
}

/// |arg λ| > π/2, with `margin` added to the right-hand side.
pub fn spectral_ok(lambda: Complex64, margin: f64) -> bool {
    lambda.norm() > 0.0 && lambda.arg().abs() > FRAC_PI_2 + margin
}

/// sign(|Re λ| - |Im λ|), or None when the two coincide to relative `tol`.
pub fn rl_sign(lambda: Complex64, tol: f64) -> Option<f64> {
    let gap = lambda.re.abs() - lambda.im.abs();
    if gap.abs() <= tol * lambda.norm() {
        None
    } else {
        Some(gap.signum())
    }
}

pub(crate) fn check_order_args(rho: f64, lambda: Complex64, t0: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::param("rho", format!("must lie in (0, 1], got {rho}")));
    }
    if !(t0 >= 1.0 && t0.is_finite()) {
        return Err(Error::InvalidTime(t0));
    }
    if !spectral_ok(lambda, 0.0) {
        return Err(Error::SpectralConditionViolation { index: 0, re: lambda.re, im: lambda.im });
    }
    Ok(())
}

impl MittagLeffler {
    /// E_ρ(λ t0^ρ).
    pub fn e1_caputo(&self, rho: f64, lambda: Complex64, t0: f64) -> Result<Complex64> {
        check_order_args(rho, lambda, t0)?;
        self.one(rho, lambda * t0.powf(rho))
    }

    /// t0^{ρ-1} E_{ρ,ρ}(λ t0^ρ).
    pub fn e2_rl(&self, rho: f64, lambda: Complex64, t0: f64) -> Result<Complex64> {
        check_order_args(rho, lambda, t0)?;
        Ok(self.two(rho, rho, lambda * t0.powf(rho))? * t0.powf(rho - 1.0))
    }

    pub fn r_c(&self, rho: f64, lambda: Complex64, t0: f64) -> Result<f64> {
        Ok(self.e1_caputo(rho, lambda, t0)?.re)
    }

    pub fn r_rl(&self, rho: f64, lambda: Complex64, t0: f64) -> Result<f64> {
        let sign = rl_sign(lambda, RL_SIGN_TOL)
            .ok_or(Error::DegenerateSignCondition { index: 0, re: lambda.re, im: lambda.im })?;
        Ok(sign * self.e2_rl(rho, lambda, t0)?.re)
    }
}

/// Relative tolerance below which |Re λ| and |Im λ| count as equal.
pub const RL_SIGN_TOL: f64 = 1e-12;

pub fn e1_caputo(rho: f64, lambda: Complex64, t0: f64) -> Result<Complex64> {
    MittagLeffler::default().e1_caputo(rho, lambda, t0)
}

pub fn e2_rl(rho: f64, lambda: Complex64, t0: f64) -> Result<Complex64> {
    MittagLeffler::default().e2_rl(rho, lambda, t0)
}

pub fn r_c(rho: f64, lambda: Complex64, t0: f64) -> Result<f64> {
    MittagLeffler::default().r_c(rho, lambda, t0)
}

pub fn r_rl(rho: f64, lambda: Complex64, t0: f64) -> Result<f64> {
    MittagLeffler::default().r_rl(rho, lambda, t0)
}
