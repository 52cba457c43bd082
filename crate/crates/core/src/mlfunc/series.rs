//! Power series Σ z^k / Γ(αk + β).
//!
//! The double-precision pass is used whenever its rounding estimate is
//! small; otherwise the sum is redone in MPFR with enough guard bits to
//! absorb the cancellation between terms.

use num_complex::Complex64;
use rug::Float;

use super::{Evaluation, Regime};
use crate::error::{Error, Result};
use crate::special::{ln_gamma, rgamma};

/// Hard cap on the number of series terms.
pub const MAX_TERMS: usize = 200_000;

/// Relative rounding error accepted from the double-precision pass.
pub const ROUNDING_TARGET: f64 = 1e-13;

const MAX_BITS: u32 = 1 << 14;

#[derive(Debug, Clone, Copy)]
pub(crate) struct F64Sum {
    pub value: Complex64,
    pub truncation: f64,
    pub rounding: f64,
    pub terms: usize,
    /// ln of the largest term modulus.
    pub ln_max_term: f64,
}

fn check_params(alpha: f64, beta: f64, z: Complex64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::param("z", "must be finite"));
    }
    Ok(())
}

/// Bound on |t_{k+1}| / |t_k|, valid for all later indices once αk + β ≥ 2.
fn ratio_bound(alpha: f64, beta: f64, k: usize, ln_abs_z: f64) -> f64 {
    let x = alpha * k as f64 + beta;
    (ln_abs_z + ln_gamma(x) - ln_gamma(x + alpha)).exp()
}

pub(crate) fn series_f64(alpha: f64, beta: f64, z: Complex64, tol: f64) -> Result<F64Sum> {
    check_params(alpha, beta, z)?;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(F64Sum {
            value: Complex64::new(rgamma(beta), 0.0),
            truncation: 0.0,
            rounding: 0.0,
            terms: 1,
            ln_max_term: -ln_gamma(beta),
        });
    }
    let ln_abs_z = z.norm().ln();
    let arg_z = z.arg();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0f64;
    let mut pw = Complex64::new(1.0, 0.0);
    let mut ln_max = f64::NEG_INFINITY;
    let mut bound = f64::INFINITY;
    for k in 0..MAX_TERMS {
        let x = alpha * k as f64 + beta;
        let term = if x <= 170.0 && pw.is_finite() && pw.norm() < 1e290 {
            pw * rgamma(x)
        } else {
            let ln_mod = k as f64 * ln_abs_z - ln_gamma(x);
            Complex64::from_polar(ln_mod.exp(), k as f64 * arg_z)
        };
        let t_abs = term.norm();
        if t_abs > 0.0 {
            ln_max = ln_max.max(t_abs.ln());
        }
        sum += term;
        abs_sum += t_abs;
        pw *= z;
        if x >= 2.0 {
            let q = ratio_bound(alpha, beta, k, ln_abs_z);
            if q < 1.0 {
                bound = t_abs * q / (1.0 - q);
                if bound <= tol * sum.norm().max(f64::MIN_POSITIVE) {
                    let n = (k + 1) as f64;
                    return Ok(F64Sum {
                        value: sum,
                        truncation: bound,
                        rounding: 2.0 * f64::EPSILON * n.sqrt() * abs_sum,
                        terms: k + 1,
                        ln_max_term: ln_max,
                    });
                }
            }
        }
    }
    Err(Error::NonConvergence { terms: MAX_TERMS, bound })
}

struct MpComplex {
    re: Float,
    im: Float,
}

/// log2 of |re| + |im|, within one unit.
fn log2_mag(re: &Float, im: &Float) -> Option<i64> {
    let a = re.get_exp().map(i64::from);
    let b = im.get_exp().map(i64::from);
    match (a, b) {
        (None, None) => None,
        (Some(x), None) | (None, Some(x)) => Some(x),
        (Some(x), Some(y)) => Some(x.max(y)),
    }
}

fn series_mpfr(alpha: f64, beta: f64, z: Complex64, tol: f64, bits: u32) -> Result<(MpComplex, usize, i64)> {
    let ln_abs_z = z.norm().ln();
    let zr = Float::with_val(bits, z.re);
    let zi = Float::with_val(bits, z.im);
    let mut pw = MpComplex { re: Float::with_val(bits, 1), im: Float::with_val(bits, 0) };
    let mut sum = MpComplex { re: Float::with_val(bits, 0), im: Float::with_val(bits, 0) };
    let a = Float::with_val(bits, alpha);
    let log2_tol = tol.log2().floor() as i64;
    let mut max_log2: i64 = i64::MIN;
    for k in 0..MAX_TERMS {
        let mut x = Float::with_val(bits, &a * k as u64);
        x += beta;
        let g = x.gamma();
        let tr = Float::with_val(bits, &pw.re / &g);
        let ti = Float::with_val(bits, &pw.im / &g);
        let t_log2 = log2_mag(&tr, &ti);
        if let Some(t) = t_log2 {
            max_log2 = max_log2.max(t);
        }
        sum.re += &tr;
        sum.im += &ti;
        // pw *= z
        let nr = Float::with_val(bits, &pw.re * &zr) - Float::with_val(bits, &pw.im * &zi);
        let ni = Float::with_val(bits, &pw.re * &zi) + Float::with_val(bits, &pw.im * &zr);
        pw.re = nr;
        pw.im = ni;
        let xf = alpha * k as f64 + beta;
        if xf >= 2.0 {
            let q = ratio_bound(alpha, beta, k, ln_abs_z);
            if q < 0.5 {
                let Some(t) = t_log2 else { return Ok((sum, k + 1, max_log2)) };
                let s = log2_mag(&sum.re, &sum.im).unwrap_or(i64::MIN / 2);
                // tail <= 2|t| q/(1-q) <= 2|t|; the extra bit absorbs log2_mag slop
                if t + 2 <= s + log2_tol {
                    return Ok((sum, k + 1, max_log2));
                }
            }
        }
    }
    Err(Error::NonConvergence { terms: MAX_TERMS, bound: f64::NAN })
}

/// Series evaluation of E_{α,β}(z) with a truncation bound below `tol`
/// (relative to the sum) and an accompanying error estimate.
pub fn ml_series(alpha: f64, beta: f64, z: Complex64, tol: f64) -> Result<Evaluation> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let fast = series_f64(alpha, beta, z, tol)?;
    let scale = fast.value.norm();
    if fast.rounding <= ROUNDING_TARGET * scale {
        return Ok(Evaluation {
            value: fast.value,
            error_estimate: fast.truncation + fast.rounding,
            regime: Regime::Series,
        });
    }

    // Cancellation: the largest term exceeds the result by 2^c. Redo the sum
    // with c + guard bits, then re-check the cancellation against the
    // accurate result.
    let max_log2 = (fast.ln_max_term / std::f64::consts::LN_2).ceil() as i64;
    let guess_log2 = if scale > 0.0 { scale.log2().floor() as i64 } else { max_log2 - 64 };
    let mut bits = ((max_log2 - guess_log2).max(0) + 96) as u32;
    loop {
        if bits > MAX_BITS {
            return Err(Error::NonConvergence { terms: fast.terms, bound: f64::INFINITY });
        }
        let (sum, terms, mp_max) = series_mpfr(alpha, beta, z, tol.max(1e-18), bits)?;
        let sum_log2 = log2_mag(&sum.re, &sum.im);
        let value = Complex64::new(sum.re.to_f64(), sum.im.to_f64());
        let cancel = match sum_log2 {
            Some(s) => (mp_max - s).max(0),
            None => bits as i64,
        };
        let spare = bits as i64 - cancel - 8;
        if spare >= 60 {
            let rounding = value.norm() * 2f64.powi(-(spare.min(1000) as i32)) + f64::EPSILON * value.norm();
            return Ok(Evaluation {
                value,
                error_estimate: rounding + tol * value.norm(),
                regime: Regime::SeriesExtended { bits, terms },
            });
        }
        bits = (cancel + 96) as u32;
        log::debug!("series: raising precision to {bits} bits");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn leading_terms_at_origin() {
        let v = ml_series(0.7, 1.0, c(0.0, 0.0), 1e-14).unwrap();
        assert_eq!(v.value, c(1.0, 0.0));
        let v = ml_series(0.5, 0.5, c(0.0, 0.0), 1e-14).unwrap();
        assert!((v.value.re - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((v.value.re - 0.564_189_583_5).abs() < 1e-10);
    }

    #[test]
    fn exponential_case() {
        let v = ml_series(1.0, 1.0, c(-1.0, 0.0), 1e-14).unwrap();
        assert!((v.value.re - (-1.0f64).exp()).abs() < 4e-15);
        assert!((v.value.re - 0.367_879_441_2).abs() < 1e-10);
        let z = c(-3.0, 4.0);
        let v = ml_series(1.0, 1.0, z, 1e-15).unwrap();
        assert!((v.value - z.exp()).norm() < 1e-14 * z.exp().norm());
    }

    #[test]
    fn second_index_two_is_expm1_over_z() {
        // E_{1,2}(z) = (e^z - 1)/z
        for z in [c(0.3, -0.2), c(-2.5, 1.0), c(4.0, 0.0)] {
            let v = ml_series(1.0, 2.0, z, 1e-15).unwrap();
            let exact = (z.exp() - 1.0) / z;
            assert!((v.value - exact).norm() < 1e-14 * exact.norm());
        }
    }

    #[test]
    fn cancellation_switches_to_extended_precision() {
        // E_1(-30) = e^-30: terms reach 30^30/30! ~ 7e11 while the sum is 1e-13.
        let v = ml_series(1.0, 1.0, c(-30.0, 0.0), 1e-15).unwrap();
        assert!(matches!(v.regime, Regime::SeriesExtended { .. }));
        let exact = (-30.0f64).exp();
        assert!(((v.value.re - exact) / exact).abs() < 1e-14, "{:e}", v.value.re);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ml_series(0.0, 1.0, c(1.0, 0.0), 1e-14).is_err());
        assert!(ml_series(0.5, -1.0, c(1.0, 0.0), 1e-14).is_err());
        assert!(ml_series(0.5, 1.0, c(f64::NAN, 0.0), 1e-14).is_err());
    }

    #[test]
    fn error_estimate_is_reported() {
        let v = ml_series(0.8, 1.2, c(-2.0, 1.0), 1e-15).unwrap();
        assert!(v.error_estimate > 0.0 && v.error_estimate < 1e-12);
    }
}
