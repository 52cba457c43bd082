//! Recovery of the vector order from one observation û(t₀, ξ⁰) = d.
//!
//! Solving K b = d separates the modes: b_l = e_l(β_l), with e_l the mode
//! factor of the forward solution. Each real part is strictly decreasing
//! in β on [β₀, 1] once t₀ is large enough, so every β_l is found by
//! bisection on Re b_l. The imaginary part is then used as a consistency
//! check. Monotonicity at the working t₀ is certified by dense sampling
//! rather than assumed.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{k_coeff, DerivativeKind, ObservationRecord, VectorOrder, BandLimitedData};
use crate::mlfunc::{check_order_args, rl_sign, MittagLeffler, RL_SIGN_TOL};
use crate::special::EULER_GAMMA;
use crate::symbol::{check_conditions_with, diagonalize, ConditionReport, Diagonalization, MatrixSymbol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Final bracket width of the bisection.
    pub beta_tol: f64,
    /// Complex residual bound, relative to 1 + |b_l|.
    pub residual_tol: f64,
    /// |det K| must exceed this times ‖K‖^m.
    pub det_tol: f64,
    /// Slack on the admissible range, relative to its larger end.
    pub range_slack: f64,
    pub cond_limit: f64,
    /// Sample count of the monotonicity certificate.
    pub n_samples: usize,
    /// Relative decrease required between neighbouring samples.
    pub strictness: f64,
    /// The observation-time search gives up after this many doublings.
    pub max_doublings: u32,
    /// Extra margin in the spectral condition |arg λ| > π/2 + margin.
    pub margin_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            beta_tol: 1e-9,
            residual_tol: 1e-7,
            det_tol: 1e-12,
            range_slack: 1e-9,
            cond_limit: 1e10,
            n_samples: 1000,
            strictness: 1e-14,
            max_doublings: 40,
            margin_tol: 0.0,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta_tol", self.beta_tol),
            ("residual_tol", self.residual_tol),
            ("det_tol", self.det_tol),
            ("cond_limit", self.cond_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if !(self.range_slack >= 0.0 && self.strictness >= 0.0 && self.margin_tol >= 0.0) {
            return Err(Error::param("tolerances", "slack, strictness and margin must be non-negative"));
        }
        if self.n_samples < 2 {
            return Err(Error::param("n_samples", "need at least 2 samples"));
        }
        Ok(())
    }
}

/// mantissa · e^{ln_scale}; keeps exponentially small map values at β = 1
/// comparable after they underflow in plain f64.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledReal {
    pub mantissa: f64,
    pub ln_scale: f64,
}

/// Below this, Re e^{λt} is stored with a separate scale.
const PLAIN_FLOOR_LN: f64 = -600.0;

impl ScaledReal {
    pub fn plain(x: f64) -> Self {
        Self { mantissa: x, ln_scale: 0.0 }
    }

    /// s · Re e^{λt}.
    pub fn re_exp(sign: f64, lambda: Complex64, t: f64) -> Self {
        let ln = lambda.re * t;
        let m = sign * (lambda.im * t).cos();
        if ln > PLAIN_FLOOR_LN {
            Self::plain(m * ln.exp())
        } else {
            Self { mantissa: m, ln_scale: ln }
        }
    }

    /// Nearest f64; may underflow to zero.
    pub fn value(&self) -> f64 {
        self.mantissa * self.ln_scale.exp()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa > 0.0
    }

    fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.ln_scale
    }

    pub fn compare(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mantissa.signum_or_zero(), other.mantissa.signum_or_zero());
        if sa != sb {
            return sa.total_cmp(&sb);
        }
        if sa == 0.0 {
            return Ordering::Equal;
        }
        if self.ln_scale == other.ln_scale {
            return self.mantissa.total_cmp(&other.mantissa);
        }
        let mag = self.ln_abs().total_cmp(&other.ln_abs());
        if sa > 0.0 {
            mag
        } else {
            mag.reverse()
        }
    }

    pub fn compare_f64(&self, y: f64) -> Ordering {
        self.compare(&Self::plain(y))
    }

    /// self > next by at least `margin` · max(|self|, |next|).
    pub fn drops_to(&self, next: &Self, margin: f64) -> bool {
        if self.ln_scale == next.ln_scale {
            let (a, b) = (self.mantissa, next.mantissa);
            return a - b > margin * a.abs().max(b.abs());
        }
        match (self.is_positive(), next.is_positive()) {
            (true, true) => self.ln_abs() - next.ln_abs() > -(-margin).ln_1p(),
            (true, false) => true,
            // only reached when positivity has already failed
            _ => self.compare(next) == Ordering::Greater,
        }
    }
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }
}

/// The scalar map β ↦ e(β) of one mode and its signed real part
/// R(β) = s · Re e(β) (s = 1 for Caputo, sign(|Re λ| - |Im λ|) for RL).
#[derive(Debug, Clone, Copy)]
pub struct OrderMap<'a> {
    ml: &'a MittagLeffler,
    pub kind: DerivativeKind,
    pub lambda: Complex64,
    pub t0: f64,
    pub sign: f64,
}

impl<'a> OrderMap<'a> {
    pub fn new(ml: &'a MittagLeffler, kind: DerivativeKind, lambda: Complex64, t0: f64) -> Result<Self> {
        check_order_args(1.0, lambda, t0)?;
        let sign = match kind {
            DerivativeKind::Caputo => 1.0,
            DerivativeKind::RiemannLiouville => rl_sign(lambda, RL_SIGN_TOL)
                .ok_or(Error::DegenerateSignCondition { index: 0, re: lambda.re, im: lambda.im })?,
        };
        Ok(Self { ml, kind, lambda, t0, sign })
    }

    pub fn complex(&self, beta: f64) -> Result<Complex64> {
        if beta == 1.0 {
            return Ok((self.lambda * self.t0).exp());
        }
        match self.kind {
            DerivativeKind::Caputo => self.ml.e1_caputo(beta, self.lambda, self.t0),
            DerivativeKind::RiemannLiouville => self.ml.e2_rl(beta, self.lambda, self.t0),
        }
    }

    pub fn real(&self, beta: f64) -> Result<ScaledReal> {
        if beta == 1.0 {
            return Ok(ScaledReal::re_exp(self.sign, self.lambda, self.t0));
        }
        Ok(ScaledReal::plain(self.sign * self.complex(beta)?.re))
    }
}

/// Outcome of sampling R on a uniform grid of [β₀, 1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: DerivativeKind,
    pub lambda: Complex64,
    pub t0: f64,
    pub beta0: f64,
    pub samples: usize,
    pub passed: bool,
    pub first_violation: Option<usize>,
    pub reason: Option<String>,
    /// R(1) and R(β₀).
    pub r_one: ScaledReal,
    pub r_floor: ScaledReal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuggestedTime {
    pub t0: f64,
    pub start: f64,
    pub doublings: u32,
    pub certificates: Vec<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KMatrix {
    pub entries: DMatrix<Complex64>,
    pub det: Complex64,
    pub norm: f64,
    pub cond: f64,
    pub well_posed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarTarget {
    pub index: usize,
    pub lambda: Complex64,
    pub b: Complex64,
    pub kind: DerivativeKind,
    pub sign: f64,
    /// R(1) and R(β₀).
    pub lower: ScaledReal,
    pub upper: ScaledReal,
}

impl ScalarTarget {
    /// s · Re b, the value R must take.
    pub fn level(&self) -> f64 {
        self.sign * self.b.re
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentRecovery {
    pub index: usize,
    pub lambda: Complex64,
    pub b: Complex64,
    pub beta: f64,
    pub iterations: u32,
    pub bracket: [f64; 2],
    pub real_residual: f64,
    pub complex_residual: f64,
    pub residual_bound: f64,
    /// The root sits at β = 1, which a half-open range would exclude.
    pub at_right_endpoint: bool,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryResult {
    pub order: VectorOrder,
    pub t0: f64,
    pub xi0: Vec<f64>,
    pub kind: DerivativeKind,
    pub components: Vec<ComponentRecovery>,
    pub conditions: ConditionReport,
    pub k_det: Complex64,
    pub k_cond: f64,
    pub tolerances: Tolerances,
}

/// Minimal observation times: e^{1-γ} for Caputo, e^{1-γ}e^{2/β₀} for RL.
pub fn start_time(kind: DerivativeKind, beta0: f64) -> f64 {
    let t = (1.0 - EULER_GAMMA).exp();
    match kind {
        DerivativeKind::Caputo => t,
        DerivativeKind::RiemannLiouville => t * (2.0 / beta0).exp(),
    }
}

fn check_beta0(beta0: f64) -> Result<()> {
    if !(beta0 > 0.0 && beta0 < 1.0) {
        return Err(Error::param("beta0", format!("must lie in (0, 1), got {beta0}")));
    }
    Ok(())
}

fn inf_norm(a: &DMatrix<Complex64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solver configuration: evaluator policy plus tolerances.
#[derive(Debug, Clone, Copy, Default)]
pub struct Inverse {
    pub ml: MittagLeffler,
    pub tol: Tolerances,
}

impl Inverse {
    pub fn new(ml: MittagLeffler, tol: Tolerances) -> Result<Self> {
        ml.policy.validate()?;
        tol.validate()?;
        Ok(Self { ml, tol })
    }

    pub fn verify_monotonicity(&self, kind: DerivativeKind, lambda: Complex64, t0: f64, beta0: f64) -> Result<Certificate> {
        check_beta0(beta0)?;
        let map = OrderMap::new(&self.ml, kind, lambda, t0)?;
        let n = self.tol.n_samples;
        let step = (1.0 - beta0) / (n - 1) as f64;
        let values = (0..n)
            .into_par_iter()
            .map(|i| map.real(if i + 1 == n { 1.0 } else { beta0 + i as f64 * step }))
            .collect::<Result<Vec<_>>>()?;
        let mut violation = None;
        for (i, v) in values.iter().enumerate() {
            if !v.is_positive() {
                violation = Some((i, format!("R <= 0 at sample {i}")));
                break;
            }
            if i + 1 < n && !v.drops_to(&values[i + 1], self.tol.strictness) {
                violation = Some((i + 1, format!("R does not decrease at sample {}", i + 1)));
                break;
            }
        }
        let (r_one, r_floor) = (values[n - 1], values[0]);
        if violation.is_none() && r_one.compare(&r_floor) == Ordering::Greater {
            violation = Some((n - 1, "R(1) > R(beta0)".into()));
        }
        Ok(Certificate {
            kind,
            lambda,
            t0,
            beta0,
            samples: n,
            passed: violation.is_none(),
            first_violation: violation.as_ref().map(|v| v.0),
            reason: violation.map(|v| v.1),
            r_one,
            r_floor,
        })
    }

    /// Doubles t₀ from the minimal time until every mode is certified.
    pub fn suggest_observation_time(&self, kind: DerivativeKind, beta0: f64, lambdas: &[Complex64]) -> Result<SuggestedTime> {
        check_beta0(beta0)?;
        if lambdas.is_empty() {
            return Err(Error::param("lambdas", "need at least one eigenvalue"));
        }
        for (l, &lambda) in lambdas.iter().enumerate() {
            OrderMap::new(&self.ml, kind, lambda, 1.0).map_err(|e| e.at_index(l))?;
        }
        let start = start_time(kind, beta0);
        let mut t0 = start;
        let mut pending: Vec<usize> = (0..lambdas.len()).collect();
        let mut certificates: Vec<Option<Certificate>> = vec![None; lambdas.len()];
        for doublings in 0..=self.tol.max_doublings {
            let mut still = Vec::new();
            for &l in &pending {
                let cert = self.verify_monotonicity(kind, lambdas[l], t0, beta0)?;
                if !cert.passed {
                    log::debug!("t0 = {t0:e}: mode {l} not certified ({:?})", cert.reason);
                    still.push(l);
                }
                certificates[l] = Some(cert);
            }
            if still.is_empty() {
                // certificates of modes that passed earlier are re-issued at the final time
                let certificates = lambdas
                    .iter()
                    .enumerate()
                    .map(|(l, &lambda)| match &certificates[l] {
                        Some(c) if c.t0 == t0 => Ok(c.clone()),
                        _ => self.verify_monotonicity(kind, lambda, t0, beta0),
                    })
                    .collect::<Result<Vec<_>>>()?;
                if let Some(bad) = certificates.iter().position(|c| !c.passed) {
                    pending = vec![bad];
                    t0 *= 2.0;
                    continue;
                }
                return Ok(SuggestedTime { t0, start, doublings, certificates });
            }
            pending = still;
            t0 *= 2.0;
        }
        let l = pending[0];
        Err(Error::NoMonotoneTime { re: lambdas[l].re, im: lambdas[l].im, t_max: t0 / 2.0 })
    }

    pub fn build_k_matrix(&self, diag: &Diagonalization, phi_hat: &[Complex64]) -> Result<KMatrix> {
        let entries = k_coeff(diag, phi_hat)?;
        let m = entries.nrows();
        let lu = entries.clone().lu();
        let det = lu.determinant();
        let norm = inf_norm(&entries);
        let cond = lu.try_inverse().map(|inv| norm * inf_norm(&inv)).unwrap_or(f64::INFINITY);
        let det_bound = self.tol.det_tol * norm.powi(m as i32);
        if !(det.norm() > det_bound) {
            return Err(Error::SingularK { det: det.norm(), cond });
        }
        let well_posed = cond.is_finite() && cond < self.tol.cond_limit;
        Ok(KMatrix { entries, det, norm, cond, well_posed })
    }

    pub fn reduce_targets(
        &self,
        k: &KMatrix,
        d: &[Complex64],
        diag: &Diagonalization,
        t0: f64,
        kind: DerivativeKind,
        beta0: f64,
    ) -> Result<Vec<ScalarTarget>> {
        check_beta0(beta0)?;
        if !k.well_posed {
            return Err(Error::SingularK { det: k.det.norm(), cond: k.cond });
        }
        if d.len() != k.entries.nrows() {
            return Err(Error::DimensionMismatch(format!("{} observations for {} modes", d.len(), k.entries.nrows())));
        }
        let b = k
            .entries
            .clone()
            .lu()
            .solve(&DVector::from_column_slice(d))
            .ok_or(Error::SingularK { det: k.det.norm(), cond: k.cond })?;
        let mut out = Vec::with_capacity(d.len());
        for (l, &lambda) in diag.eigenvalues.iter().enumerate() {
            let target = (|| {
                let map = OrderMap::new(&self.ml, kind, lambda, t0)?;
                let lower = map.real(1.0)?;
                let upper = map.real(beta0)?;
                let t = ScalarTarget { index: l, lambda, b: b[l], kind, sign: map.sign, lower, upper };
                self.check_range(&t)?;
                Ok(t)
            })();
            out.push(target.map_err(|e: Error| e.at_index(l))?);
        }
        Ok(out)
    }

    fn slack(&self, t: &ScalarTarget) -> f64 {
        self.tol.range_slack * t.upper.value().abs().max(t.lower.value().abs())
    }

    fn check_range(&self, t: &ScalarTarget) -> Result<()> {
        let y = t.level();
        let s = self.slack(t);
        if t.lower.compare_f64(y + s) == Ordering::Greater || t.upper.compare_f64(y - s) == Ordering::Less {
            return Err(Error::RangeViolation { index: t.index, value: y, lower: t.lower.value(), upper: t.upper.value() });
        }
        Ok(())
    }

    /// Bisection for R(β) = s · Re b on [β₀, 1], then the complex residual check.
    pub fn recover_order(&self, target: &ScalarTarget, t0: f64, beta0: f64) -> Result<ComponentRecovery> {
        let l = target.index;
        self.recover_order_inner(target, t0, beta0).map_err(|e| e.at_index(l))
    }

    fn recover_order_inner(&self, target: &ScalarTarget, t0: f64, beta0: f64) -> Result<ComponentRecovery> {
        check_beta0(beta0)?;
        let map = OrderMap::new(&self.ml, target.kind, target.lambda, t0)?;
        let certificate = self.verify_monotonicity(target.kind, target.lambda, t0, beta0)?;
        if !certificate.passed {
            return Err(Error::MonotonicityNotCertified {
                index: target.index,
                t0,
                reason: certificate.reason.clone().unwrap_or_default(),
            });
        }
        let y = target.level();
        let r_one = map.real(1.0)?;
        let r_floor = map.real(beta0)?;
        let slack = self.tol.range_slack * r_floor.value().abs().max(r_one.value().abs());
        let (mut lo, mut hi) = (beta0, 1.0);
        let mut iterations = 0;
        if r_one.compare_f64(y) != Ordering::Less {
            if r_one.compare_f64(y + slack) == Ordering::Greater {
                return Err(Error::NoRoot { index: target.index, value: y });
            }
            lo = 1.0;
        } else if r_floor.compare_f64(y) != Ordering::Greater {
            if r_floor.compare_f64(y - slack) == Ordering::Less {
                return Err(Error::NoRoot { index: target.index, value: y });
            }
            hi = beta0;
        } else {
            // R(lo) > y > R(hi) throughout
            while hi - lo > self.tol.beta_tol {
                let mid = 0.5 * (lo + hi);
                iterations += 1;
                match map.real(mid)?.compare_f64(y) {
                    Ordering::Greater => lo = mid,
                    Ordering::Less => hi = mid,
                    Ordering::Equal => {
                        lo = mid;
                        hi = mid;
                    }
                }
            }
        }
        let beta = if lo == hi { lo } else { 0.5 * (lo + hi) };
        let value = map.complex(beta)?;
        let complex_residual = (value - target.b).norm();
        let residual_bound = self.tol.residual_tol * (1.0 + target.b.norm());
        let real_residual = (map.real(beta)?.value() - y).abs();
        if !(complex_residual <= residual_bound) {
            return Err(Error::InconsistentData { index: target.index, residual: complex_residual, tolerance: residual_bound });
        }
        Ok(ComponentRecovery {
            index: target.index,
            lambda: target.lambda,
            b: target.b,
            beta,
            iterations,
            bracket: [lo, hi],
            real_residual,
            complex_residual,
            residual_bound,
            at_right_endpoint: beta == 1.0,
            certificate,
        })
    }

    pub fn recover_vector_order(
        &self,
        record: &ObservationRecord,
        symbol: &MatrixSymbol,
        data: &BandLimitedData,
        beta0: f64,
    ) -> Result<RecoveryResult> {
        check_beta0(beta0)?;
        record.validate()?;
        if record.d.len() != symbol.m || data.m != symbol.m {
            return Err(Error::DimensionMismatch(format!(
                "{} observations, {} spectrum components, {} modes",
                record.d.len(),
                data.m,
                symbol.m
            )));
        }
        let (t0, kind, xi0) = (record.t0, record.kind, record.xi0.as_slice());
        if !symbol.domain.contains(xi0) {
            return Err(Error::OutOfDomain { xi: xi0.to_vec() });
        }
        let diag = diagonalize(symbol, xi0)?;
        let conditions = check_conditions_with(&diag, kind, self.tol.margin_tol);
        if let Some(e) = conditions.first_failure() {
            return Err(e);
        }
        let phi = data.at(xi0)?;
        let k = self.build_k_matrix(&diag, &phi)?;
        let targets = self.reduce_targets(&k, &record.d, &diag, t0, kind, beta0)?;
        let components = targets
            .par_iter()
            .map(|t| self.recover_order(t, t0, beta0))
            .collect::<Result<Vec<_>>>()?;
        let order = VectorOrder::new(components.iter().map(|c| c.beta).collect(), beta0)?;
        Ok(RecoveryResult {
            order,
            t0,
            xi0: xi0.to_vec(),
            kind,
            components,
            conditions,
            k_det: k.det,
            k_cond: k.cond,
            tolerances: self.tol,
        })
    }
}

pub fn verify_monotonicity(kind: DerivativeKind, lambda: Complex64, t0: f64, beta0: f64, n_samples: usize) -> Result<Certificate> {
    let tol = Tolerances { n_samples, ..Tolerances::default() };
    tol.validate()?;
    Inverse { tol, ..Inverse::default() }.verify_monotonicity(kind, lambda, t0, beta0)
}

pub fn suggest_observation_time(kind: DerivativeKind, beta0: f64, lambdas: &[Complex64]) -> Result<SuggestedTime> {
    Inverse::default().suggest_observation_time(kind, beta0, lambdas)
}

pub fn build_k_matrix(diag: &Diagonalization, phi_hat: &[Complex64]) -> Result<KMatrix> {
    Inverse::default().build_k_matrix(diag, phi_hat)
}

pub fn reduce_targets(
    k: &KMatrix,
    d: &[Complex64],
    diag: &Diagonalization,
    t0: f64,
    kind: DerivativeKind,
    beta0: f64,
) -> Result<Vec<ScalarTarget>> {
    Inverse::default().reduce_targets(k, d, diag, t0, kind, beta0)
}

pub fn recover_order(target: &ScalarTarget, t0: f64, beta0: f64) -> Result<ComponentRecovery> {
    Inverse::default().recover_order(target, t0, beta0)
}

pub fn recover_vector_order(
    record: &ObservationRecord,
    symbol: &MatrixSymbol,
    data: &BandLimitedData,
    beta0: f64,
    tol: Tolerances,
) -> Result<RecoveryResult> {
    Inverse::new(MittagLeffler::default(), tol)?.recover_vector_order(record, symbol, data, beta0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlfunc::{e1_caputo, e2_rl};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_target(kind: DerivativeKind, lambda: Complex64, b: Complex64, t0: f64, beta0: f64) -> ScalarTarget {
        let ml = MittagLeffler::default();
        let map = OrderMap::new(&ml, kind, lambda, t0).unwrap();
        ScalarTarget {
            index: 0,
            lambda,
            b,
            kind,
            sign: map.sign,
            lower: map.real(1.0).unwrap(),
            upper: map.real(beta0).unwrap(),
        }
    }

    #[test]
    fn start_times() {
        assert!((start_time(DerivativeKind::Caputo, 0.3) - 1.526_205_112).abs() < 1e-8);
        assert!((start_time(DerivativeKind::RiemannLiouville, 0.5) - 83.3273).abs() < 1e-3);
    }

    #[test]
    fn scaled_reals_compare_beyond_underflow() {
        let tiny = ScaledReal { mantissa: 0.5, ln_scale: -1e6 };
        let tinier = ScaledReal { mantissa: 0.9, ln_scale: -2e6 };
        assert_eq!(tiny.value(), 0.0);
        assert_eq!(tiny.compare(&tinier), Ordering::Greater);
        assert_eq!(tiny.compare_f64(0.0), Ordering::Greater);
        assert_eq!(tiny.compare_f64(1e-300), Ordering::Less);
        assert!(ScaledReal::plain(1e-300).drops_to(&tiny, 1e-14));
        assert!(!tinier.drops_to(&tiny, 1e-14));
        let neg = ScaledReal { mantissa: -0.5, ln_scale: -1e6 };
        assert_eq!(neg.compare_f64(0.0), Ordering::Less);
        assert!(ScaledReal::plain(3.0).drops_to(&ScaledReal::plain(2.0), 1e-14));
        assert!(!ScaledReal::plain(2.0).drops_to(&ScaledReal::plain(2.0), 1e-14));
    }

    #[test]
    fn caputo_order_is_recovered() {
        let (lambda, t0) = (c(-2.0, 0.0), 4.0);
        let b = e1_caputo(0.7, lambda, t0).unwrap();
        let r = recover_order(&scalar_target(DerivativeKind::Caputo, lambda, b, t0, 0.3), t0, 0.3).unwrap();
        assert!((r.beta - 0.7).abs() < 1e-8, "{}", r.beta);
        assert!(r.bracket[0] <= 0.7 && 0.7 <= r.bracket[1] + 1e-12);
        assert!(r.complex_residual <= r.residual_bound);
    }

    #[test]
    fn right_endpoint() {
        let (lambda, t0) = (c(-1.0, 0.0), 2.0);
        let b = c((-2.0f64).exp(), 0.0);
        let r = recover_order(&scalar_target(DerivativeKind::Caputo, lambda, b, t0, 0.3), t0, 0.3).unwrap();
        assert_eq!(r.beta, 1.0);
        assert!(r.at_right_endpoint);
    }

    #[test]
    fn rl_order_is_recovered() {
        let (lambda, t0) = (c(-3.0, 0.0), 8.0);
        let b = e2_rl(0.55, lambda, t0).unwrap();
        let r = recover_order(&scalar_target(DerivativeKind::RiemannLiouville, lambda, b, t0, 0.5), t0, 0.5).unwrap();
        assert!((r.beta - 0.55).abs() < 1e-8, "{}", r.beta);
    }

    #[test]
    fn bisection_is_deterministic() {
        let (lambda, t0) = (c(-1.0, 0.4), 3.0);
        let b = e1_caputo(0.45, lambda, t0).unwrap();
        let t = scalar_target(DerivativeKind::Caputo, lambda, b, t0, 0.2);
        let a = recover_order(&t, t0, 0.2).unwrap();
        let again = recover_order(&t, t0, 0.2).unwrap();
        assert_eq!(a.beta.to_bits(), again.beta.to_bits());
    }

    #[test]
    fn wrong_imaginary_part_is_inconsistent() {
        let (lambda, t0) = (c(-1.0, 0.4), 3.0);
        let b = e1_caputo(0.6, lambda, t0).unwrap() + c(0.0, 0.05);
        let err = recover_order(&scalar_target(DerivativeKind::Caputo, lambda, b, t0, 0.2), t0, 0.2).unwrap_err();
        assert!(matches!(err, Error::InconsistentData { index: 0, .. }));
    }

    #[test]
    fn levels_outside_the_range_have_no_root() {
        let (lambda, t0) = (c(-2.0, 0.0), 4.0);
        let b = c(0.99, 0.0);
        let err = recover_order(&scalar_target(DerivativeKind::Caputo, lambda, b, t0, 0.3), t0, 0.3).unwrap_err();
        assert!(matches!(err, Error::NoRoot { .. }));
    }

    #[test]
    fn certificates() {
        let cert = verify_monotonicity(DerivativeKind::Caputo, c(-1.0, 0.0), std::f64::consts::E, 0.3, 1000).unwrap();
        assert!(cert.passed, "{cert:?}");
        assert_eq!(cert.samples, 1000);
        let early = verify_monotonicity(DerivativeKind::Caputo, c(-1.0, 0.0), 1.01, 0.05, 1000).unwrap();
        assert_eq!(early.passed, early.first_violation.is_none());
        assert!(matches!(
            verify_monotonicity(DerivativeKind::Caputo, c(1.0, 0.0), 2.0, 0.3, 100),
            Err(Error::SpectralConditionViolation { .. })
        ));
    }

    #[test]
    fn suggested_time_is_certified() {
        let s = suggest_observation_time(DerivativeKind::Caputo, 0.3, &[c(-1.0, 0.0)]).unwrap();
        assert!(s.t0 >= s.start);
        assert!(s.certificates.iter().all(|c| c.passed && c.t0 == s.t0));
        let s = suggest_observation_time(DerivativeKind::RiemannLiouville, 0.5, &[c(-5.0, 1.0)]).unwrap();
        assert!(s.certificates[0].passed);
        let err = suggest_observation_time(DerivativeKind::RiemannLiouville, 0.5, &[c(-2.0, 0.0), c(-2.0, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::DegenerateSignCondition { index: 1, .. }));
    }
}
