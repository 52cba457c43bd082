//! Integral representation of E_{α,β} over the Hankel path δ(1; θ).
//!
//! The path runs in along the ray arg ζ = -θ, around the unit arc and out
//! along arg ζ = +θ, with πα/2 < θ < πα. For z left of the path (G⁻):
//!
//! ```text
//! E_{α,β}(z) = -Σ_{k=1}^{n} z^{-k}/Γ(β - kα)
//!            + 1/(2πiα z^n) ∫ exp(ζ^{1/α}) ζ^{(1-β)/α + n} / (ζ - z) dζ
//! ```
//!
//! and for z right of it (G⁺) the residue (1/α) z^{(1-β)/α} exp(z^{1/α})
//! is added. n = 1 with β = 1 is the classical single-term form; n = 2 with
//! β = α gives the form whose first explicit term vanishes. Larger n moves
//! more of the value into closed form, which keeps relative accuracy when
//! |z| is large.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::{Evaluation, MlPolicy, Regime};
use crate::error::{Error, Result};
use crate::quad::{for_each_node, PANEL_ORDER};
use crate::special::rgamma;

/// Explicit asymptotic terms kept outside the integral.
pub const DEFAULT_EXPLICIT_TERMS: u32 = 2;

/// exp(-RAY_DECAY) is the integrand decay at the ray cut-off.
const RAY_DECAY: f64 = 45.0;

const MAX_PANELS: usize = 1 << 12;

/// Which side of the path the argument lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// |arg z| > θ: pure integral representation.
    Left,
    /// |arg z| < θ: integral plus the exponential residue.
    Right,
}

/// The Hankel path δ(1; θ) with its initial node budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelContour {
    pub radius: f64,
    pub theta: f64,
    pub node_count: usize,
}

impl HankelContour {
    pub fn new(theta: f64, node_count: usize) -> Result<Self> {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::param("theta", format!("must lie in (0, pi), got {theta}")));
        }
        if node_count == 0 {
            return Err(Error::param("node_count", "must be positive"));
        }
        Ok(Self { radius: 1.0, theta, node_count })
    }

    /// Path for E_{α,·}(z) with z left of it, using
    /// θ = (π/2 + ε)α and ε = f·½·min(|arg z| - π/2, π/2).
    ///
    /// Needs |arg z| > π/2, which is the sector the order-recovery maps
    /// live in.
    pub fn for_left_argument(alpha: f64, z: Complex64, policy: &MlPolicy) -> Result<Self> {
        let phi = z.arg().abs();
        if phi <= FRAC_PI_2 {
            return Err(Error::ContourViolation { re: z.re, im: z.im, theta: FRAC_PI_2 * alpha });
        }
        let eps = policy.contour_epsilon_fraction * 0.5 * (phi - FRAC_PI_2).min(FRAC_PI_2);
        Self::new((FRAC_PI_2 + eps) * alpha, policy.contour_nodes)
    }
}

/// Picks a path and side for an arbitrary nonzero z, maximising the smaller
/// of the ray decay margin θ/α - π/2 and the angular gap to arg z.
pub fn choose_contour(alpha: f64, z: Complex64, policy: &MlPolicy) -> Result<(HankelContour, Side)> {
    let phi = z.arg().abs();
    let lo = FRAC_PI_2 * alpha;
    let hi = PI * alpha;
    let mut best: Option<(f64, f64, Side)> = None;
    if phi > lo {
        let theta = if phi > FRAC_PI_2 {
            HankelContour::for_left_argument(alpha, z, policy)?.theta
        } else {
            lo + 0.5 * (phi.min(hi) - lo)
        };
        let quality = (theta / alpha - FRAC_PI_2).min(phi - theta);
        best = Some((quality, theta, Side::Left));
    }
    if phi < hi {
        let theta = 0.5 * (phi.max(lo) + hi);
        let quality = (theta / alpha - FRAC_PI_2).min(theta - phi);
        if best.map_or(true, |(q, _, _)| quality > q) {
            best = Some((quality, theta, Side::Right));
        }
    }
    let (_, theta, side) = best.ok_or(Error::ContourViolation { re: z.re, im: z.im, theta: lo })?;
    Ok((HankelContour::new(theta, policy.contour_nodes)?, side))
}

/// E_{α,β}(z) for z left of the path δ(1; θ) with |z| ≥ 1.
pub fn ml_contour(alpha: f64, beta: f64, z: Complex64, contour: &HankelContour) -> Result<Evaluation> {
    ml_contour_with(alpha, beta, z, contour, DEFAULT_EXPLICIT_TERMS, MlPolicy::default().contour_tol)
}

/// As [`ml_contour`] with an explicit number of closed-form terms.
pub fn ml_contour_with(
    alpha: f64,
    beta: f64,
    z: Complex64,
    contour: &HankelContour,
    explicit_terms: u32,
    tol: f64,
) -> Result<Evaluation> {
    if z.norm() < contour.radius {
        return Err(Error::ContourViolation { re: z.re, im: z.im, theta: contour.theta });
    }
    if z.arg().abs() <= contour.theta {
        return Err(Error::ContourViolation { re: z.re, im: z.im, theta: contour.theta });
    }
    hankel_eval(alpha, beta, z, contour, Side::Left, explicit_terms, tol)
}

struct Setup {
    alpha: f64,
    theta: f64,
    /// exponent of ζ in the integrand numerator
    power: f64,
    z: Complex64,
    ray_breaks: Vec<f64>,
    arc_breaks: Vec<f64>,
}

impl Setup {
    fn ray_integrand(&self, u: f64, sign: f64) -> Complex64 {
        let a = self.alpha;
        let th = sign * self.theta;
        let rot = Complex64::from_polar(1.0, th);
        let zeta = rot * u.powf(a);
        let w = Complex64::from_polar(u, th / a);
        // ζ^power dζ/du with ζ = u^α e^{iθ}
        let mag = u.powf(a * self.power + a - 1.0) * a;
        let phase = Complex64::from_polar(mag, self.power * th) * rot;
        w.exp() * phase / (zeta - self.z)
    }

    fn arc_integrand(&self, y: f64) -> Complex64 {
        let zeta = Complex64::from_polar(1.0, y);
        let w = Complex64::from_polar(1.0, y / self.alpha);
        let pw = Complex64::from_polar(1.0, self.power * y);
        w.exp() * pw / (zeta - self.z) * Complex64::new(0.0, 1.0) * zeta
    }

    /// Returns the integral and the integral of the modulus.
    fn integral(&self, panels: usize) -> (Complex64, f64) {
        let mut total = Complex64::new(0.0, 0.0);
        let mut modulus = 0.0;
        for_each_node(&self.ray_breaks, panels, |u, w| {
            let (up, down) = (self.ray_integrand(u, 1.0), self.ray_integrand(u, -1.0));
            total += w * (up - down);
            modulus += w * (up.norm() + down.norm());
        });
        for_each_node(&self.arc_breaks, panels, |y, w| {
            let f = self.arc_integrand(y);
            total += w * f;
            modulus += w * f.norm();
        });
        (total, modulus)
    }
}

fn ray_cutoff(decay: f64, power: f64) -> f64 {
    let q = power.max(0.0);
    let mut u = RAY_DECAY / decay;
    for _ in 0..50 {
        let next = (RAY_DECAY + q * u.max(1.0).ln()) / decay;
        if (next - u).abs() < 1e-9 * u {
            u = next;
            break;
        }
        u = next;
    }
    u.max(2.0)
}

pub(crate) fn hankel_eval(
    alpha: f64,
    beta: f64,
    z: Complex64,
    contour: &HankelContour,
    side: Side,
    explicit_terms: u32,
    tol: f64,
) -> Result<Evaluation> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("contour evaluation needs alpha in (0, 1], got {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    let theta = contour.theta;
    if !(theta > FRAC_PI_2 * alpha && theta < (PI * alpha).min(PI)) {
        return Err(Error::param("theta", format!("need pi*alpha/2 < theta < pi*alpha, got {theta} for alpha = {alpha}")));
    }
    let n = explicit_terms as i32;
    let power = (1.0 - beta) / alpha + n as f64;
    let decay = -(theta / alpha).cos();
    let u_max = ray_cutoff(decay, alpha * power + alpha - 1.0);

    let mut ray_breaks = vec![1.0];
    let u_pole = z.norm().powf(1.0 / alpha);
    if u_pole > 1.0 + 1e-6 && u_pole < u_max - 1e-6 {
        ray_breaks.push(u_pole);
    }
    ray_breaks.push(u_max);
    let mut arc_breaks = vec![-theta];
    let phi = z.arg();
    if phi.abs() < theta - 1e-9 {
        arc_breaks.push(phi);
    }
    arc_breaks.push(theta);
    let setup = Setup { alpha, theta, power, z, ray_breaks, arc_breaks };

    // closed-form part
    let mut explicit = Complex64::new(0.0, 0.0);
    let zinv = z.inv();
    let mut zk = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        zk *= zinv;
        explicit -= zk * rgamma(beta - k as f64 * alpha);
    }
    if side == Side::Right {
        let log_z = z.ln();
        let root = (log_z / alpha).exp();
        let residue = ((1.0 - beta) / alpha * log_z + root).exp() / alpha;
        if !residue.is_finite() {
            return Err(Error::Overflow(format!("exp(z^(1/alpha)) for z = {z}, alpha = {alpha}")));
        }
        explicit += residue;
    }
    let prefactor = (Complex64::new(0.0, 2.0 * PI * alpha) * z.powi(n)).inv();

    let mut panels = (contour.node_count / (3 * PANEL_ORDER)).max(2);
    let (mut coarse, _) = setup.integral(panels);
    loop {
        panels *= 2;
        let (fine, modulus) = setup.integral(panels);
        let value = explicit + prefactor * fine;
        let change = ((fine - coarse) * prefactor).norm();
        let scale = value.norm().max(f64::MIN_POSITIVE);
        // Values far below the integrand scale (exponentially small ones)
        // cannot be resolved relative to themselves; the rounding floor of
        // the quadrature sum is then the honest target.
        let floor = 64.0 * f64::EPSILON * (modulus * prefactor.norm() + explicit.norm());
        if change <= (tol * scale).max(floor) {
            return Ok(Evaluation {
                value,
                error_estimate: change + floor,
                regime: match side {
                    Side::Left => Regime::ContourLeft { theta },
                    Side::Right => Regime::ContourRight { theta },
                },
            });
        }
        if panels >= MAX_PANELS {
            return Err(Error::QuadratureFailure { change: change / scale, nodes: panels * PANEL_ORDER });
        }
        coarse = fine;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_argument_right_of_path() {
        let contour = HankelContour::new(2.0, 64).unwrap();
        let err = ml_contour(0.9, 1.0, c(3.0, 0.5), &contour).unwrap_err();
        assert!(matches!(err, Error::ContourViolation { .. }));
        let err = ml_contour(0.9, 1.0, c(-0.5, 0.0), &contour).unwrap_err();
        assert!(matches!(err, Error::ContourViolation { .. }));
    }

    #[test]
    fn rejects_theta_outside_admissible_band() {
        // pi*alpha/2 = 0.785 for alpha = 0.5: theta = 0.5 is too small
        let contour = HankelContour::new(0.5, 64).unwrap();
        assert!(ml_contour(0.5, 1.0, c(-4.0, 0.0), &contour).is_err());
    }

    #[test]
    fn exponential_through_the_integral() {
        // α = 1 never reaches the contour through the dispatcher; check the
        // representation directly: E_1(z) = e^z.
        let policy = MlPolicy::default();
        for z in [c(-6.0, 0.0), c(-4.0, 5.0), c(-20.0, -3.0)] {
            let contour = HankelContour::for_left_argument(1.0, z, &policy).unwrap();
            let v = ml_contour(1.0, 1.0, z, &contour).unwrap();
            assert!((v.value - z.exp()).norm() < 1e-13, "{z}: {}", v.value);
            assert!(v.error_estimate < 1e-13);
        }
    }

    #[test]
    fn single_and_double_explicit_terms_agree() {
        let policy = MlPolicy::default();
        for (alpha, beta, z) in [(0.5, 1.0, c(-6.0, 1.0)), (0.7, 0.7, c(-8.0, -2.0)), (0.3, 1.0, c(-3.0, 0.0))] {
            let contour = HankelContour::for_left_argument(alpha, z, &policy).unwrap();
            let one = ml_contour_with(alpha, beta, z, &contour, 1, 1e-13).unwrap();
            let two = ml_contour_with(alpha, beta, z, &contour, 2, 1e-13).unwrap();
            let three = ml_contour_with(alpha, beta, z, &contour, 3, 1e-13).unwrap();
            assert!((one.value - two.value).norm() < 1e-11 * two.value.norm());
            assert!((three.value - two.value).norm() < 1e-11 * two.value.norm());
        }
    }

    #[test]
    fn right_side_matches_exponential() {
        let policy = MlPolicy::default();
        let z = c(6.0, 2.0);
        let (contour, side) = choose_contour(1.0, z, &policy).unwrap();
        assert_eq!(side, Side::Right);
        let v = hankel_eval(1.0, 1.0, z, &contour, side, 2, 1e-13).unwrap();
        assert!((v.value - z.exp()).norm() < 1e-12 * z.exp().norm());
    }

    #[test]
    fn contour_choice_respects_band() {
        let policy = MlPolicy::default();
        for alpha in [0.1, 0.45, 0.8, 1.0] {
            for k in 0..24 {
                let phi = -PI + (k as f64 + 0.5) * PI / 12.0;
                let z = Complex64::from_polar(3.0, phi);
                let (contour, side) = choose_contour(alpha, z, &policy).unwrap();
                assert!(contour.theta > FRAC_PI_2 * alpha && contour.theta < PI * alpha);
                match side {
                    Side::Left => assert!(phi.abs() > contour.theta),
                    Side::Right => assert!(phi.abs() < contour.theta),
                }
            }
        }
    }
}
