//! Forward problem: Fourier-space solutions of both kinds, spatial
//! reconstruction by quadrature, and synthetic observations.
//!
//! With A(ξ) = M⁻¹ΛM the transformed solution decouples mode by mode:
//!
//! ```text
//! û_j(t, ξ) = Σ_l e_l(t) K_{j,l},   K_{j,l} = (M⁻¹)_{j,l} (MΦ̂)_l
//! ```
//!
//! where e_l(t) = E_{β_l}(λ_l t^{β_l}) for Caputo derivatives and
//! t^{β_l-1} E_{β_l,β_l}(λ_l t^{β_l}) for Riemann-Liouville ones.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlfunc::MittagLeffler;
use crate::symbol::{diagonalize, real_or_complex_vec, Diagonalization, FrequencyBox, MatrixSymbol, Polynomial};

/// Largest spatial dimension handled by [`spatial_solution`].
pub const MAX_SPATIAL_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DerivativeKind {
    #[serde(rename = "caputo")]
    Caputo,
    #[serde(rename = "rl", alias = "riemann-liouville")]
    RiemannLiouville,
}

impl DerivativeKind {
    pub fn label(self) -> &'static str {
        match self {
            DerivativeKind::Caputo => "caputo",
            DerivativeKind::RiemannLiouville => "rl",
        }
    }
}

impl fmt::Display for DerivativeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DerivativeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "caputo" => Ok(DerivativeKind::Caputo),
            "rl" | "riemann-liouville" => Ok(DerivativeKind::RiemannLiouville),
            _ => Err(Error::param("kind", format!("expected `caputo` or `rl`, got `{s}`"))),
        }
    }
}

/// Orders β_1..β_m with a common floor β₀ ∈ (0, 1): β₀ ≤ β_l ≤ 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VectorOrderRepr")]
pub struct VectorOrder {
    betas: Vec<f64>,
    floor: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorOrderRepr {
    betas: Vec<f64>,
    floor: f64,
}

impl TryFrom<VectorOrderRepr> for VectorOrder {
    type Error = Error;

    fn try_from(r: VectorOrderRepr) -> Result<Self> {
        VectorOrder::new(r.betas, r.floor)
    }
}

impl VectorOrder {
    pub fn new(betas: Vec<f64>, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 1.0) {
            return Err(Error::param("beta0", format!("must lie in (0, 1), got {floor}")));
        }
        if betas.is_empty() {
            return Err(Error::param("order", "needs at least one component"));
        }
        for (l, &b) in betas.iter().enumerate() {
            if !(b >= floor && b <= 1.0) {
                return Err(Error::param("order", format!("beta_{} = {b} outside [{floor}, 1]", l + 1)));
            }
        }
        Ok(Self { betas, floor })
    }

    /// Floor set to min(β) (or ½ if that is 1).
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        let lo = betas.iter().cloned().fold(1.0, f64::min);
        Self::new(betas, if lo < 1.0 { lo } else { 0.5 })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }
}

/// Closed-form initial spectra. Each component is the profile times its
/// own amplitude (or polynomial).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataPreset {
    /// a_k exp(-|ξ - c|² / (2w²)), cut off at the box boundary.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(deserialize_with = "real_or_complex_vec")]
        amplitudes: Vec<Complex64>,
    },
    /// a_k (1 + cos(π|ξ - c|/r))/2 inside the ball of radius r.
    RaisedCosine {
        center: Vec<f64>,
        radius: f64,
        #[serde(deserialize_with = "real_or_complex_vec")]
        amplitudes: Vec<Complex64>,
    },
    /// p_k(ξ) on the sub-box [lower, upper], zero elsewhere.
    IndicatorPolynomial { lower: Vec<f64>, upper: Vec<f64>, polynomials: Vec<Polynomial> },
}

impl DataPreset {
    pub fn components(&self) -> usize {
        match self {
            DataPreset::Gaussian { amplitudes, .. } | DataPreset::RaisedCosine { amplitudes, .. } => amplitudes.len(),
            DataPreset::IndicatorPolynomial { polynomials, .. } => polynomials.len(),
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        let dims_ok = match self {
            DataPreset::Gaussian { center, width, .. } => {
                if !(*width > 0.0) {
                    return Err(Error::param("width", "must be positive"));
                }
                center.len() == dim
            }
            DataPreset::RaisedCosine { center, radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::param("radius", "must be positive"));
                }
                center.len() == dim
            }
            DataPreset::IndicatorPolynomial { lower, upper, polynomials } => {
                for p in polynomials {
                    if p.terms.iter().any(|t| t.powers.len() != dim) {
                        return Err(Error::DimensionMismatch("preset polynomial multi-index".into()));
                    }
                }
                lower.len() == dim && upper.len() == dim
            }
        };
        if !dims_ok {
            return Err(Error::DimensionMismatch(format!("preset geometry must be {dim}-dimensional")));
        }
        if self.components() == 0 {
            return Err(Error::param("preset", "needs at least one component"));
        }
        Ok(())
    }

    /// Value of component k at ξ.
    pub fn eval(&self, k: usize, xi: &[f64]) -> Complex64 {
        let dist2 = |c: &[f64]| xi.iter().zip(c).map(|(x, c)| (x - c) * (x - c)).sum::<f64>();
        match self {
            DataPreset::Gaussian { center, width, amplitudes } => {
                amplitudes[k] * (-dist2(center) / (2.0 * width * width)).exp()
            }
            DataPreset::RaisedCosine { center, radius, amplitudes } => {
                let r = dist2(center).sqrt();
                if r < *radius {
                    amplitudes[k] * 0.5 * (1.0 + (PI * r / radius).cos())
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            DataPreset::IndicatorPolynomial { lower, upper, polynomials } => {
                let inside = xi.iter().enumerate().all(|(a, &x)| x >= lower[a] && x <= upper[a]);
                if inside {
                    polynomials[k].eval(xi)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }
}

/// Initial spectrum Φ̂ tabulated on the grid, node-major (m values per
/// node). Off-node values are interpolated multilinearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandLimitedData {
    pub domain: FrequencyBox,
    pub m: usize,
    pub values: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<DataPreset>,
}

impl BandLimitedData {
    pub fn tabulated(domain: FrequencyBox, m: usize, values: Vec<Complex64>) -> Result<Self> {
        domain.validate()?;
        if m == 0 {
            return Err(Error::param("m", "must be positive"));
        }
        if values.len() != domain.node_count() * m {
            return Err(Error::DimensionMismatch(format!(
                "spectrum has {} values, grid needs {}",
                values.len(),
                domain.node_count() * m
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::param("spectrum", "values must be finite"));
        }
        Ok(Self { domain, m, values, preset: None })
    }

    pub fn from_preset(domain: FrequencyBox, preset: DataPreset) -> Result<Self> {
        domain.validate()?;
        preset.check(domain.dim())?;
        let m = preset.components();
        let values = domain.nodes().flat_map(|xi| (0..m).map(|k| preset.eval(k, &xi)).collect::<Vec<_>>()).collect();
        let mut data = Self::tabulated(domain, m, values)?;
        data.preset = Some(preset);
        Ok(data)
    }

    pub fn at_node(&self, k: usize) -> &[Complex64] {
        &self.values[k * self.m..(k + 1) * self.m]
    }

    /// Φ̂(ξ): exact at nodes, multilinear in between.
    pub fn at(&self, xi: &[f64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.m];
        for (k, w) in self.domain.interpolation_weights(xi)? {
            if w == 1.0 {
                return Ok(self.at_node(k).to_vec());
            }
            for (o, v) in out.iter_mut().zip(self.at_node(k)) {
                *o += w * v;
            }
        }
        Ok(out)
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("{what} has {got} components, expected {want}")));
    }
    Ok(())
}

/// K_{j,l} = (M⁻¹)_{j,l} (MΦ̂)_l.
pub fn k_coeff(diag: &Diagonalization, phi_hat: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let n = diag.dim();
    check_len("initial spectrum", phi_hat.len(), n)?;
    let proj = &diag.m * DVector::from_column_slice(phi_hat);
    Ok(DMatrix::from_fn(n, n, |j, l| diag.m_inv[(j, l)] * proj[l]))
}

/// e_l(t) for one mode.
pub fn mode_factor(ml: &MittagLeffler, kind: DerivativeKind, lambda: Complex64, beta: f64, t: f64) -> Result<Complex64> {
    match kind {
        DerivativeKind::Caputo => {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidTime(t));
            }
            ml.one(beta, lambda * t.powf(beta))
        }
        DerivativeKind::RiemannLiouville => {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidTime(t));
            }
            Ok(ml.two(beta, beta, lambda * t.powf(beta))? * t.powf(beta - 1.0))
        }
    }
}

/// û(t, ξ) for the diagonalization at ξ and Φ̂(ξ).
pub fn fourier_solution(
    ml: &MittagLeffler,
    kind: DerivativeKind,
    diag: &Diagonalization,
    phi_hat: &[Complex64],
    order: &VectorOrder,
    t: f64,
) -> Result<Vec<Complex64>> {
    check_len("order", order.len(), diag.dim())?;
    let k = k_coeff(diag, phi_hat)?;
    let e = diag
        .eigenvalues
        .iter()
        .zip(order.betas())
        .map(|(&lambda, &beta)| mode_factor(ml, kind, lambda, beta, t))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..diag.dim()).map(|j| (0..diag.dim()).map(|l| e[l] * k[(j, l)]).sum()).collect())
}

pub fn fourier_solution_caputo(diag: &Diagonalization, phi_hat: &[Complex64], order: &VectorOrder, t: f64) -> Result<Vec<Complex64>> {
    fourier_solution(&MittagLeffler::default(), DerivativeKind::Caputo, diag, phi_hat, order, t)
}

pub fn fourier_solution_rl(diag: &Diagonalization, phi_hat: &[Complex64], order: &VectorOrder, t: f64) -> Result<Vec<Complex64>> {
    fourier_solution(&MittagLeffler::default(), DerivativeKind::RiemannLiouville, diag, phi_hat, order, t)
}

fn check_pair(symbol: &MatrixSymbol, data: &BandLimitedData) -> Result<()> {
    if symbol.domain != data.domain {
        return Err(Error::DimensionMismatch("symbol and data live on different grids".into()));
    }
    check_len("initial spectrum", data.m, symbol.m)
}

/// û(t, ·) at every grid node, node-major.
pub fn solution_field(
    ml: &MittagLeffler,
    symbol: &MatrixSymbol,
    data: &BandLimitedData,
    order: &VectorOrder,
    t: f64,
    kind: DerivativeKind,
) -> Result<Vec<Complex64>> {
    check_pair(symbol, data)?;
    let per_node = (0..symbol.domain.node_count())
        .into_par_iter()
        .map(|k| {
            let diag = diagonalize(symbol, &symbol.domain.node(k))?;
            fourier_solution(ml, kind, &diag, data.at_node(k), order, t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_node.concat())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialValue {
    pub values: Vec<Complex64>,
    /// |I_h - I_2h| over the components.
    pub error_estimate: f64,
}

/// Trapezoid weights along one axis using every other node (plus the last).
fn coarse_axis_weights(b: &FrequencyBox, axis: usize) -> Vec<f64> {
    let p = b.points[axis];
    let mut sel: Vec<usize> = (0..p).step_by(2).collect();
    if *sel.last().unwrap() != p - 1 {
        sel.push(p - 1);
    }
    let mut w = vec![0.0; p];
    for pair in sel.windows(2) {
        let h = b.axis_value(axis, pair[1]) - b.axis_value(axis, pair[0]);
        w[pair[0]] += 0.5 * h;
        w[pair[1]] += 0.5 * h;
    }
    w
}

/// (2π)^{-n} Σ_ξ w(ξ) û(ξ) e^{ix·ξ} over a precomputed field.
pub fn spatial_from_field(domain: &FrequencyBox, m: usize, field: &[Complex64], x: &[f64]) -> Result<SpatialValue> {
    let n = domain.dim();
    if n > MAX_SPATIAL_DIM {
        return Err(Error::param("dim", format!("spatial reconstruction supports n <= {MAX_SPATIAL_DIM}")));
    }
    check_len("x", x.len(), n)?;
    check_len("field", field.len(), domain.node_count() * m)?;
    let coarse: Vec<Vec<f64>> = (0..n).map(|a| coarse_axis_weights(domain, a)).collect();
    let mut fine = vec![Complex64::new(0.0, 0.0); m];
    let mut rough = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..domain.node_count() {
        let idx = domain.multi_index(k);
        let xi = domain.node(k);
        let phase = Complex64::from_polar(1.0, x.iter().zip(&xi).map(|(a, b)| a * b).sum());
        let wf = domain.trapezoid_weight(k);
        let wc: f64 = idx.iter().enumerate().map(|(a, &i)| coarse[a][i]).product();
        for j in 0..m {
            let v = field[k * m + j] * phase;
            fine[j] += wf * v;
            rough[j] += wc * v;
        }
    }
    let scale = (2.0 * PI).powi(-(n as i32));
    let error_estimate = fine.iter().zip(&rough).map(|(f, r)| ((f - r) * scale).norm()).fold(0.0, f64::max);
    Ok(SpatialValue { values: fine.into_iter().map(|v| v * scale).collect(), error_estimate })
}

/// u(t, x) by trapezoid quadrature of the inverse Fourier integral over the box.
pub fn spatial_solution(
    symbol: &MatrixSymbol,
    data: &BandLimitedData,
    order: &VectorOrder,
    t: f64,
    x: &[f64],
    kind: DerivativeKind,
) -> Result<SpatialValue> {
    if symbol.domain.dim() > MAX_SPATIAL_DIM {
        return Err(Error::param("dim", format!("spatial reconstruction supports n <= {MAX_SPATIAL_DIM}")));
    }
    let field = solution_field(&MittagLeffler::default(), symbol, data, order, t, kind)?;
    spatial_from_field(&symbol.domain, symbol.m, &field, x)
}

/// û_j(t₀, ξ⁰) = d_j together with where it was taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationRecord {
    pub t0: f64,
    pub xi0: Vec<f64>,
    pub kind: DerivativeKind,
    pub d: Vec<Complex64>,
    #[serde(default)]
    pub note: String,
}

impl ObservationRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 >= 1.0 && self.t0.is_finite()) {
            return Err(Error::InvalidTime(self.t0));
        }
        if self.d.is_empty() || self.d.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::param("d", "needs finite values"));
        }
        Ok(())
    }
}

pub fn observe_with(
    ml: &MittagLeffler,
    symbol: &MatrixSymbol,
    data: &BandLimitedData,
    order: &VectorOrder,
    t0: f64,
    xi0: &[f64],
    kind: DerivativeKind,
) -> Result<ObservationRecord> {
    check_pair(symbol, data)?;
    if !(t0 >= 1.0 && t0.is_finite()) {
        return Err(Error::InvalidTime(t0));
    }
    if !symbol.domain.contains(xi0) {
        return Err(Error::OutOfDomain { xi: xi0.to_vec() });
    }
    let diag = diagonalize(symbol, xi0)?;
    let phi = data.at(xi0)?;
    let d = fourier_solution(ml, kind, &diag, &phi, order, t0)?;
    let note = format!("synthetic, orders {:?}", order.betas());
    Ok(ObservationRecord { t0, xi0: xi0.to_vec(), kind, d, note })
}

pub fn observe(
    symbol: &MatrixSymbol,
    data: &BandLimitedData,
    order: &VectorOrder,
    t0: f64,
    xi0: &[f64],
    kind: DerivativeKind,
) -> Result<ObservationRecord> {
    observe_with(&MittagLeffler::default(), symbol, data, order, t0, xi0, kind)
}
