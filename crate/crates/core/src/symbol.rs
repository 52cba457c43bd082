//! Matrix symbols A(ξ) on a bounded frequency box and their pointwise
//! diagonalization A = M⁻¹ΛM.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::forward::DerivativeKind;
use crate::mlfunc::{rl_sign, RL_SIGN_TOL};

/// Symmetry is tested against this multiple of (1 + max |A_jk|).
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Reconstruction and inverse checks on the factors.
pub const FACTOR_TOL: f64 = 1e-10;
/// Largest accepted condition number of M.
pub const MAX_FACTOR_COND: f64 = 1e12;
/// Eigenvalues closer than this (relative to 1 + max |λ|) count as equal.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Axis-aligned box with a uniform tabulation grid that includes the
/// endpoints. Nodes are numbered row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Vec<usize>,
}

impl FrequencyBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let b = Self { lower, upper, points };
        b.validate()?;
        Ok(b)
    }

    /// The same interval and resolution on every axis.
    pub fn cube(dim: usize, lower: f64, upper: f64, points: usize) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim], vec![points; dim])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lower.len();
        if n == 0 {
            return Err(Error::param("box", "dimension must be positive"));
        }
        if self.upper.len() != n || self.points.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "box bounds/points have lengths {}, {}, {}",
                n,
                self.upper.len(),
                self.points.len()
            )));
        }
        for a in 0..n {
            let (lo, hi) = (self.lower[a], self.upper[a]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::param("box", format!("axis {a}: need finite lower < upper, got [{lo}, {hi}]")));
            }
            if self.points[a] < 2 {
                return Err(Error::param("box", format!("axis {a}: need at least 2 points")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn node_count(&self) -> usize {
        self.points.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.points[axis] - 1) as f64
    }

    pub fn axis_value(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.points[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.points[a];
            flat /= self.points[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.points).fold(0, |acc, (&i, &p)| acc * p + i)
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().enumerate().map(|(a, &i)| self.axis_value(a, i)).collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.node_count()).map(|k| self.node(k))
    }

    fn check_dim(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("frequency has {} components, box has {}", xi.len(), self.dim())));
        }
        Ok(())
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.dim()
            && xi.iter().enumerate().all(|(a, &x)| {
                let slack = 1e-12 * (self.upper[a] - self.lower[a]);
                x.is_finite() && x >= self.lower[a] - slack && x <= self.upper[a] + slack
            })
    }

    /// Index of the node at ξ, allowing 1e-9 of a grid step of slack.
    pub fn node_index(&self, xi: &[f64]) -> Option<usize> {
        if !self.contains(xi) {
            return None;
        }
        let mut idx = Vec::with_capacity(self.dim());
        for (a, &x) in xi.iter().enumerate() {
            let h = self.spacing(a);
            let i = ((x - self.lower[a]) / h).round().clamp(0.0, (self.points[a] - 1) as f64) as usize;
            if (x - self.axis_value(a, i)).abs() > 1e-9 * h {
                return None;
            }
            idx.push(i);
        }
        Some(self.flat_index(&idx))
    }

    /// Multilinear interpolation weights at ξ. A node gets the single
    /// weight 1.
    pub fn interpolation_weights(&self, xi: &[f64]) -> Result<Vec<(usize, f64)>> {
        self.check_dim(xi)?;
        if !self.contains(xi) {
            return Err(Error::OutOfDomain { xi: xi.to_vec() });
        }
        if let Some(k) = self.node_index(xi) {
            return Ok(vec![(k, 1.0)]);
        }
        let mut per_axis = Vec::with_capacity(self.dim());
        for (a, &x) in xi.iter().enumerate() {
            let h = self.spacing(a);
            let s = ((x - self.lower[a]) / h).clamp(0.0, (self.points[a] - 1) as f64);
            let i = (s.floor() as usize).min(self.points[a] - 2);
            let f = s - i as f64;
            per_axis.push([(i, 1.0 - f), (i + 1, f)]);
        }
        let mut out = Vec::with_capacity(1 << self.dim());
        for corner in 0..(1usize << self.dim()) {
            let mut idx = Vec::with_capacity(self.dim());
            let mut w = 1.0;
            for (a, pair) in per_axis.iter().enumerate() {
                let (i, wa) = pair[(corner >> a) & 1];
                idx.push(i);
                w *= wa;
            }
            if w != 0.0 {
                out.push((self.flat_index(&idx), w));
            }
        }
        Ok(out)
    }

    /// Product trapezoid weight of a node.
    pub fn trapezoid_weight(&self, flat: usize) -> f64 {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| {
                let h = self.spacing(a);
                if i == 0 || i + 1 == self.points[a] {
                    0.5 * h
                } else {
                    h
                }
            })
            .product()
    }
}

/// c·ξ^p for a multi-index p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub powers: Vec<u32>,
    #[serde(deserialize_with = "real_or_complex")]
    pub coeff: Complex64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ComplexRepr {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexRepr> for Complex64 {
    fn from(r: ComplexRepr) -> Self {
        match r {
            ComplexRepr::Real(x) => Complex64::new(x, 0.0),
            ComplexRepr::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Accepts `2.5` as well as `[re, im]`.
pub(crate) fn real_or_complex<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
    Ok(ComplexRepr::deserialize(d)?.into())
}

pub(crate) fn real_or_complex_vec<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Complex64>, D::Error> {
    Ok(Vec::<ComplexRepr>::deserialize(d)?.into_iter().map(Into::into).collect())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::from_terms(&[(vec![0; dim], c)])
    }

    pub fn from_terms(terms: &[(Vec<u32>, f64)]) -> Self {
        Self {
            terms: terms.iter().map(|(p, c)| Monomial { powers: p.clone(), coeff: Complex64::new(*c, 0.0) }).collect(),
        }
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.powers.iter().zip(xi).map(|(&p, &x)| x.powi(p as i32)).product::<f64>())
            .sum()
    }

    fn check(&self, dim: usize, what: &str) -> Result<()> {
        for t in &self.terms {
            if t.powers.len() != dim {
                return Err(Error::DimensionMismatch(format!("{what}: multi-index {:?} in dimension {dim}", t.powers)));
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::param("symbol", format!("{what}: non-finite coefficient")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolKind {
    /// Real symmetric polynomial entries, diagonalized numerically.
    Polynomial { entries: Vec<Vec<Polynomial>> },
    /// Closed-form factors with A = M⁻¹ΛM, verified by reconstruction.
    Factored {
        m_inv: Vec<Vec<Polynomial>>,
        lambda: Vec<Polynomial>,
        #[serde(rename = "m_matrix")]
        m: Vec<Vec<Polynomial>>,
    },
    /// Values at the grid nodes, node-major, each node an m×m row-major block.
    Tabulated { values: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSymbol {
    pub m: usize,
    pub domain: FrequencyBox,
    #[serde(flatten)]
    pub kind: SymbolKind,
}

fn square(rows: &[Vec<Polynomial>], m: usize, dim: usize, what: &str) -> Result<()> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch(format!("{what} must be {m}x{m}")));
    }
    rows.iter().flatten().try_for_each(|p| p.check(dim, what))
}

fn eval_matrix(rows: &[Vec<Polynomial>], xi: &[f64]) -> DMatrix<Complex64> {
    let m = rows.len();
    DMatrix::from_fn(m, m, |j, k| rows[j][k].eval(xi))
}

impl MatrixSymbol {
    pub fn new(m: usize, domain: FrequencyBox, kind: SymbolKind) -> Result<Self> {
        let s = Self { m, domain, kind };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.m == 0 {
            return Err(Error::param("m", "must be positive"));
        }
        let dim = self.domain.dim();
        match &self.kind {
            SymbolKind::Polynomial { entries } => square(entries, self.m, dim, "entries"),
            SymbolKind::Factored { m_inv, lambda, m } => {
                square(m_inv, self.m, dim, "m_inv")?;
                square(m, self.m, dim, "m")?;
                if lambda.len() != self.m {
                    return Err(Error::DimensionMismatch(format!("lambda must have {} entries", self.m)));
                }
                lambda.iter().try_for_each(|p| p.check(dim, "lambda"))
            }
            SymbolKind::Tabulated { values } => {
                let want = self.domain.node_count() * self.m * self.m;
                if values.len() != want {
                    return Err(Error::DimensionMismatch(format!("tabulated symbol has {} values, grid needs {want}", values.len())));
                }
                if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(Error::param("symbol", "tabulated values must be finite"));
                }
                Ok(())
            }
        }
    }

    /// The 2×2 system with symbol [[-ξ², -ξ], [-ξ, -ξ²]] on a line, given
    /// by its closed-form factors
    /// M⁻¹ = [[½, ½], [-½, ½]], Λ = diag(-ξ²+ξ, -ξ²-ξ), M = [[1, -1], [1, 1]].
    pub fn coupled_pair(domain: FrequencyBox) -> Result<Self> {
        let c = |v: f64| Polynomial::constant(1, v);
        let kind = SymbolKind::Factored {
            m_inv: vec![vec![c(0.5), c(0.5)], vec![c(-0.5), c(0.5)]],
            lambda: vec![
                Polynomial::from_terms(&[(vec![2], -1.0), (vec![1], 1.0)]),
                Polynomial::from_terms(&[(vec![2], -1.0), (vec![1], -1.0)]),
            ],
            m: vec![vec![c(1.0), c(-1.0)], vec![c(1.0), c(1.0)]],
        };
        if domain.dim() != 1 {
            return Err(Error::DimensionMismatch("the coupled pair lives on a line".into()));
        }
        Self::new(2, domain, kind)
    }

    /// The same symbol through its polynomial entries.
    pub fn coupled_pair_entries(domain: FrequencyBox) -> Result<Self> {
        let diag = Polynomial::from_terms(&[(vec![2], -1.0)]);
        let off = Polynomial::from_terms(&[(vec![1], -1.0)]);
        let kind = SymbolKind::Polynomial { entries: vec![vec![diag.clone(), off.clone()], vec![off, diag]] };
        Self::new(2, domain, kind)
    }

    fn raw(&self, xi: &[f64]) -> Result<DMatrix<Complex64>> {
        self.domain.check_dim(xi)?;
        if !self.domain.contains(xi) {
            return Err(Error::OutOfDomain { xi: xi.to_vec() });
        }
        Ok(match &self.kind {
            SymbolKind::Polynomial { entries } => eval_matrix(entries, xi),
            SymbolKind::Factored { m_inv, lambda, m } => {
                let lam: Vec<Complex64> = lambda.iter().map(|p| p.eval(xi)).collect();
                eval_matrix(m_inv, xi) * DMatrix::from_diagonal(&lam.into()) * eval_matrix(m, xi)
            }
            SymbolKind::Tabulated { values } => {
                let k = self.domain.node_index(xi).ok_or_else(|| Error::OffGrid { xi: xi.to_vec() })?;
                let mm = self.m * self.m;
                DMatrix::from_row_slice(self.m, self.m, &values[k * mm..(k + 1) * mm])
            }
        })
    }
}

fn inf_norm(a: &DMatrix<Complex64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// A(ξ), checked for symmetry.
pub fn evaluate_symbol(symbol: &MatrixSymbol, xi: &[f64]) -> Result<DMatrix<Complex64>> {
    let a = symbol.raw(xi)?;
    let scale = 1.0 + a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for j in 0..symbol.m {
        for k in (j + 1)..symbol.m {
            let gap = (a[(j, k)] - a[(k, j)]).norm();
            if gap > SYMMETRY_TOL * scale {
                return Err(Error::NonSymmetric { xi: xi.to_vec(), row: j, col: k, gap });
            }
        }
    }
    Ok(a)
}

/// A(ξ) = M⁻¹ΛM with eigenvalues ordered by descending real part, then
/// descending imaginary part. Column l of M⁻¹ is the eigenvector of λ_l.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagonalization {
    pub xi: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub m: DMatrix<Complex64>,
    pub m_inv: DMatrix<Complex64>,
    /// Condition number of M in the spectral norm.
    pub cond: f64,
}

fn eigen_order(a: &Complex64, b: &Complex64) -> Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

impl Diagonalization {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        &self.m_inv * DMatrix::from_diagonal(&self.eigenvalues.clone().into()) * &self.m
    }

    /// Orders the factors, then checks them against `a`.
    pub fn from_factors(
        xi: &[f64],
        a: &DMatrix<Complex64>,
        eigenvalues: Vec<Complex64>,
        m: DMatrix<Complex64>,
        m_inv: DMatrix<Complex64>,
    ) -> Result<Self> {
        let n = eigenvalues.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|&i, &j| eigen_order(&eigenvalues[i], &eigenvalues[j]));
        let eigenvalues: Vec<Complex64> = perm.iter().map(|&i| eigenvalues[i]).collect();
        let m = DMatrix::from_fn(n, n, |r, c| m[(perm[r], c)]);
        let m_inv = DMatrix::from_fn(n, n, |r, c| m_inv[(r, perm[c])]);

        let sv = m.clone().svd(false, false).singular_values;
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        let fail = |reason: String| Error::NotDiagonalizable { xi: xi.to_vec(), reason };
        if !(cond <= MAX_FACTOR_COND) {
            return Err(fail(format!("eigenvector matrix has condition number {cond:e}")));
        }
        let d = Self { xi: xi.to_vec(), eigenvalues, m, m_inv, cond };
        let rec = inf_norm(&(d.reconstruct() - a));
        if rec > FACTOR_TOL * (1.0 + inf_norm(a)) {
            return Err(fail(format!("reconstruction error {rec:e}")));
        }
        let inv = inf_norm(&(&d.m * &d.m_inv - DMatrix::identity(n, n)));
        if inv > FACTOR_TOL {
            return Err(fail(format!("M·M⁻¹ differs from the identity by {inv:e}")));
        }
        Ok(d)
    }
}

/// Diagonalizes A(ξ): symmetric eigendecomposition for polynomial and
/// tabulated symbols (real entries required), the supplied factors for
/// factored ones.
pub fn diagonalize(symbol: &MatrixSymbol, xi: &[f64]) -> Result<Diagonalization> {
    let a = evaluate_symbol(symbol, xi)?;
    let n = symbol.m;
    if let SymbolKind::Factored { m_inv, lambda, m } = &symbol.kind {
        let lam = lambda.iter().map(|p| p.eval(xi)).collect();
        return Diagonalization::from_factors(xi, &a, lam, eval_matrix(m, xi), eval_matrix(m_inv, xi));
    }
    let scale = 1.0 + inf_norm(&a);
    if a.iter().any(|v| v.im.abs() > SYMMETRY_TOL * scale) {
        return Err(Error::NotDiagonalizable {
            xi: xi.to_vec(),
            reason: "complex entries need a factored symbol".into(),
        });
    }
    let real = DMatrix::from_fn(n, n, |j, k| 0.5 * (a[(j, k)].re + a[(k, j)].re));
    let eig = SymmetricEigen::new(real);
    let mut q = eig.eigenvectors;
    // fix the sign: the largest component of every eigenvector is positive
    for mut col in q.column_iter_mut() {
        let mut big = 0;
        for i in 0..n {
            if col[i].abs() > col[big].abs() + 1e-12 {
                big = i;
            }
        }
        if col[big] < 0.0 {
            col.neg_mut();
        }
    }
    let lam = eig.eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let q = q.map(|v| Complex64::new(v, 0.0));
    Diagonalization::from_factors(xi, &a, lam, q.transpose(), q)
}

/// Pairs (i, j), i < j, of coinciding eigenvalues.
pub fn degenerate_pairs(eigenvalues: &[Complex64]) -> Vec<(usize, usize)> {
    let scale = 1.0 + eigenvalues.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for i in 0..eigenvalues.len() {
        for j in (i + 1)..eigenvalues.len() {
            if (eigenvalues[i] - eigenvalues[j]).norm() <= DEGENERACY_TOL * scale {
                out.push((i, j));
            }
        }
    }
    out
}

/// Grid nodes at which two eigenvalues cross; the ordering may switch
/// branches there.
pub fn crossing_nodes(symbol: &MatrixSymbol) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for k in 0..symbol.domain.node_count() {
        let d = diagonalize(symbol, &symbol.domain.node(k))?;
        if !degenerate_pairs(&d.eigenvalues).is_empty() {
            out.push(k);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCondition {
    pub index: usize,
    pub lambda: Complex64,
    pub arg: f64,
    /// |arg λ| - π/2
    pub spectral_margin: f64,
    pub spectral_ok: bool,
    /// |Re λ| - |Im λ|; Riemann-Liouville only.
    pub sign_gap: Option<f64>,
    pub sign_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub xi: Vec<f64>,
    pub kind: DerivativeKind,
    pub margin_tol: f64,
    pub modes: Vec<ModeCondition>,
    pub degenerate: Vec<(usize, usize)>,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.first_failure().is_none()
    }

    /// The error a solver would raise for this report, if any.
    pub fn first_failure(&self) -> Option<Error> {
        for c in &self.modes {
            if !c.spectral_ok {
                return Some(Error::SpectralConditionViolation { index: c.index, re: c.lambda.re, im: c.lambda.im });
            }
        }
        for c in &self.modes {
            if c.sign_ok == Some(false) {
                return Some(Error::DegenerateSignCondition { index: c.index, re: c.lambda.re, im: c.lambda.im });
            }
        }
        self.degenerate
            .first()
            .map(|&(first, second)| Error::DegenerateEigenvalues { xi: self.xi.clone(), first, second })
    }
}

pub fn check_conditions(diag: &Diagonalization, kind: DerivativeKind) -> ConditionReport {
    check_conditions_with(diag, kind, 0.0)
}

/// As [`check_conditions`], requiring |arg λ| > π/2 + `margin_tol`.
pub fn check_conditions_with(diag: &Diagonalization, kind: DerivativeKind, margin_tol: f64) -> ConditionReport {
    let modes = diag
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(index, &lambda)| {
            let arg = lambda.arg();
            let spectral_margin = arg.abs() - FRAC_PI_2;
            let (sign_gap, sign_ok) = match kind {
                DerivativeKind::Caputo => (None, None),
                DerivativeKind::RiemannLiouville => {
                    (Some(lambda.re.abs() - lambda.im.abs()), Some(rl_sign(lambda, RL_SIGN_TOL).is_some()))
                }
            };
            ModeCondition {
                index,
                lambda,
                arg,
                spectral_margin,
                spectral_ok: lambda.norm() > 0.0 && spectral_margin > margin_tol,
                sign_gap,
                sign_ok,
            }
        })
        .collect();
    ConditionReport { xi: diag.xi.clone(), kind, margin_tol, modes, degenerate: degenerate_pairs(&diag.eigenvalues) }
}
