//! Reference values computed independently of the library.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rug::Float;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// E_{α,β}(z) by the plain power series in MPFR, with MPFR's own gamma
/// function. The largest term is about exp(|z|^{1/α}); the working
/// precision covers that cancellation plus 200 bits.
pub fn ml_oracle(alpha: f64, beta: f64, z: Complex64) -> Complex64 {
    let prec = 200 + (1.5 * z.norm().powf(1.0 / alpha)) as u32;
    let zr = Float::with_val(prec, z.re);
    let zi = Float::with_val(prec, z.im);
    let mut pr = Float::with_val(prec, 1);
    let mut pi = Float::with_val(prec, 0);
    let mut sr = Float::with_val(prec, 0);
    let mut si = Float::with_val(prec, 0);
    let mut small = 0;
    for k in 0..20_000u32 {
        let x = Float::with_val(prec, Float::with_val(prec, alpha) * k) + beta;
        let g = x.gamma();
        let tr = Float::with_val(prec, &pr / &g);
        let ti = Float::with_val(prec, &pi / &g);
        sr += &tr;
        si += &ti;
        let mag = tr.to_f64().abs() + ti.to_f64().abs();
        let sum = sr.to_f64().abs() + si.to_f64().abs();
        if k > 10 && mag <= 1e-40 * sum.max(1e-300) {
            small += 1;
            if small > 5 {
                break;
            }
        }
        let nr = Float::with_val(prec, &pr * &zr) - Float::with_val(prec, &pi * &zi);
        let ni = Float::with_val(prec, &pr * &zi) + Float::with_val(prec, &pi * &zr);
        pr = nr;
        pi = ni;
    }
    c(sr.to_f64(), si.to_f64())
}

/// 1/Γ(x) in MPFR.
pub fn rgamma_oracle(x: f64) -> f64 {
    let g = Float::with_val(256, x).gamma();
    Float::with_val(256, 1 / g).to_f64()
}

/// e^{x²} erfc(x) for x ≥ 0: Maclaurin series of erf below 2, Laplace
/// continued fraction above.
pub fn erfcx(x: f64) -> f64 {
    assert!(x >= 0.0);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    if x < 2.0 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x * x / n;
            let t = term / (2.0 * n + 1.0);
            sum += t;
            if t.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        (x * x).exp() * (1.0 - 2.0 / sqrt_pi * sum)
    } else {
        // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let mut f = x;
        for n in (1..200).rev() {
            f = x + (n as f64 / 2.0) / f;
        }
        1.0 / (sqrt_pi * f)
    }
}

/// exp(A) by scaling and squaring a degree-24 Taylor polynomial.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.norm()).sum::<f64>();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / Complex64::new(2f64.powi(s), 0.0);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}
