//! Bessel functions of the first and second kind (orders 0 and 1) and the
//! first-kind Hankel functions built from them.
//!
//! Below [`SERIES_CROSSOVER`] the ascending power series is summed in
//! double-double arithmetic, which keeps the alternating terms (up to
//! ~4e7 in magnitude at the crossover) from cancelling away the answer.
//! Above it the Hankel large-argument expansion in amplitude/phase form is
//! used, truncated at its smallest term.

mod dd;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use dd::Dd;

/// Switch point between the power series and the asymptotic expansion.
///
/// The smallest term of the asymptotic series is roughly `exp(-2x)`, so at
/// 20 it is ~4e-18 and both branches agree to rounding.
pub const SERIES_CROSSOVER: f64 = 20.0;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Relative size below which a series term no longer matters.
const SERIES_TAIL: f64 = 1e-34;

fn check_nonnegative(x: f64, name: &str) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("{name}: argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}

fn check_positive(x: f64, name: &str) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("{name}: argument must be finite and > 0, got {x}")));
    }
    Ok(())
}

/// `J₀(x)` for finite `x ≥ 0`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check_nonnegative(x, "bessel_j0")?;
    Ok(j0(x))
}

/// `J₁(x)` for finite `x ≥ 0`.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check_nonnegative(x, "bessel_j1")?;
    Ok(j1(x))
}

/// `Y₀(x)` for finite `x > 0`. Logarithmically singular at the origin.
pub fn bessel_y0(x: f64) -> Result<f64> {
    check_positive(x, "bessel_y0")?;
    Ok(y0(x))
}

/// `Y₁(x)` for finite `x > 0`.
pub fn bessel_y1(x: f64) -> Result<f64> {
    check_positive(x, "bessel_y1")?;
    Ok(y1(x))
}

/// `H₀⁽¹⁾(x) = J₀(x) + j·Y₀(x)` for `x > 0`.
pub fn hankel0_first(x: f64) -> Result<Complex64> {
    check_positive(x, "hankel0_first")?;
    Ok(h0(x))
}

/// `H₁⁽¹⁾(x) = J₁(x) + j·Y₁(x)` for `x > 0`.
pub fn hankel1_first(x: f64) -> Result<Complex64> {
    check_positive(x, "hankel1_first")?;
    Ok(h1(x))
}

// Unchecked variants for inner loops where the argument is a distance
// times a positive frequency.

#[inline]
pub(crate) fn j0(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < SERIES_CROSSOVER {
        series_j0(x).to_f64()
    } else {
        asymptotic(x, 0).0
    }
}

#[inline]
pub(crate) fn j1(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < SERIES_CROSSOVER {
        series_j1(x).to_f64()
    } else {
        asymptotic(x, 1).0
    }
}

pub(crate) fn y0(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < SERIES_CROSSOVER {
        series_y0(x)
    } else {
        asymptotic(x, 0).1
    }
}

pub(crate) fn y1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < SERIES_CROSSOVER {
        series_y1(x)
    } else {
        asymptotic(x, 1).1
    }
}

pub(crate) fn h0(x: f64) -> Complex64 {
    if x < SERIES_CROSSOVER {
        Complex64::new(series_j0(x).to_f64(), series_y0(x))
    } else {
        let (j, y) = asymptotic(x, 0);
        Complex64::new(j, y)
    }
}

pub(crate) fn h1(x: f64) -> Complex64 {
    if x < SERIES_CROSSOVER {
        Complex64::new(series_j1(x).to_f64(), series_y1(x))
    } else {
        let (j, y) = asymptotic(x, 1);
        Complex64::new(j, y)
    }
}

/// Terms `t_k = (-x²/4)^k / (k!)²` of the J₀ series, fed to `visit` until
/// they are negligible.
fn j0_terms(x: f64, mut visit: impl FnMut(usize, Dd)) {
    let q = Dd::square_f64(0.5 * x).neg();
    let mut term = Dd::from_f64(1.0);
    visit(0, term);
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        term = term.mul(q).div_f64(kf * kf);
        visit(k, term);
        if kf > 0.5 * x && term.abs_hi() < SERIES_TAIL {
            break;
        }
        k += 1;
    }
}

/// Terms `s_k = (x/2)·(-x²/4)^k / (k!(k+1)!)` of the J₁ series.
fn j1_terms(x: f64, mut visit: impl FnMut(usize, Dd)) {
    let q = Dd::square_f64(0.5 * x).neg();
    let mut term = Dd::from_f64(0.5 * x);
    visit(0, term);
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        term = term.mul(q).div_f64(kf * (kf + 1.0));
        visit(k, term);
        if kf > 0.5 * x && term.abs_hi() < SERIES_TAIL {
            break;
        }
        k += 1;
    }
}

fn series_j0(x: f64) -> Dd {
    let mut sum = Dd::ZERO;
    j0_terms(x, |_, t| sum = sum.add(t));
    sum
}

fn series_j1(x: f64) -> Dd {
    let mut sum = Dd::ZERO;
    j1_terms(x, |_, t| sum = sum.add(t));
    sum
}

// Y₀(x) = (2/π)[(ln(x/2) + γ)·J₀(x) − Σ_{k≥1} H_k t_k]
fn series_y0(x: f64) -> f64 {
    let mut j = Dd::ZERO;
    let mut weighted = Dd::ZERO;
    let mut harmonic = Dd::ZERO;
    j0_terms(x, |k, t| {
        j = j.add(t);
        if k > 0 {
            harmonic = harmonic.add(Dd::from_f64(1.0).div_f64(k as f64));
            weighted = weighted.add(harmonic.mul(t));
        }
    });
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    FRAC_2_PI * (log_term * j.to_f64() - weighted.to_f64())
}

// Y₁(x) = (2/π)(ln(x/2) + γ)·J₁(x) − 2/(πx) − (1/π) Σ_{k≥0} (H_k + H_{k+1}) s_k
fn series_y1(x: f64) -> f64 {
    let mut j = Dd::ZERO;
    let mut weighted = Dd::ZERO;
    let mut h_k = Dd::ZERO;
    j1_terms(x, |k, s| {
        j = j.add(s);
        let h_next = h_k.add(Dd::from_f64(1.0).div_f64(k as f64 + 1.0));
        weighted = weighted.add(h_k.add(h_next).mul(s));
        h_k = h_next;
    });
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    FRAC_2_PI * log_term * j.to_f64() - FRAC_2_PI / x - weighted.to_f64() / PI
}

/// Large-argument expansion: returns `(J_ν(x), Y_ν(x))` for ν ∈ {0, 1}.
///
/// `J = A(P cos χ − Q sin χ)`, `Y = A(P sin χ + Q cos χ)` with
/// `A = √(2/(πx))`, `χ = x − (ν/2 + 1/4)π`.
fn asymptotic(x: f64, order: u32) -> (f64, f64) {
    let mu = 4.0 * f64::from(order * order);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200u32 {
        let odd = f64::from(2 * k - 1);
        term *= (mu - odd * odd) / (f64::from(k) * 8.0 * x);
        let mag = term.abs();
        if mag >= last {
            break;
        }
        last = mag;
        // k odd feeds Q, k even feeds P, with signs alternating in pairs.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if mag < 1e-18 {
            break;
        }
    }
    let (s, c) = x.sin_cos();
    let (cos_chi, sin_chi) = if order == 0 {
        ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2)
    } else {
        ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2)
    };
    let amp = (FRAC_2_PI / x).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}
