//! Shared test helpers: an exact-arithmetic Bessel series and the standard
//! three-disk scene.
#![allow(dead_code)]

use num_bigint::BigInt;
use submig::scene::{Scatterer, Scene};
use submig::Vec2;

/// Number of series terms used by the reference evaluation.
pub const ORACLE_TERMS: u32 = 50;

pub const LOCATIONS: [(f64, f64); 3] = [(0.4, 0.0), (-0.6, 0.3), (0.1, -0.5)];

/// `x = m · 2^e` with integer `m`.
fn split(x: f64) -> (BigInt, i64) {
    assert!(x.is_finite() && x >= 0.0);
    if x == 0.0 {
        return (BigInt::from(0), 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    (BigInt::from(m), e)
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * k)
}

/// `num / den · 2^shift` rounded to the nearest `f64`.
fn ratio_to_f64(num: &BigInt, den: &BigInt, shift: i64) -> f64 {
    if num.bits() == 0 {
        return 0.0;
    }
    let negative = num.sign() == num_bigint::Sign::Minus;
    let n = num.magnitude().clone();
    let d = den.magnitude().clone();
    // choose s so the quotient has 62 or 63 bits
    let s = 62 + d.bits() as i64 - n.bits() as i64;
    let q = if s >= 0 { (n << s as u64) / d } else { n / (d << (-s) as u64) };
    let q = u64::try_from(q).expect("quotient fits in 64 bits") as f64;
    let v = q * 2f64.powi((shift - s) as i32);
    if negative {
        -v
    } else {
        v
    }
}

/// Generic truncated series `Σ_{k<K} (−1)^k (x/2)^{2k} / (k! (k+ν)!)` in exact
/// rational arithmetic, multiplied by `(x/2)^ν`.
fn series(x: f64, nu: u32) -> f64 {
    let (m, e) = split(x);
    if m.bits() == 0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    let k_max = ORACLE_TERMS - 1;
    // (x/2)^2 = m² · 2^t
    let t = 2 * (e - 1);
    let u = if t < 0 { -t } else { 0 };
    let fk = factorial(k_max);
    let fkn = factorial(k_max + nu);
    let m2 = &m * &m;
    let mut num = BigInt::from(0);
    let mut mpow = BigInt::from(1);
    for k in 0..=k_max {
        let scale = (&fk / factorial(k)) * (&fkn / factorial(k + nu));
        let pow2 = k as i64 * t + k_max as i64 * u;
        let term = &mpow * scale << pow2 as u64;
        if k % 2 == 0 {
            num += term;
        } else {
            num -= term;
        }
        mpow *= &m2;
    }
    let den = (fk * fkn) << (k_max as i64 * u) as u64;
    // multiply by (x/2)^ν = m^ν · 2^{ν(e−1)}
    let mut shift = 0i64;
    for _ in 0..nu {
        num *= &m;
        shift += e - 1;
    }
    ratio_to_f64(&num, &den, shift)
}

/// J₀ from the exact 50-term power series.
pub fn oracle_j0(x: f64) -> f64 {
    series(x, 0)
}

/// J₁ from the exact 50-term power series.
pub fn oracle_j1(x: f64) -> f64 {
    series(x, 1)
}

pub fn disk(x: f64, y: f64, contrast: f64) -> Scatterer {
    Scatterer::new(Vec2::new(x, y), 0.1, contrast, contrast)
}

/// Three disks at the reference locations with the given contrasts.
pub fn three_disks(contrasts: [f64; 3], n: usize) -> Scene {
    let s = LOCATIONS
        .iter()
        .zip(contrasts)
        .map(|(&(x, y), c)| disk(x, y, c))
        .collect();
    Scene::new(s, n).unwrap()
}

pub fn locations() -> Vec<Vec2> {
    LOCATIONS.iter().map(|&(x, y)| Vec2::new(x, y)).collect()
}

pub fn omega(lambda: f64) -> f64 {
    std::f64::consts::TAU / lambda
}
