//! Point-scatterer multiple scattering with monopole and dipole unknowns.
//!
//! Each inclusion carries the exciting field value `u_n` and gradient `g_n`.
//! It re-radiates a monopole of strength `ρ²ω²(ε_n−ε₀)π/√(ε₀μ₀)·u_n` and a
//! dipole of moment `ρ²T_n g_n`. The exciting field at `r_m` is the incident
//! plane wave plus everything radiated by the other inclusions, giving the
//! `3M × 3M` system `(I − GΛ)X = E`.
//!
//! The far field is normalized by the same constant as the Born formula, so
//! that zeroing the coupling blocks reproduces `msr_born` exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{born_weights, check_frequency, green_scale, phases, MsrMatrix, Provenance};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scene::Scene;
use crate::specfun;

/// Condition number above which the coupling system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// Field and gradient both couple (monopole and dipole interaction).
    #[default]
    MonopoleDipole,
    /// Only the field value couples; dipoles radiate to the far field only.
    MonopoleOnly,
    /// Coupling blocks zeroed; equivalent to the Born formula.
    None,
}

/// Foldy–Lax MSR matrix with the default monopole+dipole coupling.
pub fn msr_foldy_lax(scene: &Scene, omega: f64) -> Result<MsrMatrix> {
    msr_foldy_lax_with(scene, omega, Coupling::default())
}

/// 3×3 interaction block `[[Φ, ∇Φᵀ], [∇Φ, ∇∇Φ]]` between `x` and `y ≠ x`,
/// derivatives taken in `x`.
fn interaction(x: Vec2, y: Vec2, omega: f64, mu0: f64, coupling: Coupling) -> [[Complex64; 3]; 3] {
    let zero = Complex64::new(0.0, 0.0);
    let mut b = [[zero; 3]; 3];
    let rv = x - y;
    let r = rv.norm();
    let k = omega * r;
    let c = green_scale(mu0);
    let h0 = specfun::h0(k);
    b[0][0] = c * h0;
    if coupling == Coupling::MonopoleOnly {
        return b;
    }
    let h1 = specfun::h1(k);
    // Φ = f(|x−y|), f' = −c ω H₁, f'' = −c ω² (H₀ − H₁/k)
    let fp = -c * omega * h1;
    let fpp = -c * omega * omega * (h0 - h1 / k);
    let rh = [rv.x / r, rv.y / r];
    for i in 0..2 {
        b[0][i + 1] = fp * rh[i];
        b[i + 1][0] = fp * rh[i];
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            b[i + 1][j + 1] = fpp * (rh[i] * rh[j]) + fp / r * (delta - rh[i] * rh[j]);
        }
    }
    b
}

fn condition_number(a: &DMatrix<Complex64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn msr_foldy_lax_with(scene: &Scene, omega: f64, coupling: Coupling) -> Result<MsrMatrix> {
    check_frequency(omega)?;
    let dirs = scene.directions();
    let n = dirs.len();
    let scat = scene.scatterers();
    let m = scat.len();
    let mu0 = scene.background().permeability;
    let weights = born_weights(scene)?;

    // Λ = diag(ρ²a_n ω², ρ²t_n, ρ²t_n)
    let lambda: Vec<f64> = weights
        .iter()
        .flat_map(|&(a, t)| [a * omega * omega, t, t])
        .collect();

    let dim = 3 * m;
    let mut sys = DMatrix::<Complex64>::identity(dim, dim);
    if coupling != Coupling::None {
        for (i, si) in scat.iter().enumerate() {
            for (j, sj) in scat.iter().enumerate() {
                if i == j {
                    continue;
                }
                let b = interaction(si.location, sj.location, omega, mu0, coupling);
                for (r, row) in b.iter().enumerate() {
                    for (c, &v) in row.iter().enumerate() {
                        sys[(3 * i + r, 3 * j + c)] -= v * lambda[3 * j + c];
                    }
                }
            }
        }
    }

    let cond = condition_number(&sys);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::SingularSystem { condition: cond });
    }

    // right-hand sides: incident field and gradient for every direction q
    let jw = Complex64::new(0.0, omega);
    let all_phases: Vec<Vec<Complex64>> = scat.iter().map(|s| phases(&dirs, s.location, omega)).collect();
    let mut rhs = DMatrix::<Complex64>::zeros(dim, n);
    for (i, ph) in all_phases.iter().enumerate() {
        for (q, d) in dirs.iter().enumerate() {
            rhs[(3 * i, q)] = ph[q];
            rhs[(3 * i + 1, q)] = jw * d.x * ph[q];
            rhs[(3 * i + 2, q)] = jw * d.y * ph[q];
        }
    }
    let lu = sys.lu();
    let x = lu
        .solve(&rhs)
        .ok_or(Error::SingularSystem { condition: cond })?;

    // far field: Σ_n [Λu − jω d_p·Λg] exp(jω d_p·r_n) / ω²
    let mut f = DMatrix::<Complex64>::zeros(n, n);
    let inv_w2 = 1.0 / (omega * omega);
    for (i, ph) in all_phases.iter().enumerate() {
        let (la, lt) = (lambda[3 * i], lambda[3 * i + 1]);
        for q in 0..n {
            let u = x[(3 * i, q)] * la;
            let g = [x[(3 * i + 1, q)] * lt, x[(3 * i + 2, q)] * lt];
            for (p, d) in dirs.iter().enumerate() {
                let v = u - jw * (g[0] * d.x + g[1] * d.y);
                f[(p, q)] += v * ph[p] * inv_w2;
            }
        }
    }
    MsrMatrix::new(f, omega, Provenance::FoldyLax)
}
