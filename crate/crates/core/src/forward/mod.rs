//! Far-field MSR data: small-inclusion (Born) synthesis, a point-scatterer
//! Foldy–Lax system with mutual coupling, and measured-power AWGN.

mod foldy_lax;
mod noise;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scene::{polarization_factor, Scene};
use crate::specfun;

pub use foldy_lax::{msr_foldy_lax, msr_foldy_lax_with, Coupling, MAX_CONDITION};
pub use noise::{add_awgn, add_awgn_stream};

/// How an MSR matrix was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    Born,
    FoldyLax,
    Noisy {
        source: Box<Provenance>,
        snr_db: f64,
        seed: u64,
        stream: u64,
    },
}

/// Square far-field response matrix `F_pq = F(d_p, d_q)` at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MsrMatrix {
    pub entries: DMatrix<Complex64>,
    pub frequency: f64,
    pub provenance: Provenance,
}

impl MsrMatrix {
    pub fn new(entries: DMatrix<Complex64>, frequency: f64, provenance: Provenance) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Usage(format!(
                "MSR matrix must be square, got {}×{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(MsrMatrix {
            entries,
            frequency,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest `|F_pq − F_qp|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                worst = worst.max((self.entries[(p, q)] - self.entries[(q, p)]).norm());
            }
        }
        worst
    }
}

/// `Φ(x, y; ω) = −μ₀ (j/4) H₀¹(ω|x − y|)`.
pub fn green_function(x: Vec2, y: Vec2, omega: f64, mu0: f64) -> Result<Complex64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!("ω must be > 0, got {omega}")));
    }
    let r = x.distance(y);
    if r == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(green_scale(mu0) * specfun::hankel0_first(omega * r)?)
}

#[inline]
pub(crate) fn green_scale(mu0: f64) -> Complex64 {
    Complex64::new(0.0, -mu0 / 4.0)
}

pub(crate) fn check_frequency(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::config("frequency", format!("ω must be > 0, got {omega}")))
    }
}

/// Plane-wave phases `exp(jω d_p·r)` for every direction.
pub(crate) fn phases(directions: &[Vec2], r: Vec2, omega: f64) -> Vec<Complex64> {
    directions
        .iter()
        .map(|d| Complex64::from_polar(1.0, omega * d.dot(r)))
        .collect()
}

/// Per-scatterer coefficients `(ρ²(ε_m−ε₀)π/√(ε₀μ₀), ρ²·2μ₀π/(μ_m+μ₀))`.
pub(crate) fn born_weights(scene: &Scene) -> Result<Vec<(f64, f64)>> {
    let bg = scene.background();
    scene
        .scatterers()
        .iter()
        .map(|s| {
            let rho2 = s.radius * s.radius;
            let a = (s.permittivity - bg.permittivity) / bg.index() * std::f64::consts::PI;
            let t = polarization_factor(s, bg.permeability)?;
            Ok((rho2 * a, rho2 * t))
        })
        .collect()
}

/// Small-inclusion far-field MSR matrix with the common prefactor
/// `ω²(1+j)/(4√(ωπ))` dropped:
///
/// `F_pq = ρ² Σ_m [(ε_m−ε₀)π/√(ε₀μ₀) + T_m d_p·d_q] exp(jω(d_p+d_q)·r_m)`.
pub fn msr_born(scene: &Scene, omega: f64) -> Result<MsrMatrix> {
    check_frequency(omega)?;
    let dirs = scene.directions();
    let n = dirs.len();
    let weights = born_weights(scene)?;
    let mut f = DMatrix::<Complex64>::zeros(n, n);
    for (s, &(a, t)) in scene.scatterers().iter().zip(&weights) {
        let ph = phases(&dirs, s.location, omega);
        for q in 0..n {
            for p in q..n {
                let coeff = a + t * dirs[p].dot(dirs[q]);
                let v = ph[p] * ph[q] * coeff;
                f[(p, q)] += v;
            }
        }
    }
    // fill the upper triangle from the lower one so symmetry is exact
    for q in 0..n {
        for p in 0..q {
            f[(p, q)] = f[(q, p)];
        }
    }
    MsrMatrix::new(f, omega, Provenance::Born)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Scatterer;

    fn scene(locs: &[(f64, f64)]) -> Scene {
        let s = locs
            .iter()
            .map(|&(x, y)| Scatterer::new(Vec2::new(x, y), 0.1, 5.0, 5.0))
            .collect();
        Scene::new(s, 20).unwrap()
    }

    #[test]
    fn green_at_unit_argument() {
        let omega = 2.5;
        let g = green_function(Vec2::ZERO, Vec2::new(1.0 / omega, 0.0), omega, 1.0).unwrap();
        assert!((g.re - 0.088256964215677 / 4.0).abs() < 1e-12);
        assert!((g.im + 0.7651976865579666 / 4.0).abs() < 1e-12);
        assert!(matches!(
            green_function(Vec2::new(0.3, 0.2), Vec2::new(0.3, 0.2), 1.0, 1.0),
            Err(Error::Singularity)
        ));
    }

    #[test]
    fn green_is_symmetric() {
        let (a, b) = (Vec2::new(0.1, -0.7), Vec2::new(-0.4, 0.25));
        assert_eq!(
            green_function(a, b, 13.0, 1.0).unwrap(),
            green_function(b, a, 13.0, 1.0).unwrap()
        );
    }

    #[test]
    fn born_single_at_origin() {
        let f = msr_born(&scene(&[(0.0, 0.0)]), 15.0).unwrap();
        let want = 0.01 * std::f64::consts::PI * 13.0 / 3.0;
        for p in 0..20 {
            assert!((f.entries[(p, p)].re - want).abs() < 1e-15);
            assert!(f.entries[(p, p)].im.abs() < 1e-15);
        }
        assert!((want - 0.136136).abs() < 1e-6);
    }

    #[test]
    fn born_is_linear_in_scatterers() {
        let w = 2.0 * std::f64::consts::PI / 0.4;
        let a = msr_born(&scene(&[(0.4, 0.0)]), w).unwrap();
        let b = msr_born(&scene(&[(-0.6, 0.3)]), w).unwrap();
        let ab = msr_born(&scene(&[(0.4, 0.0), (-0.6, 0.3)]), w).unwrap();
        assert!((&ab.entries - (&a.entries + &b.entries)).camax() < 1e-15);
        assert_eq!(ab.asymmetry(), 0.0);
    }

    #[test]
    fn epsilon_term_vanishes_without_contrast() {
        // only the permeability term survives when ε_m → ε₀
        let s = Scatterer::new(Vec2::ZERO, 0.1, 1.0 + 1e-15, 3.0);
        let sc = Scene::new(vec![s], 8).unwrap();
        let f = msr_born(&sc, 4.0).unwrap();
        let d = sc.directions();
        let t = 0.01 * std::f64::consts::PI * 0.5;
        for p in 0..8 {
            for q in 0..8 {
                assert!((f.entries[(p, q)].re - t * d[p].dot(d[q])).abs() < 1e-15);
            }
        }
    }
}
