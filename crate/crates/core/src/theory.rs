//! Closed-form Bessel structure of the migration maps, the integral
//! identities behind it, and quantitative map comparison.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::migration::{HeatMap, MapLabel};
use crate::quadrature::adaptive_simpson;
use crate::scene::{unit_directions, Scene, SearchGrid};
use crate::specfun;

/// Absolute tolerance used for every Bessel-product integral.
pub const QUAD_TOL: f64 = 1e-10;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be > 0, got {v}")))
    }
}

fn check_band(omega_first: f64, omega_last: f64) -> Result<()> {
    check_positive("ω_1", omega_first)?;
    check_positive("ω_S", omega_last)?;
    if omega_last <= omega_first {
        return Err(Error::Domain(format!(
            "need ω_S > ω_1, got ω_1 = {omega_first}, ω_S = {omega_last}"
        )));
    }
    Ok(())
}

/// `J₀²(ωd)`, one term of the single-frequency structure.
pub fn single_kernel(d: f64, omega: f64) -> f64 {
    let j = specfun::j0(omega * d.abs());
    j * j
}

/// `ω(J₀² + J₁²)(ωd)`, the antiderivative part of `∫ J₀²(ωd) dω`.
pub fn primitive(d: f64, omega: f64) -> f64 {
    let x = omega * d.abs();
    let (a, b) = (specfun::j0(x), specfun::j1(x));
    omega * (a * a + b * b)
}

/// `[ω_S(J₀²+J₁²)(ω_S d) − ω_1(J₀²+J₁²)(ω_1 d)] / (ω_S − ω_1)` before the
/// modulus.
pub fn multi_kernel(d: f64, omega_first: f64, omega_last: f64) -> f64 {
    (primitive(d, omega_last) - primitive(d, omega_first)) / (omega_last - omega_first)
}

fn map_from<F>(grid: &SearchGrid, label: MapLabel, f: F) -> Result<HeatMap>
where
    F: Fn(Vec2) -> f64 + Sync,
{
    let values = (0..grid.len()).into_par_iter().map(|i| f(grid.point_at(i))).collect();
    HeatMap::new(*grid, values, label)
}

/// `Σ_m J₀²(ω|r_m − r|)` on the grid.
pub fn predicted_single(grid: &SearchGrid, scene: &Scene, omega: f64) -> Result<HeatMap> {
    check_positive("ω", omega)?;
    let locs = scene.locations();
    map_from(grid, MapLabel::TheorySingle { omega }, |r| {
        locs.iter().map(|&rm| single_kernel(rm.distance(r), omega)).sum()
    })
}

/// `|Σ_m multi_kernel(|r_m − r|, ω_1, ω_S)|` on the grid.
pub fn predicted_multi(grid: &SearchGrid, scene: &Scene, omega_first: f64, omega_last: f64) -> Result<HeatMap> {
    check_band(omega_first, omega_last)?;
    let locs = scene.locations();
    map_from(
        grid,
        MapLabel::TheoryMulti {
            omega_first,
            omega_last,
        },
        |r| {
            locs.iter()
                .map(|&rm| multi_kernel(rm.distance(r), omega_first, omega_last))
                .sum::<f64>()
                .abs()
        },
    )
}

/// `Λ(d, ω_1, ω_S) = ∫_{ω_1}^{ω_S} J₁²(ωd) dω` by adaptive quadrature.
pub fn lambda_remainder(d: f64, omega_first: f64, omega_last: f64) -> Result<f64> {
    check_band(omega_first, omega_last)?;
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::Domain(format!("distance must be ≥ 0, got {d}")));
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    adaptive_simpson(
        |w| {
            let j = specfun::j1(w * d);
            j * j
        },
        omega_first,
        omega_last,
        QUAD_TOL,
    )
}

/// `∫_{ω_1}^{ω_S} J₀²(ωd) dω` by adaptive quadrature.
pub fn j0_squared_integral(d: f64, omega_first: f64, omega_last: f64) -> Result<f64> {
    check_band(omega_first, omega_last)?;
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::Domain(format!("distance must be ≥ 0, got {d}")));
    }
    adaptive_simpson(|w| single_kernel(d, w), omega_first, omega_last, QUAD_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleCheck {
    pub quadrature: Complex64,
    pub reference: f64,
    pub error: f64,
}

/// Compares `(2π/N) Σ_p exp(jω d_p·r)` with `2π J₀(ω|r|)`.
pub fn circle_integral_check(r: Vec2, omega: f64, n: usize) -> Result<CircleCheck> {
    let dirs = unit_directions(n)?;
    if !r.is_finite() || !omega.is_finite() {
        return Err(Error::Domain("r and ω must be finite".into()));
    }
    let sum: Complex64 = dirs.iter().map(|d| Complex64::from_polar(1.0, omega * d.dot(r))).sum();
    let quadrature = sum * (TAU / n as f64);
    let reference = TAU * specfun::j0((omega * r.norm()).abs());
    Ok(CircleCheck {
        quadrature,
        reference,
        error: (quadrature - reference).norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub location: Vec2,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    /// Set when fewer than the requested number of peaks were found.
    pub incomplete: bool,
}

/// Flat indices of 8-neighbor local maxima: not below any neighbor and
/// strictly above at least one.
fn local_maxima(map: &HeatMap) -> Vec<usize> {
    let g = &map.grid;
    let mut out = Vec::new();
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let v = map.value(ix, iy);
            let mut is_max = true;
            let mut strict = false;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx < 0 || jy < 0 || jx >= g.nx as i64 || jy >= g.ny as i64 {
                        continue;
                    }
                    let w = map.value(jx as usize, jy as usize);
                    if w > v {
                        is_max = false;
                    } else if w < v {
                        strict = true;
                    }
                }
            }
            if is_max && strict {
                out.push(g.index(ix, iy));
            }
        }
    }
    out
}

/// Greedy selection of the `count` largest local maxima that are pairwise at
/// least `min_separation` apart, in descending order of value.
pub fn extract_peaks(map: &HeatMap, count: usize, min_separation: f64) -> Result<PeakSet> {
    if count == 0 {
        return Err(Error::config("peaks.count", "must be at least 1"));
    }
    if !(min_separation.is_finite() && min_separation > 0.0) {
        return Err(Error::config("peaks.min_separation", "must be > 0"));
    }
    let mut cand = local_maxima(map);
    cand.sort_by(|&a, &b| map.values[b].total_cmp(&map.values[a]).then(a.cmp(&b)));
    let mut peaks: Vec<Peak> = Vec::with_capacity(count);
    for i in cand {
        let p = map.grid.point_at(i);
        if peaks.iter().all(|q| q.location.distance(p) >= min_separation) {
            peaks.push(Peak {
                location: p,
                value: map.values[i],
            });
            if peaks.len() == count {
                break;
            }
        }
    }
    let incomplete = peaks.len() < count;
    if incomplete {
        log::warn!("found {} of {count} requested peaks", peaks.len());
    }
    Ok(PeakSet { peaks, incomplete })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakOffset {
    pub target: Vec2,
    pub predicted_peak: Option<Vec2>,
    pub computed_peak: Option<Vec2>,
    pub predicted_distance: Option<f64>,
    pub computed_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scale: f64,
    pub nrmse: f64,
    pub correlation: f64,
    pub peaks: Vec<PeakOffset>,
}

impl ComparisonReport {
    /// Largest computed-peak offset, `None` if any target had no peak.
    pub fn max_computed_offset(&self) -> Option<f64> {
        self.peaks
            .iter()
            .map(|p| p.computed_distance)
            .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
    }
}

fn nearest_maximum(map: &HeatMap, maxima: &[usize], target: Vec2) -> Option<Vec2> {
    maxima
        .iter()
        .map(|&i| map.grid.point_at(i))
        .min_by(|a, b| a.distance(target).total_cmp(&b.distance(target)))
}

/// Pearson correlation of two equally long samples.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Usage("correlation needs two samples of equal, nonzero length".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Numeric("correlation undefined for a constant map".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Fits `computed ≈ C·predicted` by least squares and reports the fit, the
/// correlation and, for each target, the nearest local maximum of both maps.
pub fn compare_maps(computed: &HeatMap, predicted: &HeatMap, targets: &[Vec2]) -> Result<ComparisonReport> {
    if !computed.grid.same_geometry(&predicted.grid) {
        return Err(Error::Usage("maps are sampled on different grids".into()));
    }
    let (c, p) = (&computed.values, &predicted.values);
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let cc: f64 = c.iter().map(|v| v * v).sum();
    if pp == 0.0 || cc == 0.0 {
        return Err(Error::Numeric("cannot fit a scale to an all-zero map".into()));
    }
    let scale = c.iter().zip(p).map(|(x, y)| x * y).sum::<f64>() / pp;
    let resid: f64 = c.iter().zip(p).map(|(x, y)| (x - scale * y).powi(2)).sum();
    let nrmse = (resid / cc).sqrt();
    let correlation = pearson(c, p)?;

    let cmax = local_maxima(computed);
    let pmax = local_maxima(predicted);
    let peaks = targets
        .iter()
        .map(|&t| {
            let cp = nearest_maximum(computed, &cmax, t);
            let pp = nearest_maximum(predicted, &pmax, t);
            PeakOffset {
                target: t,
                predicted_peak: pp,
                computed_peak: cp,
                predicted_distance: pp.map(|q| q.distance(t)),
                computed_distance: cp.map(|q| q.distance(t)),
            }
        })
        .collect();
    Ok(ComparisonReport {
        scale,
        nrmse,
        correlation,
        peaks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{make_grid, Scatterer};

    fn one_at(x: f64, y: f64) -> Scene {
        Scene::new(vec![Scatterer::new(Vec2::new(x, y), 0.1, 5.0, 5.0)], 20).unwrap()
    }

    #[test]
    fn unit_peak_for_single_scatterer() {
        let grid = make_grid([-1.0, 1.0], [-1.0, 1.0], 0.1).unwrap();
        let s = one_at(0.0, 0.0);
        let a = predicted_single(&grid, &s, 15.0).unwrap();
        let b = predicted_multi(&grid, &s, 12.0, 21.0).unwrap();
        assert_eq!(a.sample(Vec2::ZERO), 1.0);
        assert_eq!(b.sample(Vec2::ZERO), 1.0);
    }

    #[test]
    fn band_errors() {
        assert!(lambda_remainder(0.5, 3.0, 3.0).is_err());
        assert!(lambda_remainder(0.5, -1.0, 3.0).is_err());
        assert_eq!(lambda_remainder(0.0, 1.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn circle_at_origin_is_exact() {
        for n in [1, 7, 20] {
            let c = circle_integral_check(Vec2::ZERO, 9.0, n).unwrap();
            assert!((c.quadrature.re - TAU).abs() < 1e-14 && c.quadrature.im.abs() < 1e-14);
            assert_eq!(c.reference, TAU);
        }
    }

    #[test]
    fn constant_map_has_no_peaks() {
        let grid = make_grid([0.0, 1.0], [0.0, 1.0], 0.25).unwrap();
        let m = HeatMap::new(grid, vec![2.0; grid.len()], MapLabel::Imported).unwrap();
        let p = extract_peaks(&m, 2, 0.1).unwrap();
        assert!(p.incomplete && p.peaks.is_empty());
        assert!(compare_maps(&m, &m, &[]).is_err());
    }

    #[test]
    fn delta_peak() {
        let grid = make_grid([0.0, 1.0], [0.0, 1.0], 0.25).unwrap();
        let mut v = vec![0.0; grid.len()];
        v[grid.index(3, 1)] = 1.0;
        let m = HeatMap::new(grid, v, MapLabel::Imported).unwrap();
        let p = extract_peaks(&m, 1, 0.1).unwrap();
        assert!(!p.incomplete);
        assert_eq!(p.peaks[0].location, Vec2::new(0.75, 0.25));
    }

    #[test]
    fn scale_recovery() {
        let grid = make_grid([-1.0, 1.0], [-1.0, 1.0], 0.05).unwrap();
        let s = one_at(0.2, -0.1);
        let p = predicted_single(&grid, &s, 12.0).unwrap();
        let mut c = p.clone();
        c.values.iter_mut().for_each(|v| *v *= 3.0);
        let r = compare_maps(&c, &p, &[Vec2::new(0.2, -0.1)]).unwrap();
        assert!((r.scale - 3.0).abs() < 1e-12);
        assert!(r.nrmse < 1e-12);
        assert!((r.correlation - 1.0).abs() < 1e-12);
        assert!(r.max_computed_offset().unwrap() < 1e-9);
    }
}
