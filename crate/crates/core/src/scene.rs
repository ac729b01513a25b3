//! Physical configuration: inclusions, background medium, probing
//! directions, frequency sweeps and the imaging search grid.

use std::f64::consts::{PI, TAU};

use log::warn;
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Separation (in radii) below which two inclusions are no longer
/// considered well separated.
pub const MIN_SEPARATION_RADII: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub permittivity: f64,
    pub permeability: f64,
}

impl Default for Background {
    fn default() -> Self {
        Background {
            permittivity: 1.0,
            permeability: 1.0,
        }
    }
}

impl Background {
    /// Wavenumber per unit angular frequency, `√(ε₀μ₀)`.
    pub fn index(&self) -> f64 {
        (self.permittivity * self.permeability).sqrt()
    }
}

/// A small disk `r_m + ρ·D` with `D` the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub location: Vec2,
    pub radius: f64,
    pub permittivity: f64,
    pub permeability: f64,
}

impl Scatterer {
    pub fn new(location: Vec2, radius: f64, permittivity: f64, permeability: f64) -> Self {
        Scatterer {
            location,
            radius,
            permittivity,
            permeability,
        }
    }

    /// Checks the standing assumptions `ρ > 0`, `ε_m > ε₀`, `μ_m > μ₀`.
    pub fn validate(&self, background: &Background) -> Result<()> {
        if !self.location.is_finite() {
            return Err(Error::config("scatterer.location", "must be finite"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::config("scatterer.radius", format!("must be > 0, got {}", self.radius)));
        }
        if !(self.permittivity.is_finite() && self.permittivity > background.permittivity) {
            return Err(Error::config(
                "scatterer.permittivity",
                format!(
                    "must exceed the background permittivity {}, got {}",
                    background.permittivity, self.permittivity
                ),
            ));
        }
        if !(self.permeability.is_finite() && self.permeability > background.permeability) {
            return Err(Error::config(
                "scatterer.permeability",
                format!(
                    "must exceed the background permeability {}, got {}",
                    background.permeability, self.permeability
                ),
            ));
        }
        Ok(())
    }
}

/// Scalar factor of the (isotropic) polarization tensor of a disk:
/// `T = polarization_factor · I₂`.
pub fn polarization_factor(scatterer: &Scatterer, mu0: f64) -> Result<f64> {
    let denom = scatterer.permeability + mu0;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Domain(format!("polarization tensor undefined for μ_m + μ₀ = {denom}")));
    }
    // area of the unit disk is π
    Ok(2.0 * mu0 / denom * PI)
}

/// `T(r_m) = 2μ₀/(μ_m + μ₀) · area(D) · I₂`.
pub fn polarization_tensor(scatterer: &Scatterer, mu0: f64) -> Result<Matrix2<f64>> {
    Ok(Matrix2::identity() * polarization_factor(scatterer, mu0)?)
}

/// `d_p = (cos 2πp/N, sin 2πp/N)` for `p = 1..=N`.
///
/// The same set is used for incident and observation directions.
pub fn unit_directions(n: usize) -> Result<Vec<Vec2>> {
    if n == 0 {
        return Err(Error::config("directions", "N must be at least 1"));
    }
    let nf = n as f64;
    Ok((1..=n)
        .map(|p| {
            let (s, c) = (TAU * p as f64 / nf).sin_cos();
            Vec2::new(c, s)
        })
        .collect())
}

/// Angular frequencies `ω_s = 2π/λ_s` for `count` wavelengths spread
/// uniformly over `[min(λ), max(λ)]`, returned in increasing order.
///
/// Uniform spacing in wavelength makes the ω spacing non-uniform.
pub fn frequencies_from_wavelengths(first: f64, last: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::config("wavelengths", "count must be at least 1"));
    }
    for (name, v) in [("first", first), ("last", last)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::config("wavelengths", format!("{name} wavelength must be > 0, got {v}")));
        }
    }
    if count == 1 {
        if first != last {
            return Err(Error::config(
                "wavelengths",
                "a single frequency requires the first and last wavelengths to coincide",
            ));
        }
        return Ok(vec![TAU / first]);
    }
    let (lo, hi) = if first < last { (first, last) } else { (last, first) };
    if lo == hi {
        return Err(Error::config("wavelengths", "several frequencies need distinct end wavelengths"));
    }
    let span = (count - 1) as f64;
    // longest wavelength first so that ω ascends
    let omegas = (0..count)
        .map(|i| {
            let lambda = match i {
                0 => hi,
                i if i == count - 1 => lo,
                i => hi - (hi - lo) * (i as f64 / span),
            };
            TAU / lambda
        })
        .collect();
    Ok(omegas)
}

/// A validated physical configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Scene {
    scatterers: Vec<Scatterer>,
    background: Background,
    n_directions: usize,
    frequencies: Vec<f64>,
    #[serde(skip)]
    warnings: Vec<String>,
}

impl Scene {
    /// Scene in the default background with no frequency sweep attached.
    pub fn new(scatterers: Vec<Scatterer>, n_directions: usize) -> Result<Scene> {
        Scene::build(scatterers, Background::default(), n_directions, Vec::new())
    }

    pub fn with_background(self, background: Background) -> Result<Scene> {
        Scene::build(self.scatterers, background, self.n_directions, self.frequencies)
    }

    /// Attaches a strictly increasing list of angular frequencies.
    pub fn with_frequencies(self, frequencies: Vec<f64>) -> Result<Scene> {
        Scene::build(self.scatterers, self.background, self.n_directions, frequencies)
    }

    fn build(
        scatterers: Vec<Scatterer>,
        background: Background,
        n_directions: usize,
        frequencies: Vec<f64>,
    ) -> Result<Scene> {
        if !(background.permittivity > 0.0 && background.permeability > 0.0)
            || !background.permittivity.is_finite()
            || !background.permeability.is_finite()
        {
            return Err(Error::config("background", "ε₀ and μ₀ must be positive and finite"));
        }
        if scatterers.is_empty() {
            return Err(Error::config("scatterers", "at least one scatterer is required"));
        }
        for s in &scatterers {
            s.validate(&background)?;
        }
        if n_directions <= scatterers.len() {
            return Err(Error::config(
                "directions",
                format!(
                    "N = {n_directions} must exceed the number of scatterers M = {}",
                    scatterers.len()
                ),
            ));
        }
        let mut warnings = Vec::new();
        for (i, a) in scatterers.iter().enumerate() {
            for (j, b) in scatterers.iter().enumerate().skip(i + 1) {
                let dist = a.location.distance(b.location);
                if dist == 0.0 {
                    return Err(Error::config(
                        "scatterers",
                        format!("scatterers {i} and {j} share a location"),
                    ));
                }
                let needed = MIN_SEPARATION_RADII * a.radius.max(b.radius);
                if dist < needed {
                    let msg = format!(
                        "scatterers {i} and {j} are {dist:.4} apart, less than {MIN_SEPARATION_RADII}ρ = {needed:.4}"
                    );
                    warn!("{msg}");
                    warnings.push(msg);
                }
            }
        }
        for (i, &w) in frequencies.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::config("frequencies", format!("ω must be > 0, got {w}")));
            }
            if i > 0 && w <= frequencies[i - 1] {
                return Err(Error::config("frequencies", "must be strictly increasing"));
            }
        }
        Ok(Scene {
            scatterers,
            background,
            n_directions,
            frequencies,
            warnings,
        })
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn n_directions(&self) -> usize {
        self.n_directions
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn locations(&self) -> Vec<Vec2> {
        self.scatterers.iter().map(|s| s.location).collect()
    }

    pub fn directions(&self) -> Vec<Vec2> {
        unit_directions(self.n_directions).expect("N validated at construction")
    }

    /// Non-fatal validation findings, e.g. closely spaced inclusions.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Regular rectangular grid, row-major by `y` then `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub step: f64,
    pub nx: usize,
    pub ny: usize,
}

fn axis_count(lo: f64, hi: f64, step: f64) -> usize {
    // tolerance so that e.g. 2.0/0.01 lands on 200 rather than 199.99…
    ((hi - lo) / step + 1e-9).floor() as usize + 1
}

/// Builds the grid `{x_min + i·step} × {y_min + j·step}` covering the given
/// intervals, endpoints included when the step divides the range.
pub fn make_grid(x_range: [f64; 2], y_range: [f64; 2], step: f64) -> Result<SearchGrid> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::config("grid.step", format!("must be > 0, got {step}")));
    }
    for (name, [lo, hi]) in [("grid.x", x_range), ("grid.y", y_range)] {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::config(name, format!("interval [{lo}, {hi}] is degenerate")));
        }
    }
    Ok(SearchGrid {
        x_min: x_range[0],
        x_max: x_range[1],
        y_min: y_range[0],
        y_max: y_range[1],
        step,
        nx: axis_count(x_range[0], x_range[1], step),
        ny: axis_count(y_range[0], y_range[1], step),
    })
}

impl SearchGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.step
    }

    #[inline]
    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.step
    }

    #[inline]
    pub fn point(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(self.x(ix), self.y(iy))
    }

    /// Point for a flat row-major index.
    pub fn point_at(&self, index: usize) -> Vec2 {
        self.point(index % self.nx, index / self.nx)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Flat index of the grid node closest to `p` (clamped to the grid).
    pub fn nearest_index(&self, p: Vec2) -> usize {
        let clamp = |v: f64, n: usize| -> usize {
            let i = v.round();
            if i <= 0.0 {
                0
            } else {
                (i as usize).min(n - 1)
            }
        };
        let ix = clamp((p.x - self.x_min) / self.step, self.nx);
        let iy = clamp((p.y - self.y_min) / self.step, self.ny);
        self.index(ix, iy)
    }

    pub fn same_geometry(&self, other: &SearchGrid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.x_min - other.x_min).abs() <= 1e-12
            && (self.y_min - other.y_min).abs() <= 1e-12
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }
}
