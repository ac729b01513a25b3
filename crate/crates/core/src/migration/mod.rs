//! Subspace migration.
//!
//! For a truncated basis `{U_m, V_m}` at frequency `ω` the single-frequency
//! map is
//!
//! ```text
//! W(r; ω) = | Σ_{m ≤ M̂} ⟨U_m, W(r)⟩ · ⟨V̄_m, W(r)⟩ |
//! ```
//!
//! where `⟨a, b⟩ = Σ_p conj(b_p) a_p` and `W(r)` is the unit steering vector.
//! The multi-frequency map sums the complex values over frequencies before
//! taking the modulus, then divides by `S`.

mod svd;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scene::SearchGrid;

pub use svd::{significant_count, svd_decompose, SvdBasis};

/// Coefficient vector `c ∈ ℂ³ \ {0}` weighting `(1, d_p)` in the steering
/// vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestVector {
    c: [Complex64; 3],
}

impl TestVector {
    pub fn new(c: [Complex64; 3]) -> Result<Self> {
        if c.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::config("test_vector", "components must be finite"));
        }
        if c.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::config("test_vector", "must be nonzero"));
        }
        Ok(TestVector { c })
    }

    pub fn real(c: [f64; 3]) -> Result<Self> {
        TestVector::new(c.map(Complex64::from))
    }

    pub fn components(&self) -> [Complex64; 3] {
        self.c
    }

    /// `c · (1, d)`.
    #[inline]
    pub fn weight(&self, d: Vec2) -> Complex64 {
        self.c[0] + self.c[1] * d.x + self.c[2] * d.y
    }
}

impl Default for TestVector {
    fn default() -> Self {
        TestVector::real([5.0, 1.0, 1.0]).expect("nonzero")
    }
}

/// Normalized direction weights `c·(1,d_p) / ‖c·(1,d)‖`. The norm of the
/// steering vector does not depend on `r`, so it is taken once.
fn unit_weights(directions: &[Vec2], c: &TestVector) -> Result<Vec<Complex64>> {
    if directions.is_empty() {
        return Err(Error::Usage("direction set is empty".into()));
    }
    let w: Vec<Complex64> = directions.iter().map(|&d| c.weight(d)).collect();
    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::config(
            "test_vector",
            "c·(1, d_p) vanishes for every direction; steering vector is degenerate",
        ));
    }
    Ok(w.into_iter().map(|z| z / norm).collect())
}

/// Unit steering vector with entries `c·(1,d_p) exp(jω d_p·r)` normalized.
pub fn steering_vector(r: Vec2, omega: f64, directions: &[Vec2], c: &TestVector) -> Result<DVector<Complex64>> {
    let w = unit_weights(directions, c)?;
    Ok(DVector::from_iterator(
        directions.len(),
        directions
            .iter()
            .zip(w)
            .map(|(d, a)| a * Complex64::from_polar(1.0, omega * d.dot(r))),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MapLabel {
    Single { omega: f64 },
    Multi { count: usize },
    TheorySingle { omega: f64 },
    TheoryMulti { omega_first: f64, omega_last: f64 },
    /// Read back from a file without metadata.
    Imported,
}

/// Scalar field on a search grid, row-major by `y` then `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub grid: SearchGrid,
    pub values: Vec<f64>,
    pub label: MapLabel,
}

impl HeatMap {
    pub fn new(grid: SearchGrid, values: Vec<f64>, label: MapLabel) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "map has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(HeatMap { grid, values, label })
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Map value at the grid node nearest to `p`.
    pub fn sample(&self, p: Vec2) -> f64 {
        self.values[self.grid.nearest_index(p)]
    }

    /// Largest value among grid points farther than `radius` from every
    /// point in `exclude`. `None` if no such point exists.
    pub fn max_outside(&self, exclude: &[Vec2], radius: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, &v) in self.values.iter().enumerate() {
            let p = self.grid.point_at(i);
            if exclude.iter().all(|&e| p.distance(e) > radius) {
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        }
        best
    }
}

/// Complex migration sum at every grid point for one frequency, before the
/// modulus is taken.
pub fn migration_field(
    grid: &SearchGrid,
    basis: &SvdBasis,
    directions: &[Vec2],
    c: &TestVector,
) -> Result<Vec<Complex64>> {
    let mhat = basis
        .retained()
        .ok_or_else(|| Error::Usage("signal subspace not selected; call significant_count first".into()))?;
    let n = directions.len();
    if basis.u.nrows() != n {
        return Err(Error::Usage(format!(
            "basis has dimension {} but {} directions were given",
            basis.u.nrows(),
            n
        )));
    }
    let omega = basis.frequency;
    let a: Vec<Complex64> = unit_weights(directions, c)?.iter().map(|z| z.conj()).collect();

    // conj(W_p(r)) = conj(a_p) e^{−jω d_px x} e^{−jω d_py y}
    let ex: Vec<Vec<Complex64>> = (0..grid.nx)
        .map(|ix| {
            let x = grid.x(ix);
            directions
                .iter()
                .map(|d| Complex64::from_polar(1.0, -omega * d.x * x))
                .collect()
        })
        .collect();
    let ey: Vec<Vec<Complex64>> = (0..grid.ny)
        .map(|iy| {
            let y = grid.y(iy);
            directions
                .iter()
                .zip(&a)
                .map(|(d, ap)| ap * Complex64::from_polar(1.0, -omega * d.y * y))
                .collect()
        })
        .collect();

    // columns laid out contiguously: u[m][p], conj(v)[m][p]
    let u: Vec<Vec<Complex64>> = (0..mhat).map(|m| basis.u.column(m).iter().copied().collect()).collect();
    let vb: Vec<Vec<Complex64>> = (0..mhat)
        .map(|m| basis.v.column(m).iter().map(|z| z.conj()).collect())
        .collect();

    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    out.par_chunks_mut(grid.nx).enumerate().for_each(|(iy, row)| {
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for (ix, cell) in row.iter_mut().enumerate() {
            for p in 0..n {
                w[p] = ey[iy][p] * ex[ix][p];
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..mhat {
                let mut su = Complex64::new(0.0, 0.0);
                let mut sv = Complex64::new(0.0, 0.0);
                for p in 0..n {
                    su += w[p] * u[m][p];
                    sv += w[p] * vb[m][p];
                }
                acc += su * sv;
            }
            *cell = acc;
        }
    });
    Ok(out)
}

/// Single-frequency subspace-migration map.
pub fn image_single(grid: &SearchGrid, basis: &SvdBasis, directions: &[Vec2], c: &TestVector) -> Result<HeatMap> {
    let field = migration_field(grid, basis, directions, c)?;
    HeatMap::new(
        *grid,
        field.iter().map(|z| z.norm()).collect(),
        MapLabel::Single {
            omega: basis.frequency,
        },
    )
}

/// Multi-frequency map `(1/S) |Σ_s Σ_m …|`, summing over frequencies in the
/// given order.
pub fn image_multi(grid: &SearchGrid, bases: &[SvdBasis], directions: &[Vec2], c: &TestVector) -> Result<HeatMap> {
    if bases.is_empty() {
        return Err(Error::Usage("multi-frequency imaging needs at least one frequency".into()));
    }
    let fields = bases
        .par_iter()
        .map(|b| migration_field(grid, b, directions, c))
        .collect::<Result<Vec<_>>>()?;
    let s = bases.len() as f64;
    let values = (0..grid.len())
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for f in &fields {
                acc += f[i];
            }
            acc.norm() / s
        })
        .collect();
    HeatMap::new(*grid, values, MapLabel::Multi { count: bases.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::unit_directions;

    #[test]
    fn steering_at_origin_has_zero_phase() {
        let d = unit_directions(20).unwrap();
        let w = steering_vector(Vec2::ZERO, 15.7, &d, &TestVector::default()).unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-14);
        for z in w.iter() {
            assert!(z.im == 0.0 && z.re > 0.0);
        }
    }

    #[test]
    fn degenerate_test_vector() {
        assert!(TestVector::real([0.0, 0.0, 0.0]).is_err());
        // c·(1, d) = 1 + d_x vanishes only at d = (−1, 0)
        let d = [Vec2::new(-1.0, 0.0)];
        let c = TestVector::real([1.0, 1.0, 0.0]).unwrap();
        assert!(steering_vector(Vec2::ZERO, 1.0, &d, &c).is_err());
    }

    #[test]
    fn untruncated_basis_is_rejected() {
        let grid = crate::scene::make_grid([-1.0, 1.0], [-1.0, 1.0], 1.0).unwrap();
        let basis_msr = crate::forward::MsrMatrix::new(
            nalgebra::DMatrix::identity(4, 4),
            1.0,
            crate::forward::Provenance::Born,
        )
        .unwrap();
        let basis = svd_decompose(&basis_msr).unwrap();
        let d = unit_directions(4).unwrap();
        assert!(matches!(
            image_single(&grid, &basis, &d, &TestVector::default()),
            Err(Error::Usage(_))
        ));
        assert!(matches!(image_multi(&grid, &[], &d, &TestVector::default()), Err(Error::Usage(_))));
    }
}
