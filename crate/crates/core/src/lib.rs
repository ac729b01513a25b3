//! Subspace-migration imaging of small electromagnetic inclusions.
//!
//! The crate synthesizes far-field multi-static response (MSR) data for a
//! collection of small disks, images them with single- and multi-frequency
//! subspace migration, and compares the resulting maps against their
//! closed-form Bessel-function structure.
//!
//! Module map:
//!
//! * [`specfun`]: J₀, J₁, Y₀, Y₁ and first-kind Hankel functions.
//! * [`scene`]: scatterers, direction sets, frequency sweeps, search grids.
//! * [`forward`]: Born and Foldy–Lax MSR synthesis, measured-power AWGN.
//! * [`migration`]: SVD, signal-subspace selection, steering vectors, maps.
//! * [`theory`]: predicted maps, Bessel identities, map comparison, peaks.
//! * [`experiment`]: JSON-configured runs producing reproducible bundles.
//! * [`export`]: CSV and PGM readers/writers.

pub mod error;
pub mod experiment;
pub mod export;
pub mod forward;
pub mod geometry;
pub mod migration;
pub mod quadrature;
pub mod scene;
pub mod specfun;
pub mod theory;

pub use error::{Error, Result, Stage};
pub use geometry::Vec2;

pub use num_complex::Complex64;
