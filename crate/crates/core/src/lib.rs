//! Counting orbit points of the Picard group `PSL2(Z[i])` in hyperbolic
//! 3-space by their distance to the totally geodesic plane `x2 = 0`.
//!
//! The crate is organised bottom-up:
//!
//! * [`gaussian`]: exact `Z[i]` arithmetic and unimodular matrices mod `±I`.
//! * [`geometry`]: upper half-space points, Möbius action, the sector chart
//!   `(x, u, v)` and finite-difference checks of its metric and Laplacian.
//! * [`reduction`]: reduction into a fundamental domain of the plane
//!   stabilizer and geometric coset keys.
//! * [`counting`]: the coset count `N(p, X)`, its main term, smoothed
//!   automorphic sums and full-group ball counts.
//! * [`transforms`]: the spherical function `ξ_λ`, the `d`/`c` transforms,
//!   smoothing profiles and the inverse Selberg transform of Gaussian test
//!   functions.
//! * [`experiments`]: radial and spatial mean squares of the error term and
//!   log-log exponent fits.
//! * [`verify`]: invariant suites with independent oracles, shared by the
//!   command-line `verify` command and the acceptance tests.

pub mod counting;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod geometry;
pub mod quadrature;
pub mod reduction;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use gaussian::{GMatrix, GaussInt};
pub use geometry::{Point, SectorCoords};
