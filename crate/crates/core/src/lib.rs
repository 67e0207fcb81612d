//! Spectral solver and verification toolkit for stationary and slowly
//! traveling free-boundary Navier–Stokes waves in a three-dimensional slab.

// Index loops mirror the component notation of the equations; negated
// comparisons deliberately treat NaN as failing the condition.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod chebyshev;
pub mod cli;
pub mod dsl;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod linear;
pub mod nonlinear;
pub mod oracle;
pub mod params;
pub mod pgamma;
pub mod spaces;
pub mod symbol;

pub use error::{Error, Result};
pub use grid::{make_grid, BulkField, Grid, SurfaceField, C64, I};
pub use params::{Params, SobolevIndex};
