//! Nonlocal Cahn-Hilliard simulation with an obstacle potential, and
//! multifidelity Monte Carlo estimation of its mass-fraction output.
//!
//! - [`grid`] and [`kernel`]: lattice over the domain plus interaction layer,
//!   Gaussian kernel and convolution stencil.
//! - [`solver`]: implicit time stepping with an active-set solver.
//! - [`mfmc`]: pilot statistics, subset selection, sample allocation and
//!   estimators.
//! - [`harness`]: campaign configuration, seeded sample streams, campaigns
//!   and file formats used by the command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod mfmc;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{build_grid, Field, Grid, NodeKind};
pub use kernel::{build_stencil, kernel_value, ConvolutionStencil, KernelParams};
