//! Solver toolkit for Dirichlet problems driven by the weighted p-Laplacian
//! `-div(a(x) |grad u|^(p-2) grad u) = F(x, u)` on domains whose weight `a`
//! degenerates or blows up at the boundary.
//!
//! The pieces, bottom up:
//!
//! * [`quadrature`] - adaptive integration aware of endpoint singularities.
//! * [`weights`] - boundary weight profiles, exponent bookkeeping, hypothesis checks.
//! * [`geometry`] - collar coordinates and Jacobians for interval, ball, annulus.
//! * [`resolvent`] - the one-dimensional/radial inverse of the weighted operator.
//! * [`comparison`] - distance-comparable barrier `psi` and boundary quotients.
//! * [`barriers`] - semipositone sub/supersolution pair and lambda thresholds.
//! * [`fixedpoint`] - truncated right-hand sides, damped Picard iteration, a
//!   priori ladder checks.
//! * [`cli`] - the `degenlap` command line entry points.

pub mod barriers;
pub mod cli;
pub mod comparison;
pub mod config;
pub mod error;
pub mod field;
pub mod fixedpoint;
pub mod geometry;
pub mod quadrature;
pub mod report;
pub mod resolvent;
pub mod weights;

pub use error::{Error, Result};
pub use field::{Field, Mesh};
