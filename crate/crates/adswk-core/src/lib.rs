//! Numerical core for wave propagation on asymptotically anti-de Sitter slabs.
//!
//! The library works in collar coordinates (x, y) on X = [0, x_max) x Y with
//! Y = R_t x T^{n-2}: x is the boundary defining function, y_1 = t is the
//! distinguished time coordinate, and the remaining y are periodic. The
//! singular metric g = x^{-2} ghat is represented through the dual metric
//! Ghat of its smooth conformal multiple, from which everything else is
//! derived: null bicharacteristics and their boundary reflection law
//! ([`gbbflow`]), indicial roots and radial mode solutions ([`modes`]),
//! weighted Hardy/Poincare quadratic forms ([`functional`]), and a
//! finite-difference forward solver with stress-energy positivity checks
//! ([`evolve`]).

pub mod evolve;
pub mod functional;
pub mod gbbflow;
pub mod geometry;
pub mod modes;
pub mod num;

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
