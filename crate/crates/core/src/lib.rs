//! Numerical library for one-dimensional ECT (Extended Complete Chebyshev)
//! systems, Kolmogorov eigenvalue problems and widths on an interval, a
//! discrete operator algebra for factorized elliptic operators on square
//! grids, harmonic-width computations with brute-force oracles, and exact
//! bivariate symbol division.
//!
//! The crate is organized around five domain modules plus shared numerical
//! infrastructure:
//!
//! - [`ect1d`]: construction, verification and inversion of ECT systems,
//!   and exact piecewise-ECT partitions of polynomial bases.
//! - [`spectral1d`]: the interval eigenvalue problem for `(-1)^p d^{2p}/dt^{2p}`
//!   with natural boundary conditions, its spectrum, widths and Jackson bounds.
//! - [`elliptic2d`]: discrete elliptic operators `L_2p` on the unit square,
//!   Dirichlet solves, and the two-stage eigenfunction construction.
//! - [`widths`]: ellipsoid membership, principal axes, harmonic widths with
//!   a brute-force distance oracle, direct solutions, and subspace distances.
//! - [`symbols`]: exact rational bivariate symbols: ellipticity checks and
//!   graded-lex long division.
//!
//! All operations are pure functions of their inputs and safe to call from
//! multiple threads.

pub mod banded;
pub mod ect1d;
pub mod elliptic2d;
pub mod ratpoly;
pub mod report;
pub mod rng;
pub mod sampled;
pub mod spectral1d;
pub mod symbols;
pub mod widths;

pub use report::ExtReal;
pub use sampled::{Interval, SampledFunction};
