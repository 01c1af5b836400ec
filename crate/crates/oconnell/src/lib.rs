//! Numerical evaluators for the softened gap observable of the O'Connell
//! process (the geometric lifting of noncolliding Brownian motion).
//!
//! The central quantity is the expectation of `theta_soft(X1(t) - h)` under
//! the lifted process started from its spreading entrance law. The crate
//! computes it along independent routes and provides the oracle layers used
//! to cross-validate them:
//!
//! * [`fredholm`] — the rank-N Gram reduction of the Fredholm determinant,
//!   the direct (N+1)-term Fredholm series, and the double-contour form.
//! * [`cbm`] — Monte Carlo over complex Brownian motion endpoints weighted by
//!   a determinant of lifted kernel factors.
//! * [`measure`] — direct quadrature against the Whittaker-measure density
//!   for N <= 2, plus contour/residue moment formulas.
//! * [`ncbm`] — Karlin-McGregor / noncolliding-BM densities and the gap
//!   probability that the lifted observable approaches as the softening
//!   scale `a` goes to zero.
//! * [`numkit`], [`whittaker`], [`kernel`] — the supporting special
//!   functions, quadrature rules and kernel evaluators.

pub mod cbm;
pub mod fredholm;
pub mod kernel;
pub mod measure;
pub mod ncbm;
pub mod numkit;
pub mod selftest;
pub mod testkit;
pub mod whittaker;

use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("argument is within 1e-14 of a nonpositive integer pole of Gamma: {re} + {im}i")]
    PoleArgument { re: f64, im: f64 },
    #[error("Bessel-K argument must be positive, got {0}")]
    NonPositiveArg(f64),
    #[error("time argument must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NonSquare { rows: usize, row: usize, cols: usize },
    #[error("invalid quadrature order: {0}")]
    BadOrder(String),
    #[error("array sizes inconsistent: {0}")]
    SizeMismatch(String),
    #[error("Whittaker evaluation supports N <= 3, got N = {0}")]
    UnsupportedN(usize),
    #[error("quadrature did not converge: {what} (refinement discrepancy {discrepancy:.3e} > {tol:.3e})")]
    NonConvergent { what: String, discrepancy: f64, tol: f64 },
    #[error("index entries must be distinct, minimum gap {0}")]
    DegenerateIndex(f64),
    #[error("r' = {0} is not one of the configured points")]
    RPrimeNotInConfig(f64),
    #[error("evaluation point within {dist:.3e} of pole {pole} (index {index})")]
    NearPole { dist: f64, pole: f64, index: usize },
    #[error("drift parameters invalid: {0}")]
    DegenerateDrift(String),
    #[error("contour specification violates its invariants: {0}")]
    ContourViolation(String),
    #[error("start configuration is degenerate (vanishing Vandermonde)")]
    DegenerateStart,
    #[error("shift degeneracy: {0}")]
    SingularShift(String),
    #[error("sample_count must be at least 100, got {0}")]
    TooFewSamples(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
