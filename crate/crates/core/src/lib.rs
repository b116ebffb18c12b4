//! Worst-case analysis toolkit for Bregman first-order methods.
//!
//! The crate has three layers:
//!
//! * **Performance estimation.** [`pep`] assembles semidefinite programs whose
//!   optimal value is the exact worst-case convergence rate of NoLips (Bregman
//!   gradient descent) and of the inertial IGA scheme over relatively-smooth
//!   function pairs. [`sdp`] is a small self-contained operator-splitting
//!   solver for these programs, and [`interp`] generates the convex
//!   interpolation constraints they are built from.
//! * **Analytic instances and executors.** [`instances`] implements the
//!   closed-form worst-case function families (smoothed max-distance pairs,
//!   the one-dimensional Huber pair, the coordinate-aligned nonsmooth pair)
//!   and [`algorithms`] runs NoLips/IGA against first-order oracles, with a
//!   span-tracking harness for generic black-box methods and the lower-bound
//!   experiment built on top of it.
//! * **Certificates.** [`certificates`] encodes the weighted-sum proofs of
//!   the `O(1/k)` function-value rate and the `O(1/k^2)` residual rate as
//!   exact algebraic identities, and compares solver duals against them.

pub mod algorithms;
pub mod certificates;
pub mod instances;
pub mod interp;
pub mod model;
pub mod pep;
pub mod sdp;

pub use model::{
    bregman_distance, gram_from_representation, representation_from_gram, DiscretePoint,
    DiscreteRepresentation, IndexSet, PepMatrices, PointIndex, ProblemParams,
};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("data is not interpolable: {0}")]
    NotInterpolable(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("span rule violation: {0}")]
    SpanViolation(String),
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
