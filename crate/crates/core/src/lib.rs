//! Numerics for half-line discrete Schrödinger operators with sparse barriers.
//!
//! The crate propagates EFGP (Prüfer) variables across geometrically spaced
//! barriers at any depth, fits growth exponents, evaluates the closed-form
//! Hausdorff-dimension bounds and runs the interval-covering constructions
//! that certify them.

// negated float comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod export;
pub mod growth;
pub mod hausdorff;
pub mod model;
pub mod phase;
pub mod propagate;
pub mod quadrature;
pub mod random;
pub mod selfcheck;
pub mod wholeline;

pub use error::{Error, Result};
pub use model::{essential_spectrum, EnergyOptions, EnergyPoint, PruferState, Site, SparseSpec, SparsityRule};
pub use phase::{reduce_phase, FixedPointPhase};
pub use propagate::{propagate, propagate_naive, PruferTrace, TraceRecord};
