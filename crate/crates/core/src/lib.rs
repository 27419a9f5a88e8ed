//! Curvature and classification tools for standard static space-times
//! `I ×_f F` with metric `-f² dt² + g_F`.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`] parses chart expressions and evaluates them with exact
//!   second-order Taylor jets.
//! * [`geometry`] is a pointwise curvature engine for a single chart.
//! * [`warped`] assembles static space-times and computes their curvature
//!   both through the warped-product formulas and on the product chart.
//! * [`killing`] verifies Killing and conformal-Killing candidates and runs
//!   the structured classification of Killing fields.
//! * [`causal`] holds energy-condition reports, hyperbolicity classifiers,
//!   geodesic/Jacobi integration and the timelike diameter bound.
//! * [`manifest`], [`report`] and [`cli`] form the command-line surface.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod causal;
pub mod cli;
pub mod error;
pub mod expr;
pub mod fibers;
pub mod geometry;
pub mod killing;
pub mod manifest;
pub mod par;
pub mod report;
pub mod sampling;
pub mod warped;

pub use error::{Error, Result};
pub use expr::{Jet2, Params, ScalarExpr};
