//! Spectral analysis of the Dirichlet Laplacian in curved tubes.
//!
//! The pipeline runs from a curvature profile through the rotation-frame
//! ODE and the tube metric to a finite-difference discretization of the
//! Dirichlet form, its lowest eigenvalues, and a variational certificate
//! that a bound state exists below the transverse threshold μ₁.

// NaN-rejecting comparisons are written as negations on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod catalog;
pub mod certificate;
pub mod config;
pub mod error;
pub mod families;
pub mod frame;
pub mod geometry;
pub mod operator;
pub mod quad;
pub mod rotation;
pub mod run;
pub mod section;
pub mod sparse;
pub mod spectra;
pub mod tube;

pub use error::{Result, TubeError};
