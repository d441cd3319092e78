//! Numerical reduced geometry on exactly known ancient super Ricci flows.
//!
//! The crate tabulates Perelman's reduced distance on a catalog of
//! symmetry-reduced flows, evaluates the reduced volume and the local
//! pseudo heat ball quantities `I`, `J` against admissible weights, and
//! extrapolates their asymptotic limits.
//!
//! * [`models`]: the flow catalog, structural checks and static geometry.
//! * [`lgeo`]: L-length, reduced distance routes, gridded fields, bound checks.
//! * [`weights`]: weight functions and weak-form subsolution certification.
//! * [`functionals`]: reduced volume, pseudo heat balls, `I`, `J`, limits.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod functionals;
pub mod lgeo;
pub mod models;
pub mod quadrature;
pub mod weights;

pub use error::{Error, Result};
