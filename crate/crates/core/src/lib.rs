//! Traces of operators associated with compact group actions: localization
//! geometry, discretized trace assembly, spectral diagnostics, the Mellin
//! analysis of a tilted plane, and the screw-motion symbol family.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod mellin;
pub mod numerics;
pub mod operator;
pub mod quadrature;
pub mod screw;

pub use error::{Error, ErrorCategory, Result};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
