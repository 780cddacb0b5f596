//! Discretized Sobolev spaces, boundary/coboundary maps, shifts, symbols and
//! trace assembly for affine submanifolds.

pub mod container;
pub mod grid;
pub mod maps;
pub mod sobolev;
pub mod trace;
pub mod transverse;

pub use grid::FourierGrid;
pub use maps::{embed, restrict, restriction_matrix, shift_apply, AffineFrame};
pub use sobolev::{psdo_apply, SobolevVector, Symbol};
pub use trace::{assemble_trace, DiscreteOperator, GOperatorSpec, TraceOptions};
pub use transverse::{transverse_bound_check, TransverseReport, TransverseSpec};
