//! Trace of `Δ⁻¹ ∫ T_φ dφ` (rotations about the z-axis) on a tilted plane,
//! in dual polar coordinates: a Mellin convolution with an operator-valued
//! kernel on the circle.

pub mod cov;
pub mod eq1;
pub mod eq2;
pub mod kernel;
pub mod symbol;

pub use cov::{cov_cartesian, cov_forward, cov_inverse, cov_jacobian, cov_point, inverse_angle, CovPoint, TiltConfig};
pub use eq1::{trace_direct_eq1, Annulus, Eq1Options};
pub use eq2::{
    log_coefficient, trace_via_mellin_eq2, trig_interpolate, Eq2Operator, Eq2Path, PolarOutput, PolarSamples,
};
pub use kernel::{
    graded_circle, kernel_k, nystrom_matrix, operator_norm_k, product_matrix, schur_integrals, SchurIntegrals,
    StaggeredCircle,
};
pub use symbol::{
    analyticity_and_decay, mellin_symbol, mellin_transform, AnalyticityReport, DecayRow, MellinOptions, MellinSymbol,
    Rectangle, SymbolQuadrature,
};
