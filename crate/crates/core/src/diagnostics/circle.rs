//! Trace of `Δ⁻¹ ∫ T_g dg` (planar rotations) on a circle, by Nyström
//! quadrature of the logarithmic kernel, and its commutator with the
//! circle's own rotations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ActionKind, GroupAction};
use crate::numerics::spectral_norm;
use crate::operator::{DiscreteOperator, FourierGrid};

#[derive(Debug, Clone)]
pub struct CircleTrace {
    pub center: [f64; 2],
    pub radius: f64,
    /// Rotation center of the group.
    pub pivot: [f64; 2],
    /// Acts on coefficients in arclength, periodic grid of half-width `πR`.
    pub op: DiscreteOperator,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CommutatorReport {
    pub shift: f64,
    pub commutator_norm: f64,
    pub operator_norm: f64,
}

fn green(r: f64) -> f64 {
    -r.ln() / (2.0 * PI)
}

/// `modes` equispaced nodes in arclength; a node landing on its own image
/// gets the integrated self-term `∫_{-h/2}^{h/2} G`.
pub fn circle_trace(
    action: &GroupAction,
    center: [f64; 2],
    radius: f64,
    modes: usize,
    source_index: f64,
) -> Result<CircleTrace> {
    let pivot = match action.kind() {
        ActionKind::PlanarRotation { center } => *center,
        _ => return Err(Error::Unsupported("circle traces need planar rotations".into())),
    };
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Argument("circle radius must be positive".into()));
    }
    let grid = FourierGrid::new(1, modes, PI * radius, false)?;
    let nodes: Vec<[f64; 2]> = grid
        .axis_nodes()
        .iter()
        .map(|s| {
            let t = s / radius;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect();
    let h = grid.spacing();
    let self_term = -h * ((h / 2.0).ln() - 1.0) / (2.0 * PI);
    let touch = 1e-10 * radius.max(1.0);
    let mut k = DMatrix::<Complex64>::zeros(modes, modes);
    for node in action.quadrature() {
        let g = action.element(&node.param)?;
        for (j, y) in nodes.iter().enumerate() {
            let gy = g.apply(&DVector::from_row_slice(y));
            for (i, x) in nodes.iter().enumerate() {
                let r = (x[0] - gy[0]).hypot(x[1] - gy[1]);
                let v = if r < touch { self_term } else { h * green(r) };
                k[(i, j)] += Complex64::from(node.weight * v);
            }
        }
    }
    let n = grid.len();
    let mut fwd = DMatrix::zeros(n, n);
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = Complex64::new(1.0, 0.0);
        fwd.set_column(j, &grid.forward(&e)?);
        inv.set_column(j, &grid.inverse(&e)?);
    }
    let op = DiscreteOperator::new(fwd * k * inv, grid, source_index, grid, -1.0)?;
    Ok(CircleTrace { center, radius, pivot, op })
}

/// `‖op T'_h - T'_h op‖` where `T'_h` rotates the circle by angle `h` about
/// its own center.
pub fn commutator_norm(trace: &CircleTrace, h: f64) -> CommutatorReport {
    let g = &trace.op.source;
    let phase = DVector::from_fn(g.len(), |i, _| Complex64::from_polar(1.0, -g.frequency(i)[0] * trace.radius * h));
    let m = &trace.op.matrix;
    let left = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * phase[j]);
    let right = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| phase[i] * m[(i, j)]);
    CommutatorReport { shift: h, commutator_norm: spectral_norm(&(left - right)), operator_norm: spectral_norm(m) }
}

/// [`commutator_norm`], after checking that the group preserves the circle.
pub fn invariance_commutator(trace: &CircleTrace, h: f64) -> Result<CommutatorReport> {
    let off = (trace.center[0] - trace.pivot[0]).hypot(trace.center[1] - trace.pivot[1]);
    if off > 1e-12 * trace.radius.max(1.0) {
        return Err(Error::Precondition(format!("circle center is {off:e} away from the rotation center")));
    }
    Ok(commutator_norm(trace, h))
}
