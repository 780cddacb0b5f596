//! G-operators `D = ∫ D_g T_g dg` with constant-coefficient `D_g` and the
//! assembly of their traces `i* D i_*` on affine submanifolds.
//!
//! In the continuous Fourier picture the trace acts on `û` (a function of the
//! tangential frequency η) by
//!
//! `(2π)^{-ν} Σ_g w_g ∫ dζ σ_g(ξ) e^{iξ·(x₀ - b_g - R_g x₀)} û(Pᵀ R_gᵀ ξ)`,
//! `ξ = Pη + Qζ`,
//!
//! which is evaluated at grid frequencies, with `û` at off-grid points taken
//! from the coefficient array by cubic interpolation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::FourierGrid;
use super::maps::AffineFrame;
use super::sobolev::{SobolevVector, Symbol};
use crate::error::{Error, Result};
use crate::geometry::{GroupAction, Submanifold};
use crate::numerics::spectral_norm;
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, GaussLegendre};

type Amplitude = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `σ_g(ξ) = a(g)·σ(ξ)`.
#[derive(Clone)]
pub struct GOperatorSpec {
    pub action: GroupAction,
    pub symbol: Symbol,
    amplitude: Option<Amplitude>,
}

impl std::fmt::Debug for GOperatorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GOperatorSpec")
            .field("action", self.action.kind())
            .field("symbol", &self.symbol)
            .field("amplitude", &self.amplitude.as_ref().map(|_| "fn"))
            .finish()
    }
}

impl GOperatorSpec {
    pub fn new(action: GroupAction, symbol: Symbol) -> Self {
        GOperatorSpec { action, symbol, amplitude: None }
    }

    pub fn with_amplitude(mut self, a: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.amplitude = Some(Arc::new(a));
        self
    }

    pub fn order(&self) -> f64 {
        self.symbol.order()
    }

    pub fn amplitude(&self, g: &[f64]) -> f64 {
        self.amplitude.as_ref().map_or(1.0, |a| a(g))
    }

    pub fn sigma(&self, g: &[f64], xi: &[f64]) -> f64 {
        self.amplitude(g) * self.symbol.eval(xi)
    }

    /// Largest central-difference slope of `g ↦ a(g)` over the quadrature
    /// nodes; non-finite values are a singularity error.
    pub fn continuity_check(&self) -> Result<f64> {
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for node in self.action.quadrature() {
            for k in 0..node.param.len() {
                let (mut p, mut m) = (node.param.clone(), node.param.clone());
                p[k] += h;
                m[k] -= h;
                let slope = (self.amplitude(&p) - self.amplitude(&m)) / (2.0 * h);
                if !slope.is_finite() || !self.amplitude(&node.param).is_finite() {
                    return Err(Error::Singularity(format!("amplitude not finite near {:?}", node.param)));
                }
                worst = worst.max(slope.abs());
            }
        }
        Ok(worst)
    }
}

/// Dense operator between coefficient spaces of two grids.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub matrix: DMatrix<Complex64>,
    pub source: FourierGrid,
    pub source_index: f64,
    pub target: FourierGrid,
    pub target_index: f64,
    pub order: f64,
}

impl DiscreteOperator {
    pub fn new(
        matrix: DMatrix<Complex64>,
        source: FourierGrid,
        source_index: f64,
        target: FourierGrid,
        order: f64,
    ) -> Result<Self> {
        if matrix.nrows() != target.len() || matrix.ncols() != source.len() {
            return Err(Error::GridMismatch(format!(
                "{}×{} matrix for grids of {} and {} modes",
                matrix.nrows(),
                matrix.ncols(),
                target.len(),
                source.len()
            )));
        }
        Ok(DiscreteOperator { matrix, source, source_index, target, target_index: source_index - order, order })
    }

    /// `W_t A W_s^{-1}`: the matrix whose spectral norm is the
    /// `H^{source} → H^{target}` operator norm.
    pub fn weighted(&self) -> DMatrix<Complex64> {
        weighted(&self.matrix, &self.source, self.source_index, &self.target, self.target_index)
    }

    pub fn norm_estimate(&self) -> f64 {
        spectral_norm(&self.weighted())
    }

    pub fn apply(&self, u: &SobolevVector) -> Result<SobolevVector> {
        if u.grid != self.source {
            return Err(Error::GridMismatch("vector is not on the operator's source grid".into()));
        }
        SobolevVector::new(self.target, &self.matrix * &u.coeffs, u.index - self.order)
    }
}

pub fn weighted(
    m: &DMatrix<Complex64>,
    source: &FourierGrid,
    s: f64,
    target: &FourierGrid,
    t: f64,
) -> DMatrix<Complex64> {
    let ws = source.sobolev_weights(s);
    let wt = target.sobolev_weights(t);
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (wt[i] / ws[j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Gauss–Legendre points per panel of the transverse integral.
    pub gl_points: usize,
    /// Panel width relative to `|ξ|` along the transverse line.
    pub panel_fraction: f64,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { gl_points: 8, panel_fraction: 0.5, threads: None }
    }
}

type IndexedRow = (usize, Vec<Complex64>);

struct NodeTerm {
    weight: f64,
    /// `Pᵀ R_gᵀ P`, `Pᵀ R_gᵀ q`.
    a_map: DMatrix<f64>,
    c: DVector<f64>,
    /// phase direction `v = x₀ - b - R x₀`.
    v: DVector<f64>,
}

/// Trace `i* D i_*` of a G-operator on an affine hypersurface, as a matrix on
/// `grid`'s coefficients; the result has order `d + 1` and maps
/// `H^s → H^{s-d-1}`.
pub fn assemble_trace(
    spec: &GOperatorSpec,
    sub: &Submanifold,
    grid: &FourierGrid,
    source_index: f64,
    opts: &TraceOptions,
) -> Result<DiscreteOperator> {
    let frame = AffineFrame::from_submanifold(sub)?;
    if frame.ambient_dim() != spec.action.ambient_dim() {
        return Err(Error::Argument("action and submanifold live in different spaces".into()));
    }
    if frame.codim() != 1 {
        return Err(Error::Unsupported("trace assembly is implemented for codimension one".into()));
    }
    if grid.dim != frame.dim() {
        return Err(Error::GridMismatch(format!("{}-d grid for a {}-d submanifold", grid.dim, frame.dim())));
    }
    if opts.gl_points == 0 || !(opts.panel_fraction > 0.0) {
        return Err(Error::Argument("trace options need gl_points ≥ 1 and panel_fraction > 0".into()));
    }
    spec.continuity_check()?;
    let p = &frame.tangent;
    let q = frame.normal.column(0).into_owned();
    let mut terms = Vec::new();
    for node in spec.action.quadrature() {
        let g = spec.action.element(&node.param)?;
        let rt = g.linear.transpose();
        let weight = node.weight * spec.amplitude(&node.param);
        if weight == 0.0 {
            continue;
        }
        terms.push(NodeTerm {
            weight,
            a_map: p.transpose() * &rt * p,
            c: p.transpose() * &rt * &q,
            v: &frame.origin - &g.offset - &g.linear * &frame.origin,
        });
    }
    let ctx = Ctx { spec, grid, p, q: &q, terms: &terms, gl: GaussLegendre::new(opts.gl_points), opts };
    let rows = grid.len();
    let threads =
        opts.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).clamp(1, rows);
    let chunk = rows.div_ceil(threads);
    let results: Vec<Result<Vec<IndexedRow>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let ctx = &ctx;
                scope.spawn(move || {
                    (t * chunk..((t + 1) * chunk).min(rows)).map(|i| ctx.row(i).map(|r| (i, r))).collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("trace worker panicked")).collect()
    });
    let mut matrix = DMatrix::zeros(rows, rows);
    for part in results {
        for (i, row) in part? {
            for (j, v) in row.into_iter().enumerate() {
                matrix[(i, j)] = v;
            }
        }
    }
    DiscreteOperator::new(matrix, *grid, source_index, *grid, spec.order() + 1.0)
}

struct Ctx<'a> {
    spec: &'a GOperatorSpec,
    grid: &'a FourierGrid,
    p: &'a DMatrix<f64>,
    q: &'a DVector<f64>,
    terms: &'a [NodeTerm],
    gl: GaussLegendre,
    opts: &'a TraceOptions,
}

impl Ctx<'_> {
    fn row(&self, i: usize) -> Result<Vec<Complex64>> {
        let eta = DVector::from_vec(self.grid.frequency(i));
        let n0 = eta.norm_squared();
        let xi0 = self.p * &eta;
        let mut row = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for term in self.terms {
            let a = &term.a_map * &eta;
            let theta0 = xi0.dot(&term.v);
            let theta1 = self.q.dot(&term.v);
            if term.c.amax() < 1e-13 {
                let integral = self.fixed_point_integral(n0, theta0, theta1)?;
                let scale = integral * term.weight;
                self.grid.for_each_cubic_weight(a.as_slice(), |j, w| row[j] += scale * w);
            } else {
                self.moving_integral(n0, &a, &term.c, theta0, theta1, term.weight, &mut row)?;
            }
        }
        let norm = 1.0 / std::f64::consts::TAU;
        row.iter_mut().for_each(|v| *v *= norm);
        Ok(row)
    }

    fn sigma(&self, n2: f64) -> Result<f64> {
        let v = self.spec.symbol.eval_norm_sq(n2);
        if !v.is_finite() {
            return Err(Error::Singularity(format!("symbol not finite at |ξ|² = {n2:e}")));
        }
        Ok(v)
    }

    /// `∫ σ(|η|² + ζ²) e^{i(θ₀+θ₁ζ)} dζ` when the interpolation point does
    /// not move with ζ.
    fn fixed_point_integral(&self, n0: f64, theta0: f64, theta1: f64) -> Result<Complex64> {
        if matches!(self.spec.symbol, Symbol::Zero) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if self.spec.order() >= -1.0 {
            return Err(Error::Precondition(format!(
                "transverse integral of a symbol of order {} diverges",
                self.spec.order()
            )));
        }
        let r = if n0 > 0.0 { n0.sqrt() } else { 1.0 };
        let base = Complex64::from_polar(1.0, theta0);
        if theta1.abs() < 1e-14 {
            // ζ = r tan θ removes the infinite range
            let opts = AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 };
            let res = integrate_adaptive(
                |t: f64| {
                    let z = r * t.tan();
                    let c = t.cos();
                    self.spec.symbol.eval_norm_sq(n0 + z * z) * r / (c * c)
                },
                -std::f64::consts::FRAC_PI_2,
                std::f64::consts::FRAC_PI_2,
                &[],
                opts,
            )?;
            if !res.value.is_finite() {
                return Err(Error::Singularity("transverse integral is not finite".into()));
            }
            return Ok(base * res.value);
        }
        // oscillatory: truncated composite rule
        let period = std::f64::consts::TAU / theta1.abs();
        let reach = 64.0 * (period + r);
        let width = (0.25 * period).min(0.5 * r).max(reach / 20_000.0);
        let panels = (2.0 * reach / width).ceil() as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..panels {
            let lo = -reach + k as f64 * width;
            for (z, w) in self.gl.on_interval(lo, lo + width) {
                acc += Complex64::from_polar(w * self.sigma(n0 + z * z)?, theta1 * z);
            }
        }
        Ok(base * acc)
    }

    #[allow(clippy::too_many_arguments)]
    fn moving_integral(
        &self,
        n0: f64,
        a: &DVector<f64>,
        c: &DVector<f64>,
        theta0: f64,
        theta1: f64,
        weight: f64,
        row: &mut [Complex64],
    ) -> Result<()> {
        let freqs = self.grid.axis_frequencies();
        let (first, last) = (freqs[0], freqs[freqs.len() - 1]);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for d in 0..a.len() {
            if c[d].abs() < 1e-13 {
                if a[d] < first || a[d] > last {
                    return Ok(());
                }
                continue;
            }
            let (z1, z2) = ((first - a[d]) / c[d], (last - a[d]) / c[d]);
            lo = lo.max(z1.min(z2));
            hi = hi.min(z1.max(z2));
        }
        if !(hi > lo) {
            return Ok(());
        }
        let mut breaks = vec![lo, hi];
        for d in 0..a.len() {
            if c[d].abs() < 1e-13 {
                continue;
            }
            for f in &freqs {
                let z = (f - a[d]) / c[d];
                if z > lo && z < hi {
                    breaks.push(z);
                }
            }
        }
        if lo < 0.0 && hi > 0.0 {
            breaks.push(0.0);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
        let frac = self.opts.panel_fraction;
        let mut point = vec![0.0; a.len()];
        for win in breaks.windows(2) {
            let (z0, z1) = (win[0], win[1]);
            let near = if z0 <= 0.0 && z1 >= 0.0 { 0.0 } else { z0.abs().min(z1.abs()) };
            let mut h = frac * (n0 + near * near).sqrt().max(1e-3 * self.grid.spacing());
            if theta1 != 0.0 {
                h = h.min(std::f64::consts::FRAC_PI_2 / theta1.abs());
            }
            let pieces = ((z1 - z0) / h).ceil().max(1.0) as usize;
            let step = (z1 - z0) / pieces as f64;
            for k in 0..pieces {
                let s0 = z0 + k as f64 * step;
                for (z, w) in self.gl.on_interval(s0, s0 + step) {
                    let amp = w * weight * self.sigma(n0 + z * z)?;
                    let val = Complex64::from_polar(amp, theta0 + theta1 * z);
                    for d in 0..a.len() {
                        point[d] = a[d] + c[d] * z;
                    }
                    self.grid.for_each_cubic_weight(&point, |j, l| row[j] += val * l);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ActionKind, SubmanifoldKind};

    fn plane() -> Submanifold {
        Submanifold::new(SubmanifoldKind::Affine {
            origin: vec![0.0; 3],
            basis: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        })
        .unwrap()
    }

    fn trivial() -> GroupAction {
        GroupAction::new(ActionKind::AxialRotation { axis_point: [0.0; 3], axis_direction: [0.0, 0.0, 1.0] }, 1)
            .unwrap()
    }

    #[test]
    fn trivial_group_inverse_laplacian_on_a_plane() {
        let grid = FourierGrid::new(2, 8, 2.0, true).unwrap();
        let spec = GOperatorSpec::new(trivial(), Symbol::InverseLaplacian);
        let op = assemble_trace(&spec, &plane(), &grid, -0.5, &TraceOptions::default()).unwrap();
        assert_eq!(op.order, -1.0);
        assert_eq!(op.target_index, 0.5);
        for i in 0..grid.len() {
            let eta: f64 = grid.frequency(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            // (2π)^{-1} ∫ dζ / (|η|² + ζ²) = 1/(2|η|)
            for j in 0..grid.len() {
                let expect = if i == j { 0.5 / eta } else { 0.0 };
                assert!((op.matrix[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-11, "{i} {j}");
            }
        }
    }

    #[test]
    fn zero_symbol_gives_zero_matrix() {
        let grid = FourierGrid::new(2, 4, 2.0, true).unwrap();
        let action = GroupAction::staggered(
            ActionKind::AxialRotation { axis_point: [0.0; 3], axis_direction: [0.0, 0.0, 1.0] },
            8,
        )
        .unwrap();
        let spec = GOperatorSpec::new(action, Symbol::Zero);
        let op = assemble_trace(&spec, &plane(), &grid, -0.5, &TraceOptions::default()).unwrap();
        assert_eq!(op.matrix.norm(), 0.0);
    }

    #[test]
    fn curved_submanifold_is_unsupported() {
        let grid = FourierGrid::new(2, 4, 2.0, true).unwrap();
        let sphere = Submanifold::new(SubmanifoldKind::Sphere { center: vec![0.0; 3], radius: 1.0 }).unwrap();
        let spec = GOperatorSpec::new(trivial(), Symbol::InverseLaplacian);
        let r = assemble_trace(&spec, &sphere, &grid, -0.5, &TraceOptions::default());
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn order_zero_on_the_identity_node_diverges() {
        let grid = FourierGrid::new(2, 4, 2.0, true).unwrap();
        let spec = GOperatorSpec::new(trivial(), Symbol::Identity);
        let r = assemble_trace(&spec, &plane(), &grid, 0.0, &TraceOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn thread_count_does_not_change_the_matrix() {
        let grid = FourierGrid::new(2, 6, 2.0, true).unwrap();
        let tilted = Submanifold::new(SubmanifoldKind::Affine {
            origin: vec![0.0; 3],
            basis: vec![vec![0.8, 0.0, 0.6], vec![0.0, 1.0, 0.0]],
        })
        .unwrap();
        let action = GroupAction::staggered(
            ActionKind::AxialRotation { axis_point: [0.0; 3], axis_direction: [0.0, 0.0, 1.0] },
            16,
        )
        .unwrap();
        let spec = GOperatorSpec::new(action, Symbol::InverseLaplacian);
        let one = assemble_trace(&spec, &tilted, &grid, -0.5, &TraceOptions { threads: Some(1), ..Default::default() })
            .unwrap();
        let many =
            assemble_trace(&spec, &tilted, &grid, -0.5, &TraceOptions { threads: Some(5), ..Default::default() })
                .unwrap();
        assert_eq!(one.matrix, many.matrix);
    }
}
