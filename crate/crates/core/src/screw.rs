//! Screw motions of `R²_{x,z} × S¹_y` and their trace on `{z = 0}`: the
//! per-angle operator-valued symbol
//! `A_φ(η) u(ξ) = |sin φ| ∫ u(z) dz / (ξ² - 2ξz cos φ + z² + η² sin² φ)`,
//! its twisted homogeneity, Schur integrals, norm continuity in `φ`, and the
//! fiber operators `B(η) = ∫ A_φ(η) e^{-iηφ} dφ`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::spectral_norm;
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, Vector};

/// `|sin φ|` below this counts as the singular family.
pub const SINGULAR_MARGIN: f64 = 1e-4;

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Nodes `z_j = sinh τ_j` on a uniform, zero-avoiding grid in `τ`; dense near
/// the origin, geometric towards `±z_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    pub tau_step: f64,
    pub taus: Vec<f64>,
    pub nodes: Vec<f64>,
    /// `cosh τ_j · Δτ`.
    pub weights: Vec<f64>,
}

impl LineGrid {
    pub fn graded(n: usize, z_max: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Argument(format!("line grid needs an even n ≥ 4, got {n}")));
        }
        if !(z_max > 0.0) || !z_max.is_finite() {
            return Err(Error::Argument(format!("line grid extent {z_max} must be positive")));
        }
        let tau_step = 2.0 * z_max.asinh() / n as f64;
        let taus: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5 - n as f64 / 2.0) * tau_step).collect();
        let nodes = taus.iter().map(|t| t.sinh()).collect();
        let weights = taus.iter().map(|t| t.cosh() * tau_step).collect();
        Ok(LineGrid { tau_step, taus, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrewSymbol {
    pub phi: f64,
    pub eta: f64,
    pub s: f64,
    pub grid: LineGrid,
}

fn check_index(s: f64) -> Result<()> {
    if !(s > -1.0 && s < 0.0) {
        return Err(Error::Domain(format!("Sobolev index {s} must lie in (-1, 0)")));
    }
    Ok(())
}

/// `|sin φ| / ((z - ξ cos φ)² + sin² φ (ξ² + η²))`.
#[inline]
fn kernel(sp: f64, cp: f64, eta: f64, xi: f64, z: f64) -> f64 {
    let d = z - xi * cp;
    let den = d * d + sp * sp * (xi * xi + eta * eta);
    if den == 0.0 {
        0.0
    } else {
        sp.abs() / den
    }
}

/// Cubic Lagrange basis on the nodes -1, 0, 1, 2, evaluated at `t ∈ [0, 1]`.
fn cubic_basis(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

impl ScrewSymbol {
    pub fn new(phi: f64, eta: f64, s: f64, grid: LineGrid) -> Result<Self> {
        check_index(s)?;
        if !phi.is_finite() || !eta.is_finite() {
            return Err(Error::Argument("φ and η must be finite".into()));
        }
        Ok(ScrewSymbol { phi, eta, s, grid })
    }

    /// `sin φ` is within [`SINGULAR_MARGIN`] of zero.
    pub fn near_singular(&self) -> bool {
        self.phi.sin().abs() < SINGULAR_MARGIN
    }

    pub fn kernel(&self, xi: f64, z: f64) -> f64 {
        let (sp, cp) = self.phi.sin_cos();
        kernel(sp, cp, self.eta, xi, z)
    }

    /// Nodal values to nodal values: the kernel integrated exactly against
    /// the piecewise cubic interpolant in `τ`, zero beyond the grid.
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let g = &self.grid;
        let n = g.len();
        let (sp, cp) = self.phi.sin_cos();
        let mut out = DMatrix::zeros(n, n);
        if sp == 0.0 {
            return Ok(out);
        }
        let opts = AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-11, max_intervals: 2000 };
        let t0 = g.taus[0];
        for (i, &xi) in g.nodes.iter().enumerate() {
            let peak = (xi * cp).asinh();
            let width = sp.abs() * (xi * xi + self.eta * self.eta).sqrt();
            let breaks = [peak, (xi * cp - width).asinh(), (xi * cp + width).asinh()];
            for k in -2..=(n as i64) {
                let a = t0 + k as f64 * g.tau_step;
                let cell = integrate_adaptive(
                    |tau: f64| {
                        let kv = kernel(sp, cp, self.eta, xi, tau.sinh()) * tau.cosh();
                        let l = cubic_basis((tau - a) / g.tau_step);
                        Vector([kv * l[0], kv * l[1], kv * l[2], kv * l[3]])
                    },
                    a,
                    a + g.tau_step,
                    &breaks,
                    opts,
                )?;
                for (q, v) in cell.value.0.iter().enumerate() {
                    let j = k - 1 + q as i64;
                    if j >= 0 && (j as usize) < n {
                        out[(i, j as usize)] += v;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `L²`-normalized form `⟨ξ⟩^{s+1} A ⟨z⟩^{-s}` of a nodal matrix on `grid`.
pub fn weighted_matrix<T: nalgebra::ComplexField<RealField = f64> + Copy>(
    matrix: &DMatrix<T>,
    grid: &LineGrid,
    s: f64,
) -> DMatrix<T> {
    let root: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    DMatrix::from_fn(matrix.nrows(), matrix.ncols(), |i, j| {
        let f = root[i] * bracket(grid.nodes[i]).powf(s + 1.0) * bracket(grid.nodes[j]).powf(-s) / root[j];
        matrix[(i, j)] * T::from_real(f)
    })
}

/// Norm `L²(⟨z⟩^{2s}) → L²(⟨ξ⟩^{2(s+1)})` of a nodal matrix on `grid`.
pub fn weighted_norm<T: nalgebra::ComplexField<RealField = f64> + Copy>(
    matrix: &DMatrix<T>,
    grid: &LineGrid,
    s: f64,
) -> f64 {
    spectral_norm(&weighted_matrix(matrix, grid, s))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolOutput {
    pub values: Vec<f64>,
    /// `sin φ` is inside the singular margin.
    pub flagged: bool,
}

/// `A_φ(η) u` at the grid nodes for nodal values `u`.
pub fn symbol_apply(sym: &ScrewSymbol, u: &[f64]) -> Result<SymbolOutput> {
    if u.len() != sym.grid.len() {
        return Err(Error::GridMismatch(format!("{} values on a grid of {}", u.len(), sym.grid.len())));
    }
    let m = sym.matrix()?;
    let values = (&m * nalgebra::DVector::from_column_slice(u)).iter().copied().collect();
    Ok(SymbolOutput { values, flagged: sym.near_singular() })
}

/// `A_φ(η) u` at arbitrary `xi` for `u` negligible outside `[-reach, reach]`,
/// by adaptive quadrature.
pub fn symbol_apply_fn<F: Fn(f64) -> f64>(phi: f64, eta: f64, u: F, reach: f64, xi: &[f64]) -> Result<Vec<f64>> {
    if !(reach > 0.0) {
        return Err(Error::Argument("integration reach must be positive".into()));
    }
    let (sp, cp) = phi.sin_cos();
    if sp == 0.0 {
        return Ok(vec![0.0; xi.len()]);
    }
    let opts = AdaptiveOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 4000 };
    xi.iter()
        .map(|&x| {
            let c = x * cp;
            let w = sp.abs() * (x * x + eta * eta).sqrt();
            let breaks = [c, c - w, c + w, c - 10.0 * w, c + 10.0 * w];
            Ok(integrate_adaptive(|z: f64| kernel(sp, cp, eta, x, z) * u(z), -reach, reach, &breaks, opts)?.value)
        })
        .collect()
}

/// `max_ξ |A_φ(λη) u - λ⁻¹ κ_λ⁻¹ A_φ(η) κ_λ u|` with `κ_λ f(z) = f(λz)`.
pub fn homogeneity_residual<F: Fn(f64) -> f64>(
    phi: f64,
    eta: f64,
    lambda: f64,
    u: F,
    reach: f64,
    xi: &[f64],
) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("dilation λ = {lambda} must be positive")));
    }
    if eta == 0.0 {
        return Err(Error::Domain("twisted homogeneity needs η ≠ 0".into()));
    }
    let lhs = symbol_apply_fn(phi, lambda * eta, &u, reach, xi)?;
    let scaled: Vec<f64> = xi.iter().map(|x| x / lambda).collect();
    let rhs = symbol_apply_fn(phi, eta, |z| u(lambda * z), reach / lambda, &scaled)?;
    Ok(lhs.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b / lambda).abs())))
}

/// `∫_R f` via `z = c + w sinh v` on `|v| ≤ V`, plus power tails `f ~ |z|^{-p}`.
fn line_integral<F: Fn(f64) -> f64>(f: F, center: f64, width: f64, p: f64) -> Result<f64> {
    let reach = 1e8 * (center.abs() + width + 1.0);
    let v_max = (reach / width).asinh();
    let opts = AdaptiveOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 4000 };
    let body =
        integrate_adaptive(|v: f64| f(center + width * v.sinh()) * width * v.cosh(), -v_max, v_max, &[0.0], opts)?;
    let (z_lo, z_hi) = (center - width * v_max.sinh(), center + width * v_max.sinh());
    let tails = (f(z_lo) * z_lo.abs() + f(z_hi) * z_hi.abs()) / (p - 1.0);
    Ok(body.value + tails)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchurRow {
    pub phi: f64,
    /// `sup_ξ ∫ |K(ξ, z)| dz` over the grid.
    pub over_z: f64,
    /// `sup_z ∫ |K(ξ, z)| dξ` over the grid.
    pub over_xi: f64,
}

impl SchurRow {
    pub fn max(&self) -> f64 {
        self.over_z.max(self.over_xi)
    }
}

/// `∫ |K(ξ, z)| dz` for `K = ⟨ξ⟩^{s+1} |sin φ| ⟨z⟩^{-s} / ((ξ - z cos φ)² + sin² φ ⟨z⟩²)`.
pub fn schur_row(phi: f64, s: f64, xi: f64) -> Result<f64> {
    check_index(s)?;
    let (sp, cp) = phi.sin_cos();
    let k = |z: f64| bracket(xi).powf(s + 1.0) * kernel(sp, cp, 1.0, xi, z) * bracket(z).powf(-s);
    line_integral(k, xi * cp, sp.abs() * bracket(xi), 2.0 + s)
}

/// `∫ |K(ξ, z)| dξ`.
pub fn schur_column(phi: f64, s: f64, z: f64) -> Result<f64> {
    check_index(s)?;
    let (sp, cp) = phi.sin_cos();
    let k = |xi: f64| bracket(xi).powf(s + 1.0) * kernel(sp, cp, 1.0, z, xi) * bracket(z).powf(-s);
    line_integral(k, z * cp, sp.abs() * bracket(z), 1.0 - s)
}

/// Both Schur integrals maximized over `points` for each angle.
pub fn schur_bounds(s: f64, points: &[f64], phis: &[f64]) -> Result<Vec<SchurRow>> {
    check_index(s)?;
    phis.iter()
        .map(|&phi| {
            if phi.sin().abs() < SINGULAR_MARGIN {
                return Err(Error::Domain(format!("φ = {phi} is inside the singular margin")));
            }
            let mut row = SchurRow { phi, over_z: 0.0, over_xi: 0.0 };
            for &x in points {
                row.over_z = row.over_z.max(schur_row(phi, s, x)?);
                row.over_xi = row.over_xi.max(schur_column(phi, s, x)?);
            }
            Ok(row)
        })
        .collect()
}

/// `∫ dt/(t² + 1) · (1 + (1 + |t|)²)^{-s/2}`, an upper bound for the row
/// integrals.
pub fn schur_majorant(s: f64) -> Result<f64> {
    check_index(s)?;
    let f = |t: f64| (1.0 + (1.0 + t.abs()).powi(2)).powf(-s / 2.0) / (t * t + 1.0);
    line_integral(f, 0.0, 1.0, 2.0 + s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub from: f64,
    pub to: f64,
    /// `‖A_to - A_from‖` in the weighted norm.
    pub difference: f64,
}

/// Weighted norms of consecutive differences along `phis`.
pub fn continuity_scan(eta: f64, s: f64, phis: &[f64], grid: &LineGrid) -> Result<Vec<ContinuityRow>> {
    check_index(s)?;
    if phis.iter().any(|p| p.sin().abs() < SINGULAR_MARGIN) {
        return Err(Error::Domain("the scan must avoid φ = 0 and π".into()));
    }
    let mut prev: Option<(f64, DMatrix<f64>)> = None;
    let mut out = Vec::with_capacity(phis.len().saturating_sub(1));
    for &phi in phis {
        let m = ScrewSymbol::new(phi, eta, s, grid.clone())?.matrix()?;
        if let Some((p0, m0)) = prev {
            out.push(ContinuityRow { from: p0, to: phi, difference: weighted_norm(&(&m - &m0), grid, s) });
        }
        prev = Some((phi, m));
    }
    Ok(out)
}

/// Ratios `d_{k+1} / d_k` of consecutive scan differences. On a grid whose
/// steps halve, values near ½ mean Lipschitz dependence, values near 1 mean
/// the differences do not shrink.
pub fn halving_ratios(rows: &[ContinuityRow]) -> Vec<f64> {
    rows.windows(2).map(|w| w[1].difference / w[0].difference).collect()
}

/// Discontinuity signature threshold on [`halving_ratios`].
pub const DISCONTINUITY_RATIO: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct FiberOperator {
    pub eta: i64,
    pub s: f64,
    pub grid: LineGrid,
    pub matrix: DMatrix<Complex64>,
}

impl FiberOperator {
    pub fn weighted_norm(&self) -> f64 {
        weighted_norm(&self.matrix, &self.grid, self.s)
    }
}

/// `B(η) = (2π)⁻¹ ∫ A_φ(η) e^{-iηφ} dφ`, trapezoid on `nodes` half-offset
/// angles scaled by `weight_scale` (zero gives the zero operator).
pub fn fiber_trace(eta: i64, nodes: usize, s: f64, grid: &LineGrid, weight_scale: f64) -> Result<FiberOperator> {
    check_index(s)?;
    if nodes < 2 {
        return Err(Error::Argument("fiber quadrature needs at least two angles".into()));
    }
    if 2 * eta.unsigned_abs() as usize >= nodes {
        return Err(Error::Argument(format!("{nodes} angles alias the fiber frequency {eta}")));
    }
    let n = grid.len();
    let mut matrix = DMatrix::<Complex64>::zeros(n, n);
    if weight_scale != 0.0 {
        let h = TAU / nodes as f64;
        for k in 0..nodes {
            let mut phi = (k as f64 + 0.5) * h;
            // keep off the singular family; the integrand is bounded there
            let d0 = phi.sin().abs();
            if d0 < SINGULAR_MARGIN {
                phi += if phi < PI / 2.0 || (phi > PI && phi < 1.5 * PI) { SINGULAR_MARGIN } else { -SINGULAR_MARGIN };
            }
            let a = ScrewSymbol::new(phi, eta as f64, s, grid.clone())?.matrix()?;
            let phase = Complex64::from_polar(weight_scale / nodes as f64, -(eta as f64) * phi);
            matrix += a.map(|v| phase * v);
        }
    }
    Ok(FiberOperator { eta, s, grid: grid.clone(), matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn gauss(z: f64) -> f64 {
        (-z * z).exp()
    }

    #[test]
    fn grid_is_symmetric_and_avoids_zero() {
        let g = LineGrid::graded(16, 1e3).unwrap();
        for j in 0..16 {
            assert!((g.nodes[j] + g.nodes[15 - j]).abs() < 1e-12);
            assert!(g.nodes[j] != 0.0);
        }
        assert!(g.nodes[15] < 1e3 && g.nodes[15] > 500.0);
    }

    #[test]
    fn zero_in_zero_out() {
        let g = LineGrid::graded(32, 50.0).unwrap();
        let sym = ScrewSymbol::new(1.0, 1.0, -0.5, g).unwrap();
        let out = symbol_apply(&sym, &[0.0; 32]).unwrap();
        assert!(out.values.iter().all(|v| *v == 0.0) && !out.flagged);
    }

    #[test]
    fn index_range_is_enforced() {
        let g = LineGrid::graded(8, 10.0).unwrap();
        assert!(matches!(ScrewSymbol::new(1.0, 1.0, 0.0, g.clone()), Err(Error::Domain(_))));
        assert!(matches!(schur_majorant(-1.0), Err(Error::Domain(_))));
        assert!(matches!(homogeneity_residual(1.0, 1.0, -2.0, gauss, 10.0, &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn near_singular_angles_are_flagged() {
        let g = LineGrid::graded(8, 10.0).unwrap();
        assert!(ScrewSymbol::new(5e-5, 1.0, -0.5, g.clone()).unwrap().near_singular());
        assert!(ScrewSymbol::new(PI - 5e-5, 1.0, -0.5, g.clone()).unwrap().near_singular());
        assert!(!ScrewSymbol::new(0.1, 1.0, -0.5, g).unwrap().near_singular());
    }

    #[test]
    fn even_input_gives_even_output_at_right_angle() {
        let g = LineGrid::graded(64, 100.0).unwrap();
        let sym = ScrewSymbol::new(FRAC_PI_2, 1.0, -0.5, g.clone()).unwrap();
        let u: Vec<f64> = g.nodes.iter().map(|z| gauss(*z)).collect();
        let out = symbol_apply(&sym, &u).unwrap().values;
        for j in 0..64 {
            assert!((out[j] - out[63 - j]).abs() < 1e-12 * out[j].abs().max(1e-300));
        }
    }

    #[test]
    fn matrix_converges_to_adaptive_quadrature() {
        let mut errs = vec![];
        for n in [128, 256] {
            let g = LineGrid::graded(n, 100.0).unwrap();
            let m = ScrewSymbol::new(PI / 3.0, 1.0, -0.5, g.clone()).unwrap().matrix().unwrap();
            let u: Vec<f64> = g.nodes.iter().map(|z| gauss(*z)).collect();
            let rows: Vec<usize> = (0..n).filter(|i| g.nodes[*i].abs() < 3.0).collect();
            let xi: Vec<f64> = rows.iter().map(|i| g.nodes[*i]).collect();
            let want = symbol_apply_fn(PI / 3.0, 1.0, gauss, 12.0, &xi).unwrap();
            let err = rows
                .iter()
                .zip(&want)
                .map(|(&i, w)| ((0..n).map(|j| m[(i, j)] * u[j]).sum::<f64>() - w).abs() / w)
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        assert!(errs[0] < 1e-4 && errs[1] < errs[0] / 8.0, "{errs:?}");
    }

    #[test]
    fn trivial_dilation_has_zero_residual() {
        let r = homogeneity_residual(1.0, 1.0, 1.0, gauss, 12.0, &[-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn dilation_residuals_are_at_quadrature_level() {
        let xi: Vec<f64> = (-8..=8).map(|k| 0.5 * k as f64).collect();
        let u = |z: f64| gauss(z) * (1.0 + 0.5 * (2.0 * z).cos());
        let r = homogeneity_residual(PI / 3.0, 1.0, 2.0, u, 12.0, &xi).unwrap();
        assert!(r < 1e-8, "{r}");
        let r = homogeneity_residual(0.75 * PI, 2.0, 0.5, u, 12.0, &xi).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn majorant_is_finite_and_grows_towards_minus_one() {
        let vals: Vec<f64> = [-0.25, -0.5, -0.75, -0.9].iter().map(|s| schur_majorant(*s).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
        assert!(vals.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn row_integrals_stay_below_the_majorant() {
        for s in [-0.25, -0.75] {
            let m = schur_majorant(s).unwrap();
            for phi in [1e-3, 0.3, 1.5] {
                for xi in [0.0, 0.7, -30.0, 1e3] {
                    let r = schur_row(phi, s, xi).unwrap();
                    assert!(r > 0.0 && r <= m * (1.0 + 1e-9), "{s} {phi} {xi}: {r} > {m}");
                }
            }
        }
    }

    #[test]
    fn row_integral_at_origin_is_closed_form_for_s_minus_half() {
        // ξ = 0: ∫ dt/(1+t²) ⟨|sin φ| t⟩^{1/2}; at φ = π/2 this is ∫ (1+t²)^{-3/4} dt = √π Γ(1/4)/Γ(3/4)
        let want = PI.sqrt() * 3.625_609_908_221_908 / 1.225_416_702_465_178;
        let got = schur_row(FRAC_PI_2, -0.5, 0.0).unwrap();
        assert!((got - want).abs() < 1e-7 * want, "{got} {want}");
    }

    #[test]
    fn single_angle_scan_is_empty() {
        let g = LineGrid::graded(8, 10.0).unwrap();
        assert!(continuity_scan(1.0, -0.5, &[1.0], &g).unwrap().is_empty());
        assert!(continuity_scan(1.0, -0.5, &[], &g).unwrap().is_empty());
    }

    #[test]
    fn zero_weights_give_zero_fiber() {
        let g = LineGrid::graded(8, 10.0).unwrap();
        let b = fiber_trace(3, 8, -0.5, &g, 0.0).unwrap();
        assert!(b.matrix.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn fiber_frequencies_beyond_nyquist_are_rejected() {
        let g = LineGrid::graded(8, 10.0).unwrap();
        assert!(matches!(fiber_trace(4, 8, -0.5, &g, 1.0), Err(Error::Argument(_))));
        assert!(matches!(fiber_trace(-4, 8, -0.5, &g, 1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn opposite_fibers_are_conjugate() {
        let g = LineGrid::graded(16, 50.0).unwrap();
        let b = fiber_trace(2, 12, -0.5, &g, 1.0).unwrap();
        let c = fiber_trace(-2, 12, -0.5, &g, 1.0).unwrap();
        let diff = (&b.matrix - c.matrix.map(|z| z.conj())).norm();
        assert!(diff < 1e-12 * b.matrix.norm(), "{diff}");
    }
}
