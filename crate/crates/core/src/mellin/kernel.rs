//! The family `K(ρ)` of integral operators on the circle, its Nyström
//! matrices, `L²` norms and Schur integrals.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cov::TiltConfig;
use crate::error::{Error, Result};
use crate::numerics::spectral_norm;
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, Vector};

/// `K(ρ, ω, ψ)` in terms of `cos ω` and `cos ψ`; no domain checks.
#[inline]
pub(crate) fn kernel_cos(sa: f64, ca: f64, rho: f64, cw: f64, cp: f64) -> f64 {
    let x = rho * cp - cw;
    let a = sa * sa * x * x + ca * ca * (rho * rho - 1.0);
    let den = 4.0 * ca * ca * sa * sa * x * x + a * a;
    if den == 0.0 {
        return 0.0;
    }
    4.0 * sa * ca * ca * rho * rho * x.abs() / den
}

pub fn kernel_k(cfg: &TiltConfig, rho: f64, omega: f64, psi: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("ρ = {rho} must be positive")));
    }
    let (cw, cp) = (omega.cos(), psi.cos());
    if rho == 1.0 && (cw - cp).abs() <= 4.0 * f64::EPSILON {
        return Err(Error::Singularity("K is singular at ρ = 1, ψ = ±ω".into()));
    }
    let (sa, ca) = cfg.sc();
    Ok(kernel_cos(sa, ca, rho, cw, cp))
}

/// `K(ρ) ~ ρ² k₀(ω)` as `ρ → 0`.
pub(crate) fn small_rho_coefficient(sa: f64, ca: f64, cw: f64) -> f64 {
    let q = sa * sa * cw * cw + ca * ca;
    4.0 * sa * ca * ca * cw.abs() / (q * q)
}

/// `K(ρ) ~ ρ⁻¹ k_∞(ψ)` as `ρ → ∞`.
pub(crate) fn large_rho_coefficient(sa: f64, ca: f64, cp: f64) -> f64 {
    small_rho_coefficient(sa, ca, cp)
}

/// Angles where `ρ cos ψ - cos ω` is zero or sits at the kernel's peak.
pub(crate) fn ridge_angles(sa: f64, ca: f64, rho: f64, cw: f64) -> Vec<f64> {
    let peak = ca * (rho * rho - 1.0).abs() / (2.0 * sa);
    let mut out = Vec::new();
    for x0 in [0.0, -peak, peak] {
        let c = (cw + x0) / rho;
        if c.abs() <= 1.0 {
            let a = c.acos();
            out.push(a);
            out.push(TAU - a);
        }
    }
    out
}

/// Uniform circle grids: outputs at `ω_i = i h`, inputs at `ψ_j = (j + ½) h`,
/// `h = 2π/m`. Neither set meets the other's reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaggeredCircle {
    pub m: usize,
}

impl StaggeredCircle {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 || !m.is_multiple_of(2) {
            return Err(Error::Argument(format!("circle grid needs an even m ≥ 4, got {m}")));
        }
        Ok(StaggeredCircle { m })
    }

    pub fn step(&self) -> f64 {
        TAU / self.m as f64
    }

    pub fn outputs(&self) -> Vec<f64> {
        (0..self.m).map(|i| i as f64 * self.step()).collect()
    }

    pub fn inputs(&self) -> Vec<f64> {
        (0..self.m).map(|j| (j as f64 + 0.5) * self.step()).collect()
    }
}

/// Nyström matrix `h K(ρ, ω_i, ψ_j)` on the staggered grid.
pub fn nystrom_matrix(cfg: &TiltConfig, rho: f64, grid: StaggeredCircle) -> Result<DMatrix<f64>> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("ρ = {rho} must be positive")));
    }
    let (sa, ca) = cfg.sc();
    let h = grid.step();
    let cw: Vec<f64> = grid.outputs().iter().map(|w| w.cos()).collect();
    let cp: Vec<f64> = grid.inputs().iter().map(|p| p.cos()).collect();
    Ok(DMatrix::from_fn(grid.m, grid.m, |i, j| h * kernel_cos(sa, ca, rho, cw[i], cp[j])))
}

/// Circle grid symmetric under `ψ ↦ -ψ` and `ψ ↦ π - ψ`, graded towards 0
/// and π on the scale `σ` through `ψ = σ sinh(A τ)` on each quarter.
pub fn graded_circle(m: usize, sigma: f64) -> Result<Vec<f64>> {
    if m < 8 || !m.is_multiple_of(4) {
        return Err(Error::Argument(format!("graded circle needs m divisible by 4 and ≥ 8, got {m}")));
    }
    let n = m / 4;
    let sigma = sigma.clamp(1e-12, 1.0);
    let a = (FRAC_PI_2 / sigma).asinh();
    let quarter: Vec<f64> = (0..=n).map(|k| sigma * (a * k as f64 / n as f64).sinh()).collect();
    let mut nodes = Vec::with_capacity(m);
    nodes.extend(quarter[..n].iter().copied());
    nodes.extend((0..n).map(|k| PI - quarter[n - k]));
    nodes.extend((0..n).map(|k| PI + quarter[k]));
    nodes.extend((0..n).map(|k| TAU - quarter[n - k]));
    Ok(nodes)
}

fn adaptive_opts() -> AdaptiveOptions {
    AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 4000 }
}

/// `∫ K(ρ, ω_i, ψ) ℓ_j(ψ) dψ` for piecewise-linear hats `ℓ_j` on the periodic
/// grid `nodes`, collocated at the same nodes.
pub fn product_matrix(cfg: &TiltConfig, rho: f64, nodes: &[f64]) -> Result<DMatrix<f64>> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("ρ = {rho} must be positive")));
    }
    let (sa, ca) = cfg.sc();
    let m = nodes.len();
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        let cw = nodes[i].cos();
        let ridges = ridge_angles(sa, ca, rho, cw);
        for j in 0..m {
            let lo = nodes[j];
            let hi = if j + 1 < m { nodes[j + 1] } else { nodes[0] + TAU };
            let len = hi - lo;
            let breaks: Vec<f64> = ridges.iter().flat_map(|&r| [r, r + TAU]).filter(|&r| r > lo && r < hi).collect();
            let v = integrate_adaptive(
                |p: f64| {
                    let k = kernel_cos(sa, ca, rho, cw, p.cos());
                    let t = (p - lo) / len;
                    Vector([k * (1.0 - t), k * t])
                },
                lo,
                hi,
                &breaks,
                adaptive_opts(),
            )?
            .value;
            a[(i, j)] += v.0[0];
            a[(i, (j + 1) % m)] += v.0[1];
        }
    }
    Ok(a)
}

/// Trapezoid weights of a periodic grid.
pub fn periodic_weights(nodes: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    (0..m)
        .map(|j| {
            let next = if j + 1 < m { nodes[j + 1] } else { nodes[0] + TAU };
            let prev = if j > 0 { nodes[j - 1] } else { nodes[m - 1] - TAU };
            0.5 * (next - prev)
        })
        .collect()
}

/// Angular grid scale used for `‖K(ρ)‖`: the kernel concentrates within
/// `|ρ - 1|^{1/2}` of 0 and π.
pub fn grading_scale(rho: f64) -> f64 {
    (rho - 1.0).abs().sqrt()
}

/// `‖K(ρ)‖` on `L²(S¹)` from the product-integrated matrix on an `m`-point
/// graded grid.
pub fn operator_norm_k(cfg: &TiltConfig, rho: f64, m: usize) -> Result<f64> {
    if rho == 1.0 {
        return Err(Error::Singularity("K(1) is not a bounded operator".into()));
    }
    let nodes = graded_circle(m, grading_scale(rho))?;
    let a = product_matrix(cfg, rho, &nodes)?;
    let mu = periodic_weights(&nodes);
    let b = DMatrix::from_fn(m, m, |i, j| mu[i].sqrt() * a[(i, j)] / mu[j].sqrt());
    Ok(spectral_norm(&b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurIntegrals {
    pub rho: f64,
    pub angle: f64,
    /// `∫ |K(ρ, ω, angle)| dω`.
    pub over_omega: f64,
    /// `∫ |K(ρ, angle, ψ)| dψ`.
    pub over_psi: f64,
}

pub fn schur_integrals(cfg: &TiltConfig, rho: f64, angle: f64) -> Result<SchurIntegrals> {
    if rho == 1.0 {
        return Err(Error::Singularity("Schur integrals diverge at ρ = 1".into()));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("ρ = {rho} must be positive")));
    }
    let (sa, ca) = cfg.sc();
    let ca_fixed = angle.cos();
    let a = angle.rem_euclid(TAU);
    let near = [a, TAU - a];
    // ∫ dψ with ω fixed: ridges solve ρ cos ψ = cos ω + x₀
    let mut breaks = ridge_angles(sa, ca, rho, ca_fixed);
    breaks.extend(near);
    breaks.extend([PI]);
    let over_psi =
        integrate_adaptive(|p: f64| kernel_cos(sa, ca, rho, ca_fixed, p.cos()), 0.0, TAU, &breaks, adaptive_opts())?
            .value;
    // ∫ dω with ψ fixed: ridges solve cos ω = ρ cos ψ - x₀
    let peak = ca * (rho * rho - 1.0).abs() / (2.0 * sa);
    let mut breaks: Vec<f64> = [0.0, -peak, peak]
        .iter()
        .filter_map(|x0| {
            let c = rho * ca_fixed - x0;
            (c.abs() <= 1.0).then(|| c.acos())
        })
        .flat_map(|t| [t, TAU - t])
        .collect();
    breaks.extend(near);
    breaks.extend([PI]);
    let over_omega =
        integrate_adaptive(|w: f64| kernel_cos(sa, ca, rho, w.cos(), ca_fixed), 0.0, TAU, &breaks, adaptive_opts())?
            .value;
    Ok(SchurIntegrals { rho, angle, over_omega, over_psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn cfg() -> TiltConfig {
        TiltConfig::new(FRAC_PI_4, -0.5).unwrap()
    }

    // first form: ρ² / ((1 + w²) sin α |ρ cos ψ - cos ω|), w from the inverse map at r = 1
    fn first_form(c: &TiltConfig, rho: f64, om: f64, ps: f64) -> f64 {
        let (phi, w) = crate::mellin::cov_inverse(c, om.cos(), om.sin(), rho, ps).unwrap();
        let _ = phi;
        rho * rho / ((1.0 + w * w) * c.alpha.sin() * (rho * ps.cos() - om.cos()).abs())
    }

    #[test]
    fn two_forms_agree() {
        let c = TiltConfig::new(0.6, -0.5).unwrap();
        for (rho, om, ps) in [(2.0, 0.0, FRAC_PI_2), (0.3, 1.0, 2.5), (1.7, 4.0, 0.2)] {
            let k = kernel_k(&c, rho, om, ps).unwrap();
            assert!((k - first_form(&c, rho, om, ps)).abs() < 1e-13 * k.max(1.0), "{rho} {om} {ps}");
        }
    }

    #[test]
    fn regression_point() {
        // ρ = 2, ω = 0, ψ = π/2, α = π/4: x = -1, 4 s c² ρ² / (4c²s² + (s² + 3c²)²) = 4√2 / 5
        let k = kernel_k(&cfg(), 2.0, 0.0, FRAC_PI_2).unwrap();
        assert!((k - 4.0 * 2f64.sqrt() / 5.0).abs() < 1e-15, "{k}");
    }

    #[test]
    fn singular_at_unit_radius_on_the_diagonal() {
        assert!(matches!(kernel_k(&cfg(), 1.0, 0.0, 0.0), Err(Error::Singularity(_))));
        assert!(matches!(kernel_k(&cfg(), 1.0, 0.7, -0.7), Err(Error::Singularity(_))));
        assert!(kernel_k(&cfg(), 1.0, 0.7, 0.8).is_ok());
        assert!(matches!(kernel_k(&cfg(), 0.0, 0.7, 0.8), Err(Error::Domain(_))));
    }

    #[test]
    fn vanishes_quadratically_at_zero() {
        let c = cfg();
        let (sa, ca) = c.sc();
        for om in [0.0, 1.0, 2.0] {
            let k = kernel_k(&c, 1e-4, om, 0.3).unwrap();
            assert!((k / 1e-8 - small_rho_coefficient(sa, ca, om.cos())).abs() < 1e-3, "{om}");
        }
        let k = kernel_k(&c, 1e5, 0.4, 0.3).unwrap();
        assert!((k * 1e5 - large_rho_coefficient(sa, ca, 0.3f64.cos())).abs() < 1e-4);
    }

    #[test]
    fn nystrom_entries_are_nonnegative_and_finite_at_unit_radius() {
        let a = nystrom_matrix(&cfg(), 1.0, StaggeredCircle::new(16).unwrap()).unwrap();
        assert!(a.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn graded_grid_is_symmetric() {
        let g = graded_circle(16, 0.05).unwrap();
        assert_eq!(g.len(), 16);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g[0], 0.0);
        assert!((g[4] - FRAC_PI_2).abs() < 1e-15 && (g[8] - PI).abs() < 1e-15);
        for k in 1..8 {
            assert!((g[k] + g[16 - k] - TAU).abs() < 1e-14);
        }
        let w = periodic_weights(&g);
        assert!((w.iter().sum::<f64>() - TAU).abs() < 1e-13);
    }

    #[test]
    fn product_matrix_integrates_constants() {
        // row sums are ∫ K(ρ, ω_i, ψ) dψ
        let c = cfg();
        let nodes = graded_circle(32, 0.3).unwrap();
        let a = product_matrix(&c, 0.5, &nodes).unwrap();
        for i in [0, 5, 17] {
            let s = schur_integrals(&c, 0.5, nodes[i]).unwrap();
            assert!((a.row(i).sum() - s.over_psi).abs() < 1e-9 * s.over_psi);
        }
    }

    #[test]
    fn norm_regimes_have_expected_order_of_magnitude() {
        let c = cfg();
        let small = operator_norm_k(&c, 1e-2, 32).unwrap();
        let smaller = operator_norm_k(&c, 5e-3, 32).unwrap();
        assert!((small / smaller - 4.0).abs() < 0.1, "{}", small / smaller);
        assert!(matches!(operator_norm_k(&c, 1.0, 32), Err(Error::Singularity(_))));
    }

    #[test]
    fn schur_integrals_are_reflection_symmetric() {
        let c = cfg();
        let a = schur_integrals(&c, 1.05, 0.4).unwrap();
        let b = schur_integrals(&c, 1.05, -0.4).unwrap();
        let d = schur_integrals(&c, 1.05, PI - 0.4).unwrap();
        for (x, y) in [
            (a.over_omega, b.over_omega),
            (a.over_psi, b.over_psi),
            (a.over_omega, d.over_omega),
            (a.over_psi, d.over_psi),
        ] {
            assert!((x - y).abs() < 1e-8 * x, "{x} {y}");
        }
    }
}
