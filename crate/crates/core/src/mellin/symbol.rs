//! Mellin transform `K̂(p) = ∫₀^∞ ρ^{p-1} K(ρ) dρ` of the kernel family,
//! entrywise on the staggered circle grid, with holomorphy and decay checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cov::TiltConfig;
use super::kernel::{kernel_cos, large_rho_coefficient, small_rho_coefficient, StaggeredCircle};
use crate::error::{Error, Result};
use crate::numerics::spectral_norm;
use crate::quadrature::{adaptive_partition, kronrod_rule, AdaptiveOptions, GaussLegendre, Vector};

/// The transform converges for `-2 < Re p < 1`.
pub const STRIP: (f64, f64) = (-2.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MellinOptions {
    pub m: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Distance kept from the strip edges.
    pub strip_margin: f64,
    /// Tail share of the symbol above which it is flagged.
    pub tail_tolerance: f64,
    /// Widest panel in `log ρ`; bounds the phase change of `ρ^{i Im p}`.
    pub max_panel: f64,
}

impl Default for MellinOptions {
    fn default() -> Self {
        MellinOptions { m: 64, rho_min: 1e-6, rho_max: 1e6, strip_margin: 1e-2, tail_tolerance: 1e-3, max_panel: 0.25 }
    }
}

#[derive(Debug, Clone)]
pub struct MellinSymbol {
    pub p: Complex64,
    /// `h K̂(p, ω_i, ψ_j)`, so that the matrix acts like the integral operator.
    pub matrix: DMatrix<Complex64>,
    pub grid: StaggeredCircle,
    /// Frobenius share of the analytic tails beyond `[ρ_min, ρ_max]`.
    pub tail_drift: f64,
    pub flagged: bool,
}

impl MellinSymbol {
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }
}

/// Quadrature in `x = log ρ` prepared once per `(cos ω, cos ψ)` pair and
/// reused for every `p`.
#[derive(Debug, Clone)]
pub struct SymbolQuadrature {
    pub cfg: TiltConfig,
    pub opts: MellinOptions,
    grid: StaggeredCircle,
    /// Per pair: nodes `x_k` and weights `w_k K(e^{x_k})`.
    rules: Vec<Vec<(f64, f64)>>,
    small: Vec<f64>,
    large: Vec<f64>,
}

impl SymbolQuadrature {
    pub fn new(cfg: &TiltConfig, opts: MellinOptions) -> Result<Self> {
        let grid = StaggeredCircle::new(opts.m)?;
        if !(opts.rho_min > 0.0 && opts.rho_min < 1.0 && opts.rho_max > 1.0 && opts.rho_max.is_finite()) {
            return Err(Error::Argument(format!(
                "ρ range [{}, {}] must straddle 1 inside (0, ∞)",
                opts.rho_min, opts.rho_max
            )));
        }
        if !(opts.max_panel > 0.0) {
            return Err(Error::Argument("panel width must be positive".into()));
        }
        let (sa, ca) = cfg.sc();
        let (xa, xb) = (opts.rho_min.ln(), opts.rho_max.ln());
        let panels = ((xb - xa) / opts.max_panel).ceil() as usize;
        let base: Vec<f64> = (1..panels).map(|k| xa + (xb - xa) * k as f64 / panels as f64).collect();
        let (lo, hi) = (STRIP.0 + opts.strip_margin, STRIP.1 - opts.strip_margin);
        let aopts = AdaptiveOptions { abs_tol: 1e-15, rel_tol: 1e-11, max_intervals: 20_000 };

        let (cw, cp) = pair_cosines(grid);
        let mut rules = Vec::with_capacity(cw.len() * cp.len());
        for &a in &cw {
            for &b in &cp {
                let k = |x: f64| kernel_cos(sa, ca, x.exp(), a, b);
                let mut breaks = base.clone();
                breaks.push(0.0);
                if a / b > 0.0 {
                    breaks.push((a / b).ln());
                }
                let parts = adaptive_partition(
                    |x: f64| {
                        let v = k(x);
                        Vector([v * (lo * x).exp(), v * (hi * x).exp()])
                    },
                    xa,
                    xb,
                    &breaks,
                    aopts,
                )?;
                let rule = parts
                    .iter()
                    .flat_map(|&(l, r)| kronrod_rule(l, r))
                    .map(|(x, w)| (x, w * k(x)))
                    .filter(|(_, wk)| *wk != 0.0)
                    .collect();
                rules.push(rule);
            }
        }
        let small = cw.iter().map(|&a| small_rho_coefficient(sa, ca, a)).collect();
        let large = cp.iter().map(|&b| large_rho_coefficient(sa, ca, b)).collect();
        Ok(SymbolQuadrature { cfg: *cfg, opts, grid, rules, small, large })
    }

    pub fn grid(&self) -> StaggeredCircle {
        self.grid
    }

    pub fn check_strip(&self, p: Complex64) -> Result<()> {
        let (lo, hi) = (STRIP.0 + self.opts.strip_margin, STRIP.1 - self.opts.strip_margin);
        if !(p.re >= lo && p.re <= hi) || !p.im.is_finite() {
            return Err(Error::Domain(format!("Re p = {} is outside [{lo}, {hi}]", p.re)));
        }
        Ok(())
    }

    /// `K̂(p)` on the distinct `(cos ω_i, cos ψ_j)` pairs, split into the
    /// truncated integral and the two tails.
    fn pairs(&self, p: Complex64) -> Vec<(Complex64, Complex64)> {
        let nb = self.large.len();
        let (rmin, rmax) = (Complex64::from(self.opts.rho_min), Complex64::from(self.opts.rho_max));
        let small_tail = rmin.powc(p + 2.0) / (p + 2.0);
        let large_tail = rmax.powc(p - 1.0) / (1.0 - p);
        self.rules
            .iter()
            .enumerate()
            .map(|(idx, rule)| {
                let body = rule.iter().fold(Complex64::new(0.0, 0.0), |acc, &(x, wk)| acc + (p * x).exp() * wk);
                let tail = self.small[idx / nb] * small_tail + self.large[idx % nb] * large_tail;
                (body, tail)
            })
            .collect()
    }

    pub fn evaluate(&self, p: Complex64) -> Result<MellinSymbol> {
        self.check_strip(p)?;
        let m = self.grid.m;
        let h = self.grid.step();
        let nb = self.large.len();
        let vals = self.pairs(p);
        let mut tails = 0.0;
        let mut total = 0.0;
        let matrix = DMatrix::from_fn(m, m, |i, j| {
            let (body, tail) = vals[fold_output(i, m) * nb + fold_input(j, m)];
            tails += tail.norm_sqr();
            total += (body + tail).norm_sqr();
            (body + tail) * h
        });
        let tail_drift = if total > 0.0 { (tails / total).sqrt() } else { 0.0 };
        if !tail_drift.is_finite() || matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("symbol at p = {p} is not finite")));
        }
        Ok(MellinSymbol { p, matrix, grid: self.grid, tail_drift, flagged: tail_drift > self.opts.tail_tolerance })
    }

    /// Same as [`evaluate`](Self::evaluate) without the tails: the integral
    /// over `[ρ_min, ρ_max]` only.
    pub fn truncated(&self, p: Complex64) -> Result<DMatrix<Complex64>> {
        self.check_strip(p)?;
        let m = self.grid.m;
        let h = self.grid.step();
        let nb = self.large.len();
        let vals = self.pairs(p);
        Ok(DMatrix::from_fn(m, m, |i, j| vals[fold_output(i, m) * nb + fold_input(j, m)].0 * h))
    }
}

/// `cos ω_i` for `i ≤ m/2` and `cos ψ_j` for `j < m/2`; every other node
/// repeats one of these.
fn pair_cosines(grid: StaggeredCircle) -> (Vec<f64>, Vec<f64>) {
    let h = grid.step();
    let cw = (0..=grid.m / 2).map(|i| (i as f64 * h).cos()).collect();
    let cp = (0..grid.m / 2).map(|j| ((j as f64 + 0.5) * h).cos()).collect();
    (cw, cp)
}

fn fold_output(i: usize, m: usize) -> usize {
    i.min(m - i)
}

fn fold_input(j: usize, m: usize) -> usize {
    j.min(m - 1 - j)
}

/// `∫ ρ^{p-1} f(ρ) dρ` over `[ρ_min, ρ_max]`, adaptively in `log ρ`.
pub fn mellin_transform<F: Fn(f64) -> f64>(
    f: F,
    p: Complex64,
    rho_min: f64,
    rho_max: f64,
    breakpoints: &[f64],
) -> Result<Complex64> {
    if !(rho_min > 0.0 && rho_min < rho_max && rho_max.is_finite()) {
        return Err(Error::Argument(format!("bad ρ range [{rho_min}, {rho_max}]")));
    }
    let logs: Vec<f64> = breakpoints.iter().filter(|b| **b > 0.0).map(|b| b.ln()).collect();
    let opts = AdaptiveOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 20_000 };
    Ok(crate::quadrature::integrate_adaptive(
        |x: f64| (p * x).exp() * f(x.exp()),
        rho_min.ln(),
        rho_max.ln(),
        &logs,
        opts,
    )?
    .value)
}

pub fn mellin_symbol(cfg: &TiltConfig, p: Complex64, opts: MellinOptions) -> Result<MellinSymbol> {
    SymbolQuadrature::new(cfg, opts)?.evaluate(p)
}

/// `[Re p] × [Im p]` rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub norm: f64,
    /// `‖K̂(σ + it)‖ / ‖K̂(σ)‖`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticityReport {
    pub rectangle: Rectangle,
    pub contour_nodes: usize,
    /// Largest `|∮ K̂_ij(p) dp|` over the entries.
    pub residual: f64,
    /// Largest `|K̂_ij(p)|` seen on the contour.
    pub max_entry: f64,
    pub relative_residual: f64,
    pub sigma: f64,
    pub decay: Vec<DecayRow>,
}

/// Contour integral of every entry around `rect` (Gauss–Legendre with
/// `nodes / 4` points per side) and the norm along `σ + i t`.
pub fn analyticity_and_decay(
    quad: &SymbolQuadrature,
    rect: Rectangle,
    nodes: usize,
    sigma: f64,
    ts: &[f64],
) -> Result<AnalyticityReport> {
    if nodes < 4 || !nodes.is_multiple_of(4) {
        return Err(Error::Argument(format!("contour node count {nodes} must be a positive multiple of 4")));
    }
    if !(rect.re.0 <= rect.re.1 && rect.im.0 <= rect.im.1) {
        return Err(Error::Argument("rectangle corners are out of order".into()));
    }
    let (lo, hi) = (STRIP.0 + quad.opts.strip_margin, STRIP.1 - quad.opts.strip_margin);
    if !(rect.re.0 > lo && rect.re.1 < hi) {
        return Err(Error::Domain(format!("rectangle [{}, {}] touches the strip edge", rect.re.0, rect.re.1)));
    }
    let m = quad.grid.m;
    let gl = GaussLegendre::new(nodes / 4);
    let mut max_entry: f64 = 0.0;
    // each side integrated in its own increasing parameter; orientation is in the signs
    let mut side = |a: Complex64, b: Complex64| -> Result<DMatrix<Complex64>> {
        let mut acc = DMatrix::zeros(m, m);
        if a == b {
            return Ok(acc);
        }
        for (tau, w) in gl.on_interval(0.0, 1.0) {
            let sym = quad.evaluate(a + (b - a) * tau)?;
            max_entry = sym.matrix.iter().fold(max_entry, |mx, z| mx.max(z.norm()));
            acc += sym.matrix * ((b - a) * w);
        }
        Ok(acc)
    };
    let c = |x: f64, y: f64| Complex64::new(x, y);
    let (x0, x1, y0, y1) = (rect.re.0, rect.re.1, rect.im.0, rect.im.1);
    let bottom = side(c(x0, y0), c(x1, y0))?;
    let right = side(c(x1, y0), c(x1, y1))?;
    let top = side(c(x0, y1), c(x1, y1))?;
    let left = side(c(x0, y0), c(x0, y1))?;
    let loop_sum = bottom + right - top - left;
    let residual = loop_sum.iter().fold(0.0f64, |mx, z| mx.max(z.norm()));
    let relative_residual = if max_entry > 0.0 { residual / max_entry } else { 0.0 };

    let mut decay = Vec::with_capacity(ts.len());
    let base = quad.evaluate(c(sigma, 0.0))?.norm();
    for &t in ts {
        let norm = quad.evaluate(c(sigma, t))?.norm();
        decay.push(DecayRow { t, norm, ratio: if base > 0.0 { norm / base } else { 0.0 } });
    }
    Ok(AnalyticityReport {
        rectangle: rect,
        contour_nodes: nodes,
        residual,
        max_entry,
        relative_residual,
        sigma,
        decay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_adaptive;
    use std::f64::consts::FRAC_PI_4;

    fn cfg() -> TiltConfig {
        TiltConfig::new(FRAC_PI_4, -0.5).unwrap()
    }

    fn small() -> MellinOptions {
        MellinOptions { m: 8, ..MellinOptions::default() }
    }

    /// `∫₀^∞ ρ^{p-1} K dρ` split at 1 and mapped to finite intervals.
    fn oracle_entry(p: f64, omega: f64, psi: f64) -> f64 {
        let c = cfg();
        let k = |rho: f64| super::super::kernel::kernel_k(&c, rho, omega, psi).unwrap();
        let opts = AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 20_000 };
        let star = omega.cos() / psi.cos();
        let brk: Vec<f64> = if star > 0.0 && star < 1.0 { vec![star] } else { vec![] };
        let inner =
            integrate_adaptive(|r: f64| if r > 0.0 { r.powf(p - 1.0) * k(r) } else { 0.0 }, 0.0, 1.0, &brk, opts)
                .unwrap()
                .value;
        // ρ = 1/u on (1, ∞)
        let brk: Vec<f64> = if star > 1.0 { vec![1.0 / star] } else { vec![] };
        let outer = integrate_adaptive(
            |u: f64| if u > 0.0 { u.powf(-p - 1.0) * k(1.0 / u) } else { 0.0 },
            0.0,
            1.0,
            &brk,
            opts,
        )
        .unwrap()
        .value;
        inner + outer
    }

    #[test]
    fn entries_match_direct_quadrature() {
        let q = SymbolQuadrature::new(&cfg(), small()).unwrap();
        let g = q.grid();
        let (w, s) = (g.outputs(), g.inputs());
        for p in [-1.5, -0.5, 0.25] {
            let sym = q.evaluate(Complex64::new(p, 0.0)).unwrap();
            for (i, j) in [(0, 0), (1, 3), (2, 5), (5, 6), (4, 1)] {
                let want = oracle_entry(p, w[i], s[j]) * g.step();
                let got = sym.matrix[(i, j)];
                assert!((got.re - want).abs() < 1e-8 * want.abs().max(1e-3) && got.im.abs() < 1e-14, "{p} {i} {j}");
            }
        }
    }

    #[test]
    fn transform_is_linear() {
        let c = cfg();
        let k = |r: f64| super::super::kernel::kernel_k(&c, r, 0.3, 1.1).unwrap();
        let p = Complex64::new(-0.7, 3.0);
        let a = mellin_transform(k, p, 1e-3, 1e3, &[1.0]).unwrap();
        let b = mellin_transform(|r| -2.5 * k(r), p, 1e-3, 1e3, &[1.0]).unwrap();
        assert!((b + 2.5 * a).norm() < 1e-12 * a.norm());
        // ρ^{q} on [1, e] has transform (e^{p+q} - 1)/(p+q)
        let z = p + 0.5;
        let exact = ((z).exp() - 1.0) / z;
        let got = mellin_transform(|r| r.powf(0.5), p, 1.0, std::f64::consts::E, &[]).unwrap();
        assert!((got - exact).norm() < 1e-13);
    }

    #[test]
    fn strip_edges_are_rejected() {
        let q = SymbolQuadrature::new(&cfg(), small()).unwrap();
        for re in [-2.0, -1.995, 1.0, 0.995, 3.0] {
            assert!(matches!(q.evaluate(Complex64::new(re, 0.0)), Err(Error::Domain(_))), "{re}");
        }
    }

    #[test]
    fn tail_flag_near_the_right_edge() {
        let q = SymbolQuadrature::new(&cfg(), small()).unwrap();
        let inner = q.evaluate(Complex64::new(-0.5, 0.0)).unwrap();
        assert!(!inner.flagged && inner.tail_drift < 1e-6);
        let edge = q.evaluate(Complex64::new(0.99, 0.0)).unwrap();
        assert!(edge.flagged, "{}", edge.tail_drift);
        // the truncated integral keeps growing with ρ_max
        let wide = SymbolQuadrature::new(&cfg(), MellinOptions { rho_max: 1e8, ..small() }).unwrap();
        let p = Complex64::new(0.99, 0.0);
        let (a, b) = (q.truncated(p).unwrap(), wide.truncated(p).unwrap());
        assert!((b[(0, 0)] - a[(0, 0)]).norm() > 0.05 * a[(0, 0)].norm());
        let p = Complex64::new(-0.5, 0.0);
        let (a, b) = (q.truncated(p).unwrap(), wide.truncated(p).unwrap());
        assert!((b[(0, 0)] - a[(0, 0)]).norm() < 1e-8 * a[(0, 0)].norm());
    }

    #[test]
    fn conjugate_symmetry() {
        let q = SymbolQuadrature::new(&cfg(), small()).unwrap();
        let p = Complex64::new(-0.3, 2.5);
        let (a, b) = (q.evaluate(p).unwrap(), q.evaluate(p.conj()).unwrap());
        assert!((a.matrix.map(|z| z.conj()) - b.matrix).norm() < 1e-14 * a.matrix.norm());
    }

    #[test]
    fn degenerate_rectangle_has_zero_residual() {
        let q = SymbolQuadrature::new(&cfg(), small()).unwrap();
        let r = Rectangle { re: (-0.5, -0.5), im: (-1.0, 1.0) };
        let rep = analyticity_and_decay(&q, r, 16, -0.5, &[]).unwrap();
        assert_eq!(rep.residual, 0.0);
        let r = Rectangle { re: (-1.0, 0.0), im: (0.5, 0.5) };
        assert_eq!(analyticity_and_decay(&q, r, 16, -0.5, &[]).unwrap().residual, 0.0);
    }

    #[test]
    fn rectangle_must_avoid_the_edges() {
        let q = SymbolQuadrature::new(&cfg(), small()).unwrap();
        let r = Rectangle { re: (-2.5, 0.0), im: (-1.0, 1.0) };
        assert!(matches!(analyticity_and_decay(&q, r, 16, -0.5, &[]), Err(Error::Domain(_))));
    }

    #[test]
    fn small_grid_contour_closes() {
        let q = SymbolQuadrature::new(&cfg(), small()).unwrap();
        let r = Rectangle { re: (-1.5, 0.5), im: (-1.0, 1.0) };
        let rep = analyticity_and_decay(&q, r, 64, -0.5, &[0.0, 40.0]).unwrap();
        assert!(rep.relative_residual < 1e-6, "{rep:?}");
        assert_eq!(rep.decay[0].ratio, 1.0);
    }

    #[test]
    fn symbol_norm_on_the_critical_line_is_frozen() {
        // value checked entrywise against `oracle_entry` when first computed
        let sym = mellin_symbol(&cfg(), Complex64::new(-0.5, 0.0), MellinOptions::default()).unwrap();
        assert!((sym.norm() - 18.00623752072007).abs() < 1e-9, "{}", sym.norm());
        assert!(!sym.flagged);
    }
}
