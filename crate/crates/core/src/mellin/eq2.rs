//! The trace as a Mellin convolution `g(r) = ∫ K(ρ/r) f(ρ) dρ/ρ` on a polar
//! grid of the dual plane: log-uniform in the radius, uniform in the angle.
//!
//! The radial integral is taken exactly against the piecewise cubic
//! interpolant of the samples, which turns the operator into a discrete
//! correlation in the log-radial index. The angular sum is the trapezoid
//! rule on half-offset nodes plus a correction for the logarithmic
//! singularity of the radially integrated kernel at `ψ = ±ω`.

use std::f64::consts::{LN_2, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::cov::TiltConfig;
use super::kernel::kernel_cos;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, Vector};

/// Samples `f(ρ_b, ψ_j)`, `ρ_b = e^{bΔ}`, `ψ_j = (j + ½) 2π/m`; zero outside
/// the sampled rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSamples {
    pub delta: f64,
    pub first: i64,
    pub m: usize,
    /// One row per radius.
    pub values: DMatrix<f64>,
}

impl PolarSamples {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(delta: f64, first: i64, rows: usize, m: usize, f: F) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Argument(format!("log-radial step {delta} must be positive")));
        }
        if m < 4 || !m.is_multiple_of(2) || rows == 0 {
            return Err(Error::Argument(format!("polar grid {rows} × {m} needs rows ≥ 1 and an even m ≥ 4")));
        }
        let h = TAU / m as f64;
        let values =
            DMatrix::from_fn(rows, m, |b, j| f((delta * (first + b as i64) as f64).exp(), (j as f64 + 0.5) * h));
        Ok(PolarSamples { delta, first, m, values })
    }

    pub fn last(&self) -> i64 {
        self.first + self.values.nrows() as i64 - 1
    }

    pub fn radius(&self, b: i64) -> f64 {
        (self.delta * b as f64).exp()
    }

    fn row(&self, b: i64) -> Option<Vec<f64>> {
        (b >= self.first && b <= self.last())
            .then(|| self.values.row((b - self.first) as usize).iter().copied().collect())
    }

    /// Fails unless the first and last rows vanish, i.e. the support sits
    /// strictly inside the sampled annulus.
    pub fn check_support(&self) -> Result<()> {
        let scale = self.values.amax().max(f64::MIN_POSITIVE);
        let n = self.values.nrows();
        for edge in [0, n - 1] {
            let top = self.values.row(edge).amax();
            if top > 1e-12 * scale {
                return Err(Error::Precondition(format!(
                    "samples reach the edge of the annulus at ρ = {:e} (|f| = {top:e})",
                    self.radius(self.first + edge as i64)
                )));
            }
        }
        Ok(())
    }
}

/// Values `g(r_a, ω_i)`, `r_a = e^{aΔ}`, `ω_i = 2π i / m_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarOutput {
    pub indices: Vec<i64>,
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    pub values: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Eq2Path {
    /// Correlation summed in the log-radial index.
    Direct,
    /// The same correlation through the discrete Fourier transform in the
    /// log-radial index, i.e. multiplication by a discrete Mellin symbol.
    Mellin,
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

/// Coefficient of `log|2 sin((ψ ∓ ω)/2)|` in the radially integrated kernel.
pub fn log_coefficient(cfg: &TiltConfig, omega: f64) -> f64 {
    let (sa, ca) = cfg.sc();
    let cw = omega.cos();
    -2.0 * sa * cw.abs() / (sa * sa * cw * cw + ca * ca)
}

/// Trigonometric interpolant of samples at `(j + ½) 2π/m` (m even), at `theta`.
pub fn trig_interpolate(samples: &[f64], theta: f64) -> f64 {
    let m = samples.len();
    let h = TAU / m as f64;
    samples
        .iter()
        .enumerate()
        .map(|(j, fj)| {
            let x = theta - (j as f64 + 0.5) * h;
            let half = 0.5 * x;
            if half.sin().abs() < 1e-14 {
                // x is a multiple of 2π
                fj * (0.5 * m as f64 * x).cos() / half.cos()
            } else {
                fj * (0.5 * m as f64 * x).sin() / half.tan() / m as f64
            }
        })
        .sum()
}

/// Correlation weights `W_ij[ℓ] = ∫ K(e^y, ω_i, ψ_j) L(y/Δ - ℓ) dy` for one
/// grid layout, `L` the cubic Lagrange cardinal function.
#[derive(Debug, Clone)]
pub struct Eq2Operator {
    pub cfg: TiltConfig,
    pub delta: f64,
    pub m: usize,
    pub m_out: usize,
    pub ell: (i64, i64),
    /// Folded `(cos ω_i, cos ψ_j)` pairs, `ℓ` running over `ell`.
    weights: Vec<Vec<f64>>,
}

impl Eq2Operator {
    pub fn new(cfg: &TiltConfig, delta: f64, m: usize, m_out: usize, ell: (i64, i64)) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Argument(format!("log-radial step {delta} must be positive")));
        }
        if m < 4 || !m.is_multiple_of(2) || m_out == 0 || !m.is_multiple_of(m_out) {
            return Err(Error::Argument(format!("angular grids m = {m}, m_out = {m_out} must nest, m even")));
        }
        if ell.0 > ell.1 {
            return Err(Error::Argument("empty log-radial offset range".into()));
        }
        let (sa, ca) = cfg.sc();
        let cw: Vec<f64> = (0..=m_out / 2).map(|i| (TAU * i as f64 / m_out as f64).cos()).collect();
        let cp: Vec<f64> = (0..m / 2).map(|j| ((j as f64 + 0.5) * TAU / m as f64).cos()).collect();
        let opts = AdaptiveOptions { abs_tol: 1e-15, rel_tol: 1e-11, max_intervals: 4000 };
        let len = (ell.1 - ell.0 + 1) as usize;
        let mut weights = Vec::with_capacity(cw.len() * cp.len());
        for &a in &cw {
            for &b in &cp {
                let mut w = vec![0.0; len];
                let mut breaks = vec![0.0];
                if a / b > 0.0 {
                    breaks.push((a / b).ln());
                }
                for k in (ell.0 - 2)..=(ell.1 + 1) {
                    let (y0, y1) = (k as f64 * delta, (k + 1) as f64 * delta);
                    let cell = integrate_adaptive(
                        |y: f64| {
                            let kv = kernel_cos(sa, ca, y.exp(), a, b);
                            let l = cubic_basis((y - y0) / delta);
                            Vector([kv * l[0], kv * l[1], kv * l[2], kv * l[3]])
                        },
                        y0,
                        y1,
                        &breaks,
                        opts,
                    )?;
                    for (q, v) in cell.value.0.iter().enumerate() {
                        let node = k - 1 + q as i64;
                        if node >= ell.0 && node <= ell.1 {
                            w[(node - ell.0) as usize] += v;
                        }
                    }
                }
                weights.push(w);
            }
        }
        Ok(Eq2Operator { cfg: *cfg, delta, m, m_out, ell, weights })
    }

    /// Offsets needed to map `f` to the output radii `outputs`.
    pub fn offsets_for(f: &PolarSamples, outputs: &[i64]) -> Result<(i64, i64)> {
        let (lo, hi) = outputs.iter().fold((i64::MAX, i64::MIN), |(lo, hi), &a| (lo.min(a), hi.max(a)));
        if outputs.is_empty() {
            return Err(Error::Argument("no output radii".into()));
        }
        Ok((f.first - hi, f.last() - lo))
    }

    fn pair(&self, i: usize, j: usize) -> &[f64] {
        let io = i.min(self.m_out - i);
        let jo = j.min(self.m - 1 - j);
        &self.weights[io * (self.m / 2) + jo]
    }

    pub fn apply(&self, f: &PolarSamples, outputs: &[i64], path: Eq2Path) -> Result<PolarOutput> {
        if f.m != self.m || (f.delta - self.delta).abs() > 1e-15 * self.delta {
            return Err(Error::GridMismatch("samples and operator use different polar grids".into()));
        }
        f.check_support()?;
        let need = Self::offsets_for(f, outputs)?;
        if need.0 < self.ell.0 || need.1 > self.ell.1 {
            return Err(Error::Argument(format!("offsets {need:?} exceed the prepared range {:?}", self.ell)));
        }
        let mut values = match path {
            Eq2Path::Direct => self.correlate_direct(f, outputs),
            Eq2Path::Mellin => self.correlate_fourier(f, outputs),
        };
        let h = TAU / self.m as f64;
        let angles: Vec<f64> = (0..self.m_out).map(|i| TAU * i as f64 / self.m_out as f64).collect();
        for (r, &a) in outputs.iter().enumerate() {
            let Some(row) = f.row(a) else { continue };
            for (i, &w) in angles.iter().enumerate() {
                let c = log_coefficient(&self.cfg, w);
                let near = trig_interpolate(&row, w) + trig_interpolate(&row, -w);
                values[(r, i)] -= h * LN_2 * c * near;
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("eq2 output is not finite".into()));
        }
        Ok(PolarOutput {
            indices: outputs.to_vec(),
            radii: outputs.iter().map(|&a| f.radius(a)).collect(),
            angles,
            values,
        })
    }

    fn correlate_direct(&self, f: &PolarSamples, outputs: &[i64]) -> DMatrix<f64> {
        let h = TAU / self.m as f64;
        DMatrix::from_fn(outputs.len(), self.m_out, |r, i| {
            let a = outputs[r];
            let mut acc = 0.0;
            for j in 0..self.m {
                let w = self.pair(i, j);
                for b in f.first..=f.last() {
                    acc += w[(b - a - self.ell.0) as usize] * f.values[((b - f.first) as usize, j)];
                }
            }
            h * acc
        })
    }

    fn correlate_fourier(&self, f: &PolarSamples, outputs: &[i64]) -> DMatrix<f64> {
        let h = TAU / self.m as f64;
        let nw = (self.ell.1 - self.ell.0 + 1) as usize;
        let rows = f.values.nrows();
        let n = (nw + rows - 1).next_power_of_two();
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let spectra_f: Vec<Vec<Complex64>> = (0..self.m)
            .map(|j| {
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for (b, slot) in buf.iter_mut().take(rows).enumerate() {
                    *slot = Complex64::from(f.values[(b, j)]);
                }
                fwd.process(&mut buf);
                buf
            })
            .collect();
        let mut spectra_w = std::collections::HashMap::new();
        let mut out = DMatrix::zeros(outputs.len(), self.m_out);
        for i in 0..self.m_out {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for (j, sf) in spectra_f.iter().enumerate() {
                let key = (i.min(self.m_out - i), j.min(self.m - 1 - j));
                let sw = spectra_w.entry(key).or_insert_with(|| {
                    // reversed weights turn the correlation into a convolution
                    let mut buf = vec![Complex64::new(0.0, 0.0); n];
                    for (k, v) in self.pair(i, j).iter().rev().enumerate() {
                        buf[k] = Complex64::from(*v);
                    }
                    fwd.process(&mut buf);
                    buf
                });
                for (a, (x, y)) in acc.iter_mut().zip(sw.iter().zip(sf)) {
                    *a += x * y;
                }
            }
            inv.process(&mut acc);
            for (r, &a) in outputs.iter().enumerate() {
                let k = a + self.ell.1 - f.first;
                if k >= 0 && (k as usize) < n {
                    out[(r, i)] = h * acc[k as usize].re / n as f64;
                }
            }
        }
        out
    }
}

/// Builds the weights for `f` and `outputs` and applies them along `path`.
pub fn trace_via_mellin_eq2(
    cfg: &TiltConfig,
    f: &PolarSamples,
    m_out: usize,
    outputs: &[i64],
    path: Eq2Path,
) -> Result<PolarOutput> {
    f.check_support()?;
    let ell = Eq2Operator::offsets_for(f, outputs)?;
    Eq2Operator::new(cfg, f.delta, f.m, m_out, ell)?.apply(f, outputs, path)
}
