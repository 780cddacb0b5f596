//! Tensor Fourier grids on the periodic box `[-L, L)^k`.
//!
//! A function is `u(x) = (2L)^{-k/2} Σ c_ξ e^{iξ·x}`, so the coefficient
//! vector is an orthonormal expansion and `Σ|c|²` is the L² norm on the box.
//! The frequency spacing is `Δ = π/L`; with the half-integer offset the
//! frequencies are `(j + 1/2)Δ` and zero is not a node.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid {
    pub dim: usize,
    /// Modes per axis (even).
    pub modes: usize,
    pub half_width: f64,
    pub offset: bool,
}

impl FourierGrid {
    pub fn new(dim: usize, modes: usize, half_width: f64, offset: bool) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::Argument(format!("grid dimension {dim} not in 1..=3")));
        }
        if modes < 2 || !modes.is_multiple_of(2) {
            return Err(Error::Argument(format!("modes per axis must be even and ≥ 2, got {modes}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Argument("box half-width must be positive".into()));
        }
        Ok(FourierGrid { dim, modes, half_width, offset })
    }

    pub fn len(&self) -> usize {
        self.modes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frequency spacing `π/L`.
    pub fn spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    pub fn cell_volume(&self) -> f64 {
        (2.0 * self.half_width / self.modes as f64).powi(self.dim as i32)
    }

    fn shift(&self) -> f64 {
        if self.offset {
            0.5
        } else {
            0.0
        }
    }

    /// Frequencies along one axis, increasing.
    pub fn axis_frequencies(&self) -> Vec<f64> {
        let h = self.modes as i64 / 2;
        (-h..h).map(|j| (j as f64 + self.shift()) * self.spacing()).collect()
    }

    /// Physical sample positions along one axis.
    pub fn axis_nodes(&self) -> Vec<f64> {
        let step = 2.0 * self.half_width / self.modes as f64;
        (0..self.modes).map(|m| -self.half_width + m as f64 * step).collect()
    }

    /// Multi-index of a flat index (last axis fastest).
    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for d in (0..self.dim).rev() {
            out[d] = idx % self.modes;
            idx /= self.modes;
        }
        out
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.modes + i)
    }

    pub fn frequency(&self, idx: usize) -> Vec<f64> {
        let f = self.axis_frequencies();
        self.unflatten(idx).into_iter().map(|i| f[i]).collect()
    }

    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.frequency(i)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let x = self.axis_nodes();
        (0..self.len()).map(|i| self.unflatten(i).into_iter().map(|m| x[m]).collect()).collect()
    }

    /// Sobolev weights `(1 + |ξ|²)^{s/2}`.
    pub fn sobolev_weights(&self, s: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            (0..self.len()).map(|i| {
                let n2: f64 = self.frequency(i).iter().map(|v| v * v).sum();
                (1.0 + n2).powf(0.5 * s)
            }),
        )
    }

    /// Samples → coefficients.
    pub fn forward(&self, samples: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.check_len(samples.len())?;
        let scale = self.cell_volume() * (2.0 * self.half_width).powf(-0.5 * self.dim as f64);
        let e = self.exponential_matrix().adjoint();
        Ok(self.apply_separable(samples, &e) * Complex64::from(scale))
    }

    /// Coefficients → samples at [`FourierGrid::points`].
    pub fn inverse(&self, coeffs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.check_len(coeffs.len())?;
        let scale = (2.0 * self.half_width).powf(-0.5 * self.dim as f64);
        Ok(self.apply_separable(coeffs, &self.exponential_matrix()) * Complex64::from(scale))
    }

    /// Value of the expansion at an arbitrary point.
    pub fn eval(&self, coeffs: &DVector<Complex64>, x: &[f64]) -> Complex64 {
        let f = self.axis_frequencies();
        let phases: Vec<Vec<Complex64>> =
            x.iter().map(|xd| f.iter().map(|k| Complex64::from_polar(1.0, k * xd)).collect()).collect();
        let scale = (2.0 * self.half_width).powf(-0.5 * self.dim as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut digits = [0usize; 3];
        for c in coeffs.iter() {
            let mut p = Complex64::new(scale, 0.0);
            for d in 0..self.dim {
                p *= phases[d][digits[d]];
            }
            acc += c * p;
            for d in (0..self.dim).rev() {
                digits[d] += 1;
                if digits[d] < self.modes {
                    break;
                }
                digits[d] = 0;
            }
        }
        acc
    }

    /// `E[m, j] = e^{i ξ_j x_m}` along one axis.
    fn exponential_matrix(&self) -> DMatrix<Complex64> {
        let f = self.axis_frequencies();
        let x = self.axis_nodes();
        DMatrix::from_fn(self.modes, self.modes, |m, j| Complex64::from_polar(1.0, f[j] * x[m]))
    }

    /// Applies the same 1-d matrix along every axis of a tensor array.
    pub fn apply_separable(&self, data: &DVector<Complex64>, mat: &DMatrix<Complex64>) -> DVector<Complex64> {
        let n = self.modes;
        let mut cur = data.clone();
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let mut next = DVector::zeros(cur.len());
            for base in 0..cur.len() {
                if !(base / stride).is_multiple_of(n) {
                    continue;
                }
                for r in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..n {
                        acc += mat[(r, c)] * cur[base + c * stride];
                    }
                    next[base + r * stride] = acc;
                }
            }
            cur = next;
        }
        cur
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch(format!("expected {} values, got {len}", self.len())));
        }
        Ok(())
    }

    /// Tensor 4-point Lagrange weights for evaluating a coefficient array at
    /// an off-grid frequency. Points outside the band get no weights;
    /// stencil nodes outside the band are treated as zero coefficients.
    pub fn cubic_weights(&self, freq: &[f64]) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_cubic_weight(freq, |i, w| out.push((i, w)));
        out
    }

    /// Allocation-free form of [`FourierGrid::cubic_weights`].
    pub fn for_each_cubic_weight(&self, freq: &[f64], mut f: impl FnMut(usize, f64)) {
        let first = -(self.modes as f64 / 2.0 - self.shift()) * self.spacing();
        let last = first + (self.modes - 1) as f64 * self.spacing();
        let mut idx = [[0usize; 4]; 3];
        let mut wts = [[0.0f64; 4]; 3];
        let mut cnt = [0usize; 3];
        for (d, &v) in freq.iter().enumerate() {
            if !(v >= first && v <= last) {
                return;
            }
            cnt[d] = lagrange4((v - first) / self.spacing(), self.modes, &mut idx[d], &mut wts[d]);
        }
        let n = self.modes;
        match self.dim {
            1 => (0..cnt[0]).for_each(|a| f(idx[0][a], wts[0][a])),
            2 => {
                for a in 0..cnt[0] {
                    for b in 0..cnt[1] {
                        f(idx[0][a] * n + idx[1][b], wts[0][a] * wts[1][b]);
                    }
                }
            }
            _ => {
                for a in 0..cnt[0] {
                    for b in 0..cnt[1] {
                        for c in 0..cnt[2] {
                            f((idx[0][a] * n + idx[1][b]) * n + idx[2][c], wts[0][a] * wts[1][b] * wts[2][c]);
                        }
                    }
                }
            }
        }
    }
}

/// Four-point Lagrange weights at fractional index `t ∈ [0, n-1]`; returns
/// the number of entries written.
fn lagrange4(t: f64, n: usize, idx: &mut [usize; 4], wts: &mut [f64; 4]) -> usize {
    let base = (t.floor() as i64).min(n as i64 - 2);
    let frac = t - base as f64;
    if frac.abs() < 1e-14 {
        idx[0] = base as usize;
        wts[0] = 1.0;
        return 1;
    }
    if (frac - 1.0).abs() < 1e-14 {
        idx[0] = base as usize + 1;
        wts[0] = 1.0;
        return 1;
    }
    let nodes = [-1.0, 0.0, 1.0, 2.0];
    let mut count = 0;
    for (a, &xa) in nodes.iter().enumerate() {
        let k = base + a as i64 - 1;
        if k < 0 || k >= n as i64 {
            continue;
        }
        let mut w = 1.0;
        for (b, &xb) in nodes.iter().enumerate() {
            if a != b {
                w *= (frac - xb) / (xa - xb);
            }
        }
        idx[count] = k as usize;
        wts[count] = w;
        count += 1;
    }
    count
}
