//! Sobolev-indexed coefficient vectors and constant-coefficient symbols.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::FourierGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevVector {
    pub grid: FourierGrid,
    pub coeffs: DVector<Complex64>,
    pub index: f64,
}

impl SobolevVector {
    pub fn new(grid: FourierGrid, coeffs: DVector<Complex64>, index: f64) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} coefficients for a grid of {}", coeffs.len(), grid.len())));
        }
        Ok(SobolevVector { grid, coeffs, index })
    }

    pub fn zeros(grid: FourierGrid, index: f64) -> Self {
        SobolevVector { grid, coeffs: DVector::zeros(grid.len()), index }
    }

    /// `(Σ (1+|ξ|²)^s |c_ξ|²)^{1/2}` at the vector's own index.
    pub fn norm(&self) -> f64 {
        self.norm_at(self.index)
    }

    pub fn norm_at(&self, s: f64) -> f64 {
        let w = self.grid.sobolev_weights(s);
        self.coeffs.iter().zip(w.iter()).map(|(c, w)| c.norm_sqr() * w * w).sum::<f64>().sqrt()
    }

    /// Unweighted ℓ² inner product `Σ conj(a) b`.
    pub fn inner(&self, other: &SobolevVector) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("inner product across different grids".into()));
        }
        Ok(self.coeffs.dotc(&other.coeffs))
    }
}

/// Constant-coefficient symbols `σ(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "symbol", rename_all = "kebab-case")]
pub enum Symbol {
    Identity,
    Zero,
    /// `|ξ|^{-2}`, the inverse of `-Δ`.
    InverseLaplacian,
    /// `(1 + |ξ|²)^{t/2}`.
    Bessel {
        t: f64,
    },
    /// `|ξ|^t`.
    Homogeneous {
        t: f64,
    },
}

impl Symbol {
    pub fn order(&self) -> f64 {
        match self {
            Symbol::Identity | Symbol::Zero => 0.0,
            Symbol::InverseLaplacian => -2.0,
            Symbol::Bessel { t } | Symbol::Homogeneous { t } => *t,
        }
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        let n2: f64 = xi.iter().map(|v| v * v).sum();
        match self {
            Symbol::Identity => 1.0,
            Symbol::Zero => 0.0,
            Symbol::InverseLaplacian => 1.0 / n2,
            Symbol::Bessel { t } => (1.0 + n2).powf(0.5 * t),
            Symbol::Homogeneous { t } => n2.powf(0.5 * t),
        }
    }

    /// Same as [`Symbol::eval`] with the squared norm supplied.
    pub fn eval_norm_sq(&self, n2: f64) -> f64 {
        match self {
            Symbol::Identity => 1.0,
            Symbol::Zero => 0.0,
            Symbol::InverseLaplacian => 1.0 / n2,
            Symbol::Bessel { t } => (1.0 + n2).powf(0.5 * t),
            Symbol::Homogeneous { t } => n2.powf(0.5 * t),
        }
    }
}

/// `û(ξ) ↦ σ(ξ) û(ξ)`; the result carries index `s - order`.
pub fn psdo_apply(symbol: &Symbol, u: &SobolevVector) -> Result<SobolevVector> {
    let mut out = u.coeffs.clone();
    for (i, c) in out.iter_mut().enumerate() {
        let xi = u.grid.frequency(i);
        let v = symbol.eval(&xi);
        if !v.is_finite() {
            return Err(Error::Singularity(format!("symbol is not finite at ξ = {xi:?}")));
        }
        *c *= v;
    }
    Ok(SobolevVector { grid: u.grid, coeffs: out, index: u.index - symbol.order() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(offset: bool) -> SobolevVector {
        let g = FourierGrid::new(2, 8, 3.0, offset).unwrap();
        let c = DVector::from_fn(g.len(), |i, _| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
        SobolevVector::new(g, c, -0.5).unwrap()
    }

    #[test]
    fn identity_and_inverse_pairs() {
        let u = vector(false);
        assert_eq!(psdo_apply(&Symbol::Identity, &u).unwrap().coeffs, u.coeffs);
        let up = psdo_apply(&Symbol::Bessel { t: 1.3 }, &u).unwrap();
        let back = psdo_apply(&Symbol::Bessel { t: -1.3 }, &up).unwrap();
        assert!((back.coeffs - &u.coeffs).norm() < 1e-12 * u.coeffs.norm());
        assert!((back.index - u.index).abs() < 1e-15);
    }

    #[test]
    fn inverse_laplacian_needs_offset() {
        assert!(matches!(psdo_apply(&Symbol::InverseLaplacian, &vector(false)), Err(Error::Singularity(_))));
        let u = vector(true);
        let v = psdo_apply(&Symbol::InverseLaplacian, &u).unwrap();
        assert_eq!(v.index, u.index + 2.0);
        // direct oracle: |ξ|^{-2}(1+|ξ|²) ≤ 1 + 1/min|ξ|²
        let min2 = 2.0 * (0.5 * u.grid.spacing()).powi(2);
        assert!(v.norm() <= (1.0 + 1.0 / min2) * u.norm() + 1e-12);
    }
}
