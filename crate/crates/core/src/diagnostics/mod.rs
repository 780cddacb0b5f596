//! Singular-value diagnostics: compactness proxies for discrete traces and
//! the commutator test on invariant circles.

pub mod circle;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{log_log_slope, singular_values};
use crate::operator::{DiscreteOperator, FourierGrid};

pub use circle::{circle_trace, commutator_norm, invariance_commutator, CircleTrace, CommutatorReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    /// Non-increasing.
    pub values: Vec<f64>,
    /// `β` in `s_k ~ k^{-β}` fitted over the upper half of the spectrum.
    pub tail_exponent: f64,
    pub rows: usize,
    pub cols: usize,
    pub weighted: bool,
}

impl DecayProfile {
    pub fn from_matrix(m: &DMatrix<Complex64>, weighted: bool) -> Result<Self> {
        if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("matrix has non-finite entries".into()));
        }
        let values = singular_values(m);
        let tail_exponent = tail_exponent(&values);
        Ok(DecayProfile { values, tail_exponent, rows: m.nrows(), cols: m.ncols(), weighted })
    }

    /// `s_k / s_1` (1-based `k`), zero for the zero matrix.
    pub fn ratio(&self, k: usize) -> f64 {
        match (self.values.first(), self.values.get(k.saturating_sub(1))) {
            (Some(&s1), Some(&sk)) if s1 > 0.0 => sk / s1,
            _ => 0.0,
        }
    }
}

fn tail_exponent(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 4 {
        return 0.0;
    }
    let lo = (n / 8).max(1);
    let hi = (n / 2).max(lo + 2);
    let (ks, vs): (Vec<f64>, Vec<f64>) =
        (lo..hi).filter(|&k| values[k - 1] > 0.0).map(|k| (k as f64, values[k - 1])).unzip();
    if ks.len() < 2 {
        return f64::INFINITY;
    }
    -log_log_slope(&ks, &vs)
}

/// Singular values, optionally in the `H^s → H^{s-order}` geometry.
pub fn singular_spectrum(op: &DiscreteOperator, sobolev_weighted: bool) -> Result<DecayProfile> {
    if sobolev_weighted {
        DecayProfile::from_matrix(&op.weighted(), true)
    } else {
        DecayProfile::from_matrix(&op.matrix, false)
    }
}

/// Multiplication by `φ` (samples at the grid's physical points) acting on
/// coefficients.
pub fn multiplication_operator(grid: &FourierGrid, phi: &[f64]) -> Result<DMatrix<Complex64>> {
    if phi.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} cutoff samples for {} grid points", phi.len(), grid.len())));
    }
    let n = grid.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = Complex64::new(1.0, 0.0);
        let mut samples = grid.inverse(&e)?;
        samples.iter_mut().zip(phi).for_each(|(v, p)| *v *= *p);
        m.set_column(j, &grid.forward(&samples)?);
    }
    Ok(m)
}

/// A ball `|x - center| < radius` in X's chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Compactness proxy calibration: the verdict uses `s_k/s_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub k: usize,
    pub threshold: f64,
}

/// `s_20/s_1` of the smoothing anchor, from [`reference_ratios`] on
/// [`reference_grid`].
pub const COMPACT_REFERENCE_RATIO: f64 = 0.537_912_569_818_718_4;
/// `s_20/s_1` of the identity.
pub const IDENTITY_REFERENCE_RATIO: f64 = 1.0;

/// Two-dimensional offset grid, 16 modes, half-width 8.
pub fn reference_grid() -> FourierGrid {
    FourierGrid::new(2, 16, 8.0, true).expect("static grid")
}

/// `s_k/s_1` of the smoothing anchor `(1 + |ξ|²)^{-1}` (viewed as order 0)
/// and of the identity.
pub fn reference_ratios(grid: &FourierGrid, k: usize) -> Result<(f64, f64)> {
    let n = grid.len();
    let smoothing = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| {
        let xi = grid.frequency(i);
        Complex64::from(1.0 / (1.0 + xi.iter().map(|v| v * v).sum::<f64>()))
    }));
    let compact = DecayProfile::from_matrix(&smoothing, true)?.ratio(k);
    let identity = DecayProfile::from_matrix(&DMatrix::identity(n, n), true)?.ratio(k);
    Ok((compact, identity))
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration { k: 20, threshold: (COMPACT_REFERENCE_RATIO * IDENTITY_REFERENCE_RATIO).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Localized,
    NotLocalized,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub modes: Vec<usize>,
    pub ratios: Vec<f64>,
    pub calibration: Calibration,
    pub leading_values: Vec<Vec<f64>>,
    pub verdict: Verdict,
}

/// `op ∘ M_φ` at each refinement level; localized iff `s_k/s_1` decreases
/// from level to level and ends below the calibrated threshold.
///
/// `levels` pairs each operator with cutoff samples on its source grid;
/// every sample inside `y` must vanish.
pub fn localization_test(
    levels: &[(DiscreteOperator, Vec<f64>)],
    y: Option<&Neighborhood>,
    calibration: Calibration,
) -> Result<LocalizationReport> {
    if levels.is_empty() {
        return Err(Error::Argument("localization test needs at least one level".into()));
    }
    let mut ratios = Vec::new();
    let mut modes = Vec::new();
    let mut leading = Vec::new();
    for (op, phi) in levels {
        if let Some(y) = y {
            for (x, p) in op.source.points().iter().zip(phi) {
                let d: f64 = x.iter().zip(&y.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if d < y.radius && p.abs() > 1e-12 {
                    return Err(Error::Precondition(format!("cutoff is {p:e} at {x:?}, inside the excluded ball")));
                }
            }
        }
        let m = multiplication_operator(&op.source, phi)?;
        let composed = DiscreteOperator::new(&op.matrix * m, op.source, op.source_index, op.target, op.order)?;
        let profile = singular_spectrum(&composed, true)?;
        ratios.push(profile.ratio(calibration.k));
        modes.push(op.source.modes);
        leading.push(profile.values.iter().take(2 * calibration.k).copied().collect());
    }
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    let verdict = if decreasing && *ratios.last().unwrap() < calibration.threshold {
        Verdict::Localized
    } else {
        Verdict::NotLocalized
    };
    Ok(LocalizationReport { scenario: None, modes, ratios, calibration, leading_values: leading, verdict })
}

/// `C^∞` cutoff: 0 for `r ≤ r0`, 1 for `r ≥ r1`.
pub fn radial_cutoff(r: f64, r0: f64, r1: f64) -> f64 {
    let bump = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let t = ((r - r0) / (r1 - r0)).clamp(0.0, 1.0);
    let a = bump(t);
    let b = bump(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}
