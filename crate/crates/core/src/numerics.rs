//! Small dense linear-algebra and fitting helpers.

use nalgebra::{ComplexField, DMatrix, DVector};

/// Ordinary least-squares line `y = slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly).0
}

/// `count` points spaced uniformly in log between `lo` and `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

pub fn lin_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

/// Singular values, largest first.
pub fn singular_values<T>(m: &DMatrix<T>) -> Vec<f64>
where
    T: ComplexField<RealField = f64>,
{
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value. Dense SVD for small matrices, power iteration on
/// `AᴴA` otherwise.
pub fn spectral_norm<T>(m: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64>,
{
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows().max(m.ncols()) <= 256 {
        return singular_values(m)[0];
    }
    let n = m.ncols();
    // deterministic, non-degenerate start vector
    let mut v = DVector::<T>::from_fn(n, |i, _| T::from_real(1.0 + 0.37 * ((i as f64) * 0.618_033_988_7).fract()));
    let mut sigma = 0.0;
    let mh = m.adjoint();
    for _ in 0..2000 {
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        v.unscale_mut(nv);
        let w = m * &v;
        let next = w.norm();
        v = &mh * w;
        if (next - sigma).abs() <= 1e-13 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}
