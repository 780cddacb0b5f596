//! The trace as an integral operator on the dual plane, evaluated directly:
//! `g(u, v) = r ∫ dw ∫ dφ f(s, t) / (r² + w²)`, `r = |(u, v)|`.

use std::cell::Cell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::cov::TiltConfig;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};

/// Radial support `[inner, outer]` of a function on the dual plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0) {
            return Err(Error::Precondition(format!("support reaches the origin (inner radius {inner})")));
        }
        if !(outer > inner) || !outer.is_finite() {
            return Err(Error::Argument(format!("annulus [{inner}, {outer}] is empty")));
        }
        Ok(Annulus { inner, outer })
    }

    pub fn contains(&self, rho: f64) -> bool {
        rho >= self.inner && rho <= self.outer
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Eq1Options {
    pub inner: AdaptiveOptions,
    pub outer: AdaptiveOptions,
}

impl Default for Eq1Options {
    fn default() -> Self {
        Eq1Options {
            inner: AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 },
            outer: AdaptiveOptions { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 4000 },
        }
    }
}

/// Parameters `w` where `|p + w d|` crosses `radius`, if any.
fn crossings(p: [f64; 2], d: [f64; 2], radius: f64) -> Option<(f64, f64)> {
    let a = d[0] * d[0] + d[1] * d[1];
    let b = p[0] * d[0] + p[1] * d[1];
    let c = p[0] * p[0] + p[1] * p[1] - radius * radius;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    // stable roots of a w² + 2 b w + c
    let q = -(b + b.signum() * disc.sqrt());
    let (w1, w2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some((w1.min(w2), w1.max(w2)))
}

/// `w`-intervals on which the line `p + w d` lies in the annulus.
fn segments(p: [f64; 2], d: [f64; 2], ann: Annulus) -> Vec<(f64, f64)> {
    let Some((o1, o2)) = crossings(p, d, ann.outer) else {
        return Vec::new();
    };
    match crossings(p, d, ann.inner) {
        Some((i1, i2)) => vec![(o1, i1), (i2, o2)],
        None => vec![(o1, o2)],
    }
}

/// `g` at each point `(u, v)`. `f` is read only inside `support`.
pub fn trace_direct_eq1<F: Fn(f64, f64) -> f64>(
    cfg: &TiltConfig,
    f: F,
    support: Annulus,
    points: &[(f64, f64)],
    opts: Eq1Options,
) -> Result<Vec<f64>> {
    let (sa, ca) = cfg.sc();
    let failure: Cell<Option<Error>> = Cell::new(None);
    let mut out = Vec::with_capacity(points.len());
    for &(u, v) in points {
        let r = u.hypot(v);
        if !(r > 0.0) {
            return Err(Error::Domain("eq1 is evaluated away from the dual origin".into()));
        }
        // with w = r tan θ the weight r dw / (r² + w²) becomes dθ
        let along = |phi: f64| -> f64 {
            let (sp, cp) = phi.sin_cos();
            let p = [u * (ca * ca * cp + sa * sa) + v * ca * sp, -u * ca * sp + v * cp];
            let d = [sa * ca * (1.0 - cp), sa * sp];
            if d[0] == 0.0 && d[1] == 0.0 {
                let rho = p[0].hypot(p[1]);
                return if support.contains(rho) { PI * f(p[0], p[1]) } else { 0.0 };
            }
            let mut acc = 0.0;
            for (w0, w1) in segments(p, d, support) {
                let (t0, t1) = ((w0 / r).atan(), (w1 / r).atan());
                let g = |theta: f64| {
                    let w = r * theta.tan();
                    f(p[0] + w * d[0], p[1] + w * d[1])
                };
                match integrate_adaptive(g, t0, t1, &[], opts.inner) {
                    Ok(i) => acc += i.value,
                    Err(e) => failure.set(Some(e)),
                }
            }
            acc
        };
        let total = integrate_adaptive(along, -PI, PI, &[0.0], opts.outer)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        out.push(total.value);
    }
    Ok(out)
}
