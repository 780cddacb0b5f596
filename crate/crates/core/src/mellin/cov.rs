//! The change of variables `(w, φ) ↦ (ρ, ψ)` on the dual plane of the tilted
//! plane, its inverse, and its Jacobian.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plane `-x sin α + z cos α = 0` and the Sobolev index of the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltConfig {
    pub alpha: f64,
    pub s: f64,
    /// `α` must stay this far from 0 and π/2.
    pub margin: f64,
}

pub const DEFAULT_TILT_MARGIN: f64 = 1e-2;

/// Half-width of the excluded band `|ρ cos ψ - u| < DEGENERATE_MARGIN·(1 + ρ + |u|)`.
pub const DEGENERATE_MARGIN: f64 = 1e-6;

impl TiltConfig {
    pub fn new(alpha: f64, s: f64) -> Result<Self> {
        Self::with_margin(alpha, s, DEFAULT_TILT_MARGIN)
    }

    pub fn with_margin(alpha: f64, s: f64, margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin < std::f64::consts::FRAC_PI_4) {
            return Err(Error::Argument(format!("tilt margin {margin} must lie in (0, π/4)")));
        }
        if !(alpha >= margin && alpha <= std::f64::consts::FRAC_PI_2 - margin) {
            return Err(Error::Domain(format!("tilt angle {alpha} is within {margin} of 0 or π/2")));
        }
        if !(s > -1.0 && s < 0.0) {
            return Err(Error::Domain(format!("Sobolev index {s} must lie in (-1, 0)")));
        }
        Ok(TiltConfig { alpha, s, margin })
    }

    pub(crate) fn sc(&self) -> (f64, f64) {
        self.alpha.sin_cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovPoint {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub phi: f64,
    pub rho: f64,
    pub psi: f64,
    /// `ρ / (sin α (ρ cos ψ - u))`, so that `dφ dw = factor · dρ dψ`.
    pub jacobian: f64,
}

/// Point `(s, t)` of the dual plane reached from `(u, v)` along `(w, φ)`.
pub fn cov_cartesian(cfg: &TiltConfig, u: f64, v: f64, w: f64, phi: f64) -> (f64, f64) {
    let (sa, ca) = cfg.sc();
    let (sp, cp) = phi.sin_cos();
    let s = u * (ca * ca * cp + sa * sa) + v * ca * sp + w * sa * ca * (1.0 - cp);
    let t = -u * ca * sp + v * cp + w * sa * sp;
    (s, t)
}

pub fn cov_forward(cfg: &TiltConfig, u: f64, v: f64, w: f64, phi: f64) -> (f64, f64) {
    let (s, t) = cov_cartesian(cfg, u, v, w, phi);
    (s.hypot(t), t.atan2(s).rem_euclid(TAU))
}

fn check_degenerate(u: f64, rho: f64, psi: f64) -> Result<f64> {
    let gap = rho * psi.cos() - u;
    if gap.abs() < DEGENERATE_MARGIN * (1.0 + rho + u.abs()) {
        return Err(Error::Singularity(format!("ρ cos ψ - u = {gap:e} is inside the degenerate band")));
    }
    Ok(gap)
}

/// `φ ∈ (-π, π]` from `tan(φ/2)`; total except at `ρ e^{iψ} = (u, -v)`.
pub fn inverse_angle(cfg: &TiltConfig, u: f64, v: f64, rho: f64, psi: f64) -> Result<f64> {
    let (sp, cp) = psi.sin_cos();
    let num = rho * cp - u;
    let den = (v + rho * sp) * cfg.alpha.cos();
    if den == 0.0 {
        if num == 0.0 {
            return Err(Error::Singularity("the point (u, -v) lies on every line".into()));
        }
        return Ok(std::f64::consts::PI);
    }
    Ok(2.0 * (num / den).atan())
}

pub fn cov_inverse(cfg: &TiltConfig, u: f64, v: f64, rho: f64, psi: f64) -> Result<(f64, f64)> {
    let gap = check_degenerate(u, rho, psi)?;
    let phi = inverse_angle(cfg, u, v, rho, psi)?;
    let (sa, ca) = cfg.sc();
    let r2 = u * u + v * v;
    let w = (sa * sa * gap * gap + ca * ca * (rho * rho - r2)) / (2.0 * gap * ca * sa);
    Ok((phi, w))
}

pub fn cov_jacobian(cfg: &TiltConfig, u: f64, rho: f64, psi: f64) -> Result<f64> {
    let gap = check_degenerate(u, rho, psi)?;
    Ok(rho / (cfg.alpha.sin() * gap))
}

pub fn cov_point(cfg: &TiltConfig, u: f64, v: f64, rho: f64, psi: f64) -> Result<CovPoint> {
    let (phi, w) = cov_inverse(cfg, u, v, rho, psi)?;
    let jacobian = cov_jacobian(cfg, u, rho, psi)?;
    Ok(CovPoint { u, v, w, phi, rho, psi, jacobian })
}
