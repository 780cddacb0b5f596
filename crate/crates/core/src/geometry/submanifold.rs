use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::action::Point;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SubmanifoldKind {
    /// `origin + span(basis)`; the basis is orthonormalized on construction.
    Affine { origin: Vec<f64>, basis: Vec<Vec<f64>> },
    /// Circle of `radius` about `center` in the plane spanned by `axes`.
    Circle { center: Vec<f64>, axes: [Vec<f64>; 2], radius: f64 },
    /// Round sphere in R² or R³.
    Sphere { center: Vec<f64>, radius: f64 },
    /// Planar closed curve: the boundary of a rectangle with rounded corners.
    /// Chart parameter is arclength, starting at the left end of the top side
    /// and running clockwise.
    RoundedRectangle { center: [f64; 2], half_width: f64, half_height: f64, corner_radius: f64 },
}

#[derive(Debug, Clone)]
pub struct Submanifold {
    kind: SubmanifoldKind,
    ambient: usize,
}

fn orthonormalize(vs: &[Vec<f64>], n: usize) -> Result<Vec<DVector<f64>>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vs {
        if v.len() != n {
            return Err(Error::Argument("basis vector dimension mismatch".into()));
        }
        let mut w = DVector::from_row_slice(v);
        for e in &out {
            let d = w.dot(e);
            w -= e * d;
        }
        let norm = w.norm();
        if norm < 1e-12 {
            return Err(Error::Argument("basis vectors are linearly dependent".into()));
        }
        out.push(w / norm);
    }
    Ok(out)
}

impl Submanifold {
    pub fn new(kind: SubmanifoldKind) -> Result<Self> {
        let (kind, ambient) = match kind {
            SubmanifoldKind::Affine { origin, basis } => {
                let n = origin.len();
                if basis.is_empty() || basis.len() >= n {
                    return Err(Error::Argument(
                        "affine submanifold needs 1 <= dim < ambient dimension (codimension >= 1)".into(),
                    ));
                }
                let b = orthonormalize(&basis, n)?;
                let basis = b.iter().map(|v| v.as_slice().to_vec()).collect();
                (SubmanifoldKind::Affine { origin, basis }, n)
            }
            SubmanifoldKind::Circle { center, axes, radius } => {
                let n = center.len();
                if !(n == 2 || n == 3) || !(radius > 0.0) {
                    return Err(Error::Argument("circle needs ambient dimension 2 or 3 and radius > 0".into()));
                }
                let b = orthonormalize(&axes, n)?;
                let axes = [b[0].as_slice().to_vec(), b[1].as_slice().to_vec()];
                (SubmanifoldKind::Circle { center, axes, radius }, n)
            }
            SubmanifoldKind::Sphere { center, radius } => {
                let n = center.len();
                if !(n == 2 || n == 3) || !(radius > 0.0) {
                    return Err(Error::Argument("sphere needs ambient dimension 2 or 3 and radius > 0".into()));
                }
                (SubmanifoldKind::Sphere { center, radius }, n)
            }
            SubmanifoldKind::RoundedRectangle { center, half_width, half_height, corner_radius } => {
                if !(corner_radius > 0.0 && corner_radius < half_width && corner_radius < half_height) {
                    return Err(Error::Argument("rounded rectangle needs 0 < corner radius < both half sides".into()));
                }
                (SubmanifoldKind::RoundedRectangle { center, half_width, half_height, corner_radius }, 2)
            }
        };
        Ok(Submanifold { kind, ambient })
    }

    pub fn kind(&self) -> &SubmanifoldKind {
        &self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SubmanifoldKind::Affine { basis, .. } => basis.len(),
            SubmanifoldKind::Circle { .. } | SubmanifoldKind::RoundedRectangle { .. } => 1,
            SubmanifoldKind::Sphere { .. } => self.ambient - 1,
        }
    }

    pub fn codim(&self) -> usize {
        self.ambient - self.dim()
    }

    /// True when distances come from sampling rather than exact projection.
    pub fn is_sampled(&self) -> bool {
        matches!(self.kind, SubmanifoldKind::RoundedRectangle { .. })
    }

    /// Chart parameters whose coordinates are periodic, with their periods.
    pub fn periods(&self) -> Vec<Option<f64>> {
        match &self.kind {
            SubmanifoldKind::Affine { basis, .. } => vec![None; basis.len()],
            SubmanifoldKind::Circle { .. } => vec![Some(TAU)],
            SubmanifoldKind::Sphere { .. } if self.ambient == 2 => vec![Some(TAU)],
            SubmanifoldKind::Sphere { .. } => vec![None, Some(TAU)],
            SubmanifoldKind::RoundedRectangle { .. } => vec![Some(self.perimeter())],
        }
    }

    pub fn chart(&self, t: &[f64]) -> Result<Point> {
        if t.len() != self.dim() {
            return Err(Error::Argument(format!("chart expects {} parameters", self.dim())));
        }
        Ok(match &self.kind {
            SubmanifoldKind::Affine { origin, basis } => {
                let mut x = DVector::from_row_slice(origin);
                for (ti, b) in t.iter().zip(basis) {
                    x += DVector::from_row_slice(b) * *ti;
                }
                x
            }
            SubmanifoldKind::Circle { center, axes, radius } => {
                let (s, c) = t[0].sin_cos();
                DVector::from_row_slice(center)
                    + DVector::from_row_slice(&axes[0]) * (radius * c)
                    + DVector::from_row_slice(&axes[1]) * (radius * s)
            }
            SubmanifoldKind::Sphere { center, radius } => {
                let c = DVector::from_row_slice(center);
                if self.ambient == 2 {
                    c + DVector::from_row_slice(&[t[0].cos(), t[0].sin()]) * *radius
                } else {
                    let (st, ct) = t[0].sin_cos();
                    let (sp, cp) = t[1].sin_cos();
                    c + DVector::from_row_slice(&[st * cp, st * sp, ct]) * *radius
                }
            }
            SubmanifoldKind::RoundedRectangle { .. } => self.rounded_point(t[0]),
        })
    }

    fn perimeter(&self) -> f64 {
        match self.kind {
            SubmanifoldKind::RoundedRectangle { half_width, half_height, corner_radius, .. } => {
                4.0 * (half_width - corner_radius) + 4.0 * (half_height - corner_radius) + TAU * corner_radius
            }
            _ => f64::NAN,
        }
    }

    /// Length of the straight top side (chart interval `[0, top_length]`).
    pub fn top_side_length(&self) -> Option<f64> {
        match self.kind {
            SubmanifoldKind::RoundedRectangle { half_width, corner_radius, .. } => {
                Some(2.0 * (half_width - corner_radius))
            }
            _ => None,
        }
    }

    fn rounded_point(&self, s: f64) -> Point {
        let SubmanifoldKind::RoundedRectangle { center, half_width: a, half_height: b, corner_radius: r } = self.kind
        else {
            unreachable!()
        };
        let (w, h) = (2.0 * (a - r), 2.0 * (b - r));
        let arc = FRAC_PI_2 * r;
        let mut s = s.rem_euclid(self.perimeter());
        let (ix, iy) = (a - r, b - r);
        // clockwise from (-ix, b): top, arc, right, arc, bottom, arc, left, arc
        let p = 'found: {
            if s < w {
                break 'found [-ix + s, b];
            }
            s -= w;
            if s < arc {
                let th = FRAC_PI_2 - s / r;
                break 'found [ix + r * th.cos(), iy + r * th.sin()];
            }
            s -= arc;
            if s < h {
                break 'found [a, iy - s];
            }
            s -= h;
            if s < arc {
                let th = -s / r;
                break 'found [ix + r * th.cos(), -iy + r * th.sin()];
            }
            s -= arc;
            if s < w {
                break 'found [ix - s, -b];
            }
            s -= w;
            if s < arc {
                let th = -FRAC_PI_2 - s / r;
                break 'found [-ix + r * th.cos(), -iy + r * th.sin()];
            }
            s -= arc;
            if s < h {
                break 'found [-a, -iy + s];
            }
            s -= h;
            let th = PI - s / r;
            [-ix + r * th.cos(), iy + r * th.sin()]
        };
        DVector::from_row_slice(&[center[0] + p[0], center[1] + p[1]])
    }

    /// Signed distance for codimension-one submanifolds (negative inside for
    /// closed curves and spheres; the normal side is used for affine ones).
    pub fn signed_distance(&self, x: &Point) -> Option<f64> {
        if self.codim() != 1 {
            return None;
        }
        Some(match &self.kind {
            SubmanifoldKind::Affine { origin, .. } => {
                let n = self.normal_basis()[0].clone();
                (x - DVector::from_row_slice(origin)).dot(&n)
            }
            SubmanifoldKind::Circle { center, radius, .. } => (x - DVector::from_row_slice(center)).norm() - radius,
            SubmanifoldKind::Sphere { center, radius } => (x - DVector::from_row_slice(center)).norm() - radius,
            SubmanifoldKind::RoundedRectangle { center, half_width, half_height, corner_radius } => {
                let px = (x[0] - center[0]).abs() - (half_width - corner_radius);
                let py = (x[1] - center[1]).abs() - (half_height - corner_radius);
                let outside = px.max(0.0).hypot(py.max(0.0));
                outside + px.max(py).min(0.0) - corner_radius
            }
        })
    }

    pub fn distance(&self, x: &Point) -> f64 {
        match &self.kind {
            SubmanifoldKind::Affine { origin, basis } => {
                let mut d = x - DVector::from_row_slice(origin);
                for b in basis {
                    let b = DVector::from_row_slice(b);
                    let c = d.dot(&b);
                    d -= b * c;
                }
                d.norm()
            }
            SubmanifoldKind::Circle { center, axes, radius } => {
                let d = x - DVector::from_row_slice(center);
                let e1 = DVector::from_row_slice(&axes[0]);
                let e2 = DVector::from_row_slice(&axes[1]);
                let (a, b) = (d.dot(&e1), d.dot(&e2));
                let normal = &d - e1 * a - e2 * b;
                (a.hypot(b) - radius).hypot(normal.norm())
            }
            _ => self.signed_distance(x).expect("codimension one").abs(),
        }
    }

    /// Orthonormal normal vectors for affine submanifolds.
    fn normal_basis(&self) -> Vec<DVector<f64>> {
        let SubmanifoldKind::Affine { basis, .. } = &self.kind else {
            return Vec::new();
        };
        let mut vs = basis.clone();
        let mut normals = Vec::new();
        for i in 0..self.ambient {
            let mut e = vec![0.0; self.ambient];
            e[i] = 1.0;
            vs.push(e);
            match orthonormalize(&vs, self.ambient) {
                Ok(o) => normals.push(o.last().unwrap().clone()),
                Err(_) => {
                    vs.pop();
                }
            }
            if normals.len() == self.codim() {
                break;
            }
        }
        normals
    }

    /// Orthonormal basis of `T_x X` for `x` on (or near) the submanifold.
    pub fn tangent_basis(&self, x: &Point) -> Vec<DVector<f64>> {
        match &self.kind {
            SubmanifoldKind::Affine { basis, .. } => basis.iter().map(|b| DVector::from_row_slice(b)).collect(),
            SubmanifoldKind::Circle { center, axes, .. } => {
                let d = x - DVector::from_row_slice(center);
                let e1 = DVector::from_row_slice(&axes[0]);
                let e2 = DVector::from_row_slice(&axes[1]);
                let th = d.dot(&e2).atan2(d.dot(&e1));
                vec![e1 * (-th.sin()) + e2 * th.cos()]
            }
            SubmanifoldKind::Sphere { center, .. } => {
                let d = x - DVector::from_row_slice(center);
                let radial = d.as_slice().to_vec();
                let mut vs = vec![radial];
                let mut out = Vec::new();
                for i in 0..self.ambient {
                    let mut e = vec![0.0; self.ambient];
                    e[i] = 1.0;
                    vs.push(e);
                    match orthonormalize(&vs, self.ambient) {
                        Ok(o) => out.push(o.last().unwrap().clone()),
                        Err(_) => {
                            vs.pop();
                        }
                    }
                    if out.len() == self.ambient - 1 {
                        break;
                    }
                }
                out
            }
            SubmanifoldKind::RoundedRectangle { center, half_width, half_height, corner_radius } => {
                let (sx, sy) = ((x[0] - center[0]).signum(), (x[1] - center[1]).signum());
                let px = (x[0] - center[0]).abs() - (half_width - corner_radius);
                let py = (x[1] - center[1]).abs() - (half_height - corner_radius);
                let n = if px > 0.0 && py > 0.0 {
                    let l = px.hypot(py);
                    [sx * px / l, sy * py / l]
                } else if px > py {
                    [sx, 0.0]
                } else {
                    [0.0, sy]
                };
                vec![DVector::from_row_slice(&[-n[1], n[0]])]
            }
        }
    }

    /// Component of `v` orthogonal to `T_x X`.
    pub fn normal_component(&self, x: &Point, v: &DVector<f64>) -> DVector<f64> {
        let mut w = v.clone();
        for t in self.tangent_basis(x) {
            let c = w.dot(&t);
            w -= t * c;
        }
        w
    }
}
