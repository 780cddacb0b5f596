//! Orbit containment / tangency classification, geometric set descriptors,
//! and the Monte Carlo volume estimate behind Condition 1.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{GroupAction, Point};
use super::submanifold::Submanifold;
use crate::error::{Error, Result};
use crate::numerics::{fit_line, log_log_slope};

/// Default tolerance for submanifolds with closed-form projection.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Default tolerance for submanifolds whose distance is sampled.
pub const SAMPLED_TOL: f64 = 1e-6;
/// Default Monte Carlo group samples per ε.
pub const DEFAULT_MC_SAMPLES: usize = 10_000;

pub fn default_tol(sub: &Submanifold) -> f64 {
    if sub.is_sampled() {
        SAMPLED_TOL
    } else {
        CLOSED_FORM_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// The whole orbit stays in X.
    InXG,
    /// The orbit is tangent to X at the point but leaves it.
    TangentOnly,
    Neither,
}

/// Classifies `x ∈ X` by orbit containment (over the Haar nodes) and by the
/// normal components of the generator fields.
pub fn classify_point(action: &GroupAction, sub: &Submanifold, x: &Point, tol: f64) -> Result<Classification> {
    if action.ambient_dim() != sub.ambient_dim() || x.len() != sub.ambient_dim() {
        return Err(Error::Argument("action, submanifold and point dimensions differ".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::Argument("tolerance must be non-negative".into()));
    }
    let d = sub.distance(x);
    if d > tol {
        return Err(Error::Domain(format!("point is {d:e} away from the submanifold (tol {tol:e})")));
    }
    let mut contained = true;
    for node in action.quadrature() {
        if sub.distance(&action.act(&node.param, x)?) > tol {
            contained = false;
            break;
        }
    }
    if contained {
        return Ok(Classification::InXG);
    }
    let tangent = action.generators()?.iter().all(|field| sub.normal_component(x, &field.at(x)).norm() <= tol);
    Ok(if tangent { Classification::TangentOnly } else { Classification::Neither })
}

/// One connected piece of a sampled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Component {
    Point {
        at: Vec<f64>,
    },
    /// Collinear samples; `extent` is the sampled parameter range along `direction`.
    Line {
        point: Vec<f64>,
        direction: Vec<f64>,
        extent: [f64; 2],
    },
    Circle {
        center: Vec<f64>,
        radius: f64,
    },
    Curve {
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "kebab-case")]
pub enum SetDescriptor {
    Empty,
    /// Every sampled point of X.
    Whole,
    Components {
        parts: Vec<Component>,
    },
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() <= tol
}

impl Component {
    fn matches(&self, other: &Component, tol: f64) -> bool {
        match (self, other) {
            (Component::Point { at: a }, Component::Point { at: b }) => close(a, b, tol),
            (Component::Line { point: p, direction: d, .. }, Component::Line { point: q, direction: e, .. }) => {
                let d = DVector::from_row_slice(d).normalize();
                let e = DVector::from_row_slice(e).normalize();
                let parallel = (d.dot(&e).abs() - 1.0).abs() <= tol;
                let off = DVector::from_row_slice(q) - DVector::from_row_slice(p);
                let perp = &off - &d * off.dot(&d);
                parallel && perp.norm() <= tol
            }
            (Component::Circle { center: c, radius: r }, Component::Circle { center: k, radius: s }) => {
                close(c, k, tol) && (r - s).abs() <= tol
            }
            (Component::Curve { .. }, Component::Curve { .. }) => true,
            _ => false,
        }
    }
}

impl SetDescriptor {
    /// Shape-level equality: same component kinds with geometric parameters
    /// within `tol` (line extents ignored); component order is irrelevant.
    pub fn matches(&self, other: &SetDescriptor, tol: f64) -> bool {
        match (self, other) {
            (SetDescriptor::Empty, SetDescriptor::Empty) | (SetDescriptor::Whole, SetDescriptor::Whole) => true,
            (SetDescriptor::Components { parts: a }, SetDescriptor::Components { parts: b }) => {
                if a.len() != b.len() {
                    return false;
                }
                let mut used = vec![false; b.len()];
                a.iter().all(|ca| match b.iter().enumerate().find(|(j, cb)| !used[*j] && ca.matches(cb, tol)) {
                    Some((j, _)) => {
                        used[j] = true;
                        true
                    }
                    None => false,
                })
            }
            _ => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SetDescriptor::Empty)
    }

    /// Summarizes a point cloud: single-linkage clusters (link length
    /// `link`), each fitted as a point, line, circle or generic curve.
    pub fn fit(points: &[Point], total_samples: usize, link: f64) -> SetDescriptor {
        if points.is_empty() {
            return SetDescriptor::Empty;
        }
        if points.len() == total_samples && total_samples > 1 {
            return SetDescriptor::Whole;
        }
        let clusters = single_linkage(points, link);
        let mut parts: Vec<Component> = clusters.iter().map(|c| fit_component(points, c, link)).collect();
        parts.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
        SetDescriptor::Components { parts }
    }
}

fn single_linkage(points: &[Point], link: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (&points[i] - &points[j]).norm() <= link {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn round(v: f64) -> f64 {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn rounded(v: &DVector<f64>) -> Vec<f64> {
    v.iter().map(|x| round(*x)).collect()
}

fn fit_component(points: &[Point], idx: &[usize], link: f64) -> Component {
    let dim = points[idx[0]].len();
    let mut centroid = DVector::zeros(dim);
    for &i in idx {
        centroid += &points[i];
    }
    centroid /= idx.len() as f64;
    let spread = idx.iter().map(|&i| (&points[i] - &centroid).norm()).fold(0.0, f64::max);
    let shape_tol = 1e-6 * (1.0 + spread);
    if spread <= 1e-6 || idx.len() == 1 {
        return Component::Point { at: rounded(&centroid) };
    }
    let cov = DMatrix::from_fn(dim, dim, |r, c| {
        idx.iter().map(|&i| (points[i][r] - centroid[r]) * (points[i][c] - centroid[c])).sum::<f64>()
    });
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let dir = eig.eigenvectors.column(order[0]).into_owned();
    let off_line = idx
        .iter()
        .map(|&i| {
            let d = &points[i] - &centroid;
            (&d - &dir * d.dot(&dir)).norm()
        })
        .fold(0.0, f64::max);
    if off_line <= shape_tol {
        let proj: Vec<f64> = idx.iter().map(|&i| (&points[i] - &centroid).dot(&dir)).collect();
        let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // canonical direction sign and foot point closest to the origin
        let sign = dir.iter().find(|v| v.abs() > 1e-9).map(|v| v.signum()).unwrap_or(1.0);
        let dir = &dir * sign;
        let foot = &centroid - &dir * centroid.dot(&dir);
        let shift = centroid.dot(&dir);
        return Component::Line {
            point: rounded(&foot),
            direction: rounded(&dir),
            extent: [
                round(sign * lo + shift).min(round(sign * hi + shift)),
                round(sign * lo + shift).max(round(sign * hi + shift)),
            ],
        };
    }
    let radii: Vec<f64> = idx.iter().map(|&i| (&points[i] - &centroid).norm()).collect();
    let r = radii.iter().sum::<f64>() / radii.len() as f64;
    let planar = dim == 2 || eig.eigenvalues[order[dim - 1]].abs() <= shape_tol * shape_tol;
    let round_enough = radii.iter().all(|x| (x - r).abs() <= 1e-3 * r.max(link));
    if planar && round_enough && idx.len() >= 4 {
        return Component::Circle { center: rounded(&centroid), radius: round(r) };
    }
    Component::Curve { samples: idx.len() }
}

/// Axis-aligned box in chart parameters (a degenerate box is a point or a
/// lower-dimensional face).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartBox {
    pub fn point(t: &[f64]) -> Self {
        ChartBox { lo: t.to_vec(), hi: t.to_vec() }
    }

    fn inflate(&self, by: f64) -> ChartBox {
        ChartBox { lo: self.lo.iter().map(|v| v - by).collect(), hi: self.hi.iter().map(|v| v + by).collect() }
    }

    fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| crate::numerics::lin_space(*a, *b, if b > a { per_axis } else { 1 }))
            .collect();
        let mut out = vec![Vec::new()];
        for axis in axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub eps: f64,
    pub volume: f64,
    /// Binomial standard error of the Monte Carlo estimate.
    pub std_error: f64,
    /// `true` when the zone Z was empty (nothing to estimate).
    pub vacuous: bool,
}

/// Samples per chart axis used to represent `U_ε`.
pub const NEIGHBORHOOD_SAMPLES: usize = 33;

/// Monte Carlo estimate of the Haar volume of `G_ε = {g : g·U_ε ∩ X ≠ ∅}`,
/// `U_ε` being the zone `Z` (a chart box) inflated by `ε/2` along every
/// chart axis.
///
/// For codimension-one X the intersection test uses the sign of the signed
/// distance over the connected set `g·U_ε`; otherwise the sampled distance
/// is thresholded at `tol`.
pub fn condition1_volume(
    action: &GroupAction,
    sub: &Submanifold,
    zone: Option<&ChartBox>,
    eps: f64,
    samples: usize,
    seed: u64,
    stream: u64,
) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(Error::Argument("Monte Carlo sample count must be positive".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Argument("ε must be positive".into()));
    }
    let Some(zone) = zone else {
        return Ok(VolumeEstimate { eps, volume: 0.0, std_error: 0.0, vacuous: true });
    };
    if zone.lo.len() != sub.dim() || zone.hi.len() != sub.dim() {
        return Err(Error::Argument("zone dimension does not match the chart".into()));
    }
    let neighborhood: Vec<Point> =
        zone.inflate(0.5 * eps).grid(NEIGHBORHOOD_SAMPLES).iter().map(|t| sub.chart(t)).collect::<Result<_>>()?;
    let tol = default_tol(sub);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut hits = 0usize;
    for _ in 0..samples {
        let g = action.element(&action.sample_haar(&mut rng))?;
        let hit = if sub.codim() == 1 {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for u in &neighborhood {
                let sd = sub.signed_distance(&g.apply(u)).expect("codimension one");
                lo = lo.min(sd);
                hi = hi.max(sd);
            }
            lo <= tol && hi >= -tol
        } else {
            neighborhood.iter().any(|u| sub.distance(&g.apply(u)) <= tol)
        };
        hits += hit as usize;
    }
    let p = hits as f64 / samples as f64;
    Ok(VolumeEstimate { eps, volume: p, std_error: (p * (1.0 - p) / samples as f64).sqrt(), vacuous: false })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Condition1Sweep {
    /// Strictly decreasing ε.
    pub estimates: Vec<VolumeEstimate>,
    /// Log–log slope of volume against ε over the non-zero estimates.
    pub decay_exponent: Option<f64>,
    /// Intercept at ε = 0 of a straight-line fit through the three smallest ε.
    pub fitted_limit: f64,
    /// Each step non-increasing up to three combined standard errors.
    pub monotone_within_3sigma: bool,
}

pub fn condition1_sweep(
    action: &GroupAction,
    sub: &Submanifold,
    zone: Option<&ChartBox>,
    eps: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Condition1Sweep> {
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument("ε values must be strictly decreasing".into()));
    }
    let estimates: Vec<VolumeEstimate> = eps
        .iter()
        .enumerate()
        .map(|(i, e)| condition1_volume(action, sub, zone, *e, samples, seed, i as u64))
        .collect::<Result<_>>()?;
    let monotone = estimates
        .windows(2)
        .all(|w| w[1].volume <= w[0].volume + 3.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt());
    let nz: Vec<&VolumeEstimate> = estimates.iter().filter(|e| e.volume > 0.0).collect();
    let decay_exponent = (nz.len() >= 2).then(|| {
        let xs: Vec<f64> = nz.iter().map(|e| e.eps).collect();
        let ys: Vec<f64> = nz.iter().map(|e| e.volume).collect();
        log_log_slope(&xs, &ys)
    });
    let tail = &estimates[estimates.len().saturating_sub(3)..];
    let fitted_limit = if tail.len() >= 2 {
        let xs: Vec<f64> = tail.iter().map(|e| e.eps).collect();
        let ys: Vec<f64> = tail.iter().map(|e| e.volume).collect();
        fit_line(&xs, &ys).1
    } else {
        tail.first().map(|e| e.volume).unwrap_or(0.0)
    };
    Ok(Condition1Sweep { estimates, decay_exponent, fitted_limit, monotone_within_3sigma: monotone })
}
