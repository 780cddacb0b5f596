//! Parametrized isometric group actions with normalized Haar quadrature.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Unit, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

pub type Point = DVector<f64>;

/// Affine isometry `x ↦ linear·x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    pub linear: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl Isometry {
    pub fn identity(n: usize) -> Self {
        Isometry { linear: DMatrix::identity(n, n), offset: DVector::zeros(n) }
    }

    pub fn apply(&self, x: &Point) -> Point {
        &self.linear * x + &self.offset
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { linear: &self.linear * &other.linear, offset: &self.linear * &other.offset + &self.offset }
    }

    pub fn inverse(&self) -> Isometry {
        let lt = self.linear.transpose();
        let offset = -(&lt * &self.offset);
        Isometry { linear: lt, offset }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }
}

/// Infinitesimal generator field `x ↦ matrix·x + shift`.
#[derive(Debug, Clone)]
pub struct GeneratorField {
    pub matrix: DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl GeneratorField {
    pub fn at(&self, x: &Point) -> Point {
        &self.matrix * x + &self.shift
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ActionKind {
    /// Rotations of R² about `center`.
    PlanarRotation { center: [f64; 2] },
    /// Translations of R² along `direction`; the non-compact parameter is
    /// truncated to `[-half_range, half_range]` with uniform normalized measure.
    PlanarTranslation { direction: [f64; 2], half_range: f64 },
    /// Rotations of R³ about the axis through `axis_point` along `axis_direction`.
    AxialRotation { axis_point: [f64; 3], axis_direction: [f64; 3] },
    /// S¹×R: rotations about and shifts along an axis of R³.
    RotationTranslation { axis_point: [f64; 3], axis_direction: [f64; 3], half_range: f64 },
    /// Screw motions of R²×S¹ (coordinates x, y, z; y periodic, lifted to R):
    /// rotation by φ in the xz-plane combined with the shift y ↦ y + φ.
    Screw,
    /// All rotations of R³ about the origin.
    So3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HaarNode {
    pub param: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct GroupAction {
    kind: ActionKind,
    quadrature: Vec<HaarNode>,
}

fn unit3(v: [f64; 3]) -> Result<Vector3<f64>> {
    let v = Vector3::from(v);
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Argument("axis direction must be a non-zero finite vector".into()));
    }
    Ok(v / n)
}

fn unit2(v: [f64; 2]) -> Result<[f64; 2]> {
    let n = v[0].hypot(v[1]);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Argument("translation direction must be non-zero".into()));
    }
    Ok([v[0] / n, v[1] / n])
}

fn cross_matrix(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

fn to_dmatrix(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
}

fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

/// ZYZ Euler rotation `Rz(a) Ry(b) Rz(c)`.
fn euler_zyz(a: f64, b: f64, c: f64) -> Matrix3<f64> {
    let rz = |t: f64| Rotation3::from_axis_angle(&Vector3::z_axis(), t);
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), b);
    (rz(a) * ry * rz(c)).into_inner()
}

fn euler_zyz_from(m: &Matrix3<f64>) -> [f64; 3] {
    let b = m[(2, 2)].clamp(-1.0, 1.0).acos();
    if b.sin().abs() < 1e-12 {
        // gimbal lock: only a ± c is determined
        let a = m[(1, 0)].atan2(m[(0, 0)]);
        return [wrap_angle(a), b, 0.0];
    }
    let a = m[(1, 2)].atan2(m[(0, 2)]);
    let c = m[(2, 1)].atan2(-m[(2, 0)]);
    [wrap_angle(a), b, wrap_angle(c)]
}

fn circle_nodes(m: usize) -> Vec<f64> {
    (0..m).map(|j| TAU * j as f64 / m as f64).collect()
}

fn window_nodes(m: usize, half_range: f64) -> Vec<f64> {
    let h = 2.0 * half_range / m as f64;
    (0..m).map(|j| -half_range + (j as f64 + 0.5) * h).collect()
}

impl GroupAction {
    /// Builds the action with a Haar quadrature of `resolution` nodes per
    /// group-parameter axis.
    pub fn new(kind: ActionKind, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::Argument("Haar quadrature resolution must be positive".into()));
        }
        let m = resolution;
        let quadrature = match &kind {
            ActionKind::PlanarRotation { .. } | ActionKind::AxialRotation { .. } | ActionKind::Screw => {
                circle_nodes(m).into_iter().map(|t| HaarNode { param: vec![t], weight: 1.0 / m as f64 }).collect()
            }
            ActionKind::PlanarTranslation { half_range, .. } => {
                check_range(*half_range)?;
                window_nodes(m, *half_range)
                    .into_iter()
                    .map(|t| HaarNode { param: vec![t], weight: 1.0 / m as f64 })
                    .collect()
            }
            ActionKind::RotationTranslation { half_range, .. } => {
                check_range(*half_range)?;
                let w = 1.0 / (m * m) as f64;
                let mut nodes = Vec::with_capacity(m * m);
                for a in circle_nodes(m) {
                    for t in window_nodes(m, *half_range) {
                        nodes.push(HaarNode { param: vec![a, t], weight: w });
                    }
                }
                nodes
            }
            ActionKind::So3 => {
                let gl = GaussLegendre::new(m);
                let polar: Vec<(f64, f64)> = gl.on_interval(0.0, PI).map(|(b, w)| (b, w * b.sin())).collect();
                let total: f64 = polar.iter().map(|(_, w)| w).sum::<f64>() * (m * m) as f64;
                let mut nodes = Vec::with_capacity(m * m * m);
                for a in circle_nodes(m) {
                    for &(b, wb) in &polar {
                        for c in circle_nodes(m) {
                            nodes.push(HaarNode { param: vec![a, b, c], weight: wb / total });
                        }
                    }
                }
                nodes
            }
        };
        // validate direction vectors eagerly
        let action = GroupAction { kind, quadrature };
        action.generators()?;
        Ok(action)
    }

    /// Circle groups only: the uniform rule shifted by half a step, so the
    /// identity (and, for even `resolution`, the half turn) is not a node.
    pub fn staggered(kind: ActionKind, resolution: usize) -> Result<Self> {
        if !matches!(kind, ActionKind::PlanarRotation { .. } | ActionKind::AxialRotation { .. } | ActionKind::Screw) {
            return Err(Error::Unsupported("staggered quadrature is defined for circle groups".into()));
        }
        let mut action = GroupAction::new(kind, resolution)?;
        let half = PI / resolution as f64;
        for node in &mut action.quadrature {
            node.param[0] += half;
        }
        Ok(action)
    }

    pub fn kind(&self) -> &ActionKind {
        &self.kind
    }

    pub fn quadrature(&self) -> &[HaarNode] {
        &self.quadrature
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ActionKind::PlanarRotation { .. } | ActionKind::PlanarTranslation { .. } => 2,
            _ => 3,
        }
    }

    pub fn param_dim(&self) -> usize {
        match self.kind {
            ActionKind::RotationTranslation { .. } => 2,
            ActionKind::So3 => 3,
            _ => 1,
        }
    }

    pub fn identity_param(&self) -> Vec<f64> {
        vec![0.0; self.param_dim()]
    }

    /// The isometry for group parameter `param`.
    pub fn element(&self, param: &[f64]) -> Result<Isometry> {
        if param.len() != self.param_dim() {
            return Err(Error::Argument(format!(
                "group parameter has {} components, expected {}",
                param.len(),
                self.param_dim()
            )));
        }
        Ok(match &self.kind {
            ActionKind::PlanarRotation { center } => {
                let (s, c) = param[0].sin_cos();
                let linear = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
                let ctr = DVector::from_row_slice(center);
                let offset = &ctr - &linear * &ctr;
                Isometry { linear, offset }
            }
            ActionKind::PlanarTranslation { direction, .. } => {
                let d = unit2(*direction)?;
                Isometry {
                    linear: DMatrix::identity(2, 2),
                    offset: DVector::from_row_slice(&[d[0] * param[0], d[1] * param[0]]),
                }
            }
            ActionKind::AxialRotation { axis_point, axis_direction } => {
                axial(axis_point, axis_direction, param[0], 0.0)?
            }
            ActionKind::RotationTranslation { axis_point, axis_direction, .. } => {
                axial(axis_point, axis_direction, param[0], param[1])?
            }
            ActionKind::Screw => {
                let (s, c) = param[0].sin_cos();
                Isometry {
                    linear: DMatrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c]),
                    offset: DVector::from_row_slice(&[0.0, param[0], 0.0]),
                }
            }
            ActionKind::So3 => {
                Isometry { linear: to_dmatrix(&euler_zyz(param[0], param[1], param[2])), offset: DVector::zeros(3) }
            }
        })
    }

    pub fn act(&self, param: &[f64], x: &Point) -> Result<Point> {
        Ok(self.element(param)?.apply(x))
    }

    /// Group product `g·h` in parameter form.
    pub fn compose(&self, g: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        if g.len() != self.param_dim() || h.len() != self.param_dim() {
            return Err(Error::Argument("group parameter dimension mismatch".into()));
        }
        Ok(match self.kind {
            ActionKind::PlanarRotation { .. } | ActionKind::AxialRotation { .. } => {
                vec![wrap_angle(g[0] + h[0])]
            }
            ActionKind::PlanarTranslation { .. } | ActionKind::Screw => vec![g[0] + h[0]],
            ActionKind::RotationTranslation { .. } => vec![wrap_angle(g[0] + h[0]), g[1] + h[1]],
            ActionKind::So3 => {
                let m = euler_zyz(g[0], g[1], g[2]) * euler_zyz(h[0], h[1], h[2]);
                euler_zyz_from(&m).to_vec()
            }
        })
    }

    /// Fields of the Lie algebra basis, one per parameter axis.
    pub fn generators(&self) -> Result<Vec<GeneratorField>> {
        Ok(match &self.kind {
            ActionKind::PlanarRotation { center } => {
                let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
                let shift = -(&a * DVector::from_row_slice(center));
                vec![GeneratorField { matrix: a, shift }]
            }
            ActionKind::PlanarTranslation { direction, .. } => {
                let d = unit2(*direction)?;
                vec![GeneratorField { matrix: DMatrix::zeros(2, 2), shift: DVector::from_row_slice(&d) }]
            }
            ActionKind::AxialRotation { axis_point, axis_direction } => {
                vec![rotation_field(axis_point, axis_direction)?]
            }
            ActionKind::RotationTranslation { axis_point, axis_direction, .. } => {
                let u = unit3(*axis_direction)?;
                vec![
                    rotation_field(axis_point, axis_direction)?,
                    GeneratorField { matrix: DMatrix::zeros(3, 3), shift: DVector::from_row_slice(u.as_slice()) },
                ]
            }
            ActionKind::Screw => vec![GeneratorField {
                matrix: DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]),
                shift: DVector::from_row_slice(&[0.0, 1.0, 0.0]),
            }],
            ActionKind::So3 => [Vector3::x(), Vector3::y(), Vector3::z()]
                .iter()
                .map(|a| GeneratorField { matrix: to_dmatrix(&cross_matrix(a)), shift: DVector::zeros(3) })
                .collect(),
        })
    }

    /// Draws a parameter from the (normalized, window-truncated) Haar measure.
    pub fn sample_haar<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.kind {
            ActionKind::PlanarRotation { .. } | ActionKind::AxialRotation { .. } | ActionKind::Screw => {
                vec![rng.random::<f64>() * TAU]
            }
            ActionKind::PlanarTranslation { half_range, .. } => {
                vec![(2.0 * rng.random::<f64>() - 1.0) * half_range]
            }
            ActionKind::RotationTranslation { half_range, .. } => {
                vec![rng.random::<f64>() * TAU, (2.0 * rng.random::<f64>() - 1.0) * half_range]
            }
            ActionKind::So3 => {
                let a = rng.random::<f64>() * TAU;
                let b = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
                let c = rng.random::<f64>() * TAU;
                vec![a, b, c]
            }
        }
    }
}

fn check_range(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument("translation window half-range must be positive".into()))
    }
}

fn axial(point: &[f64; 3], dir: &[f64; 3], angle: f64, shift: f64) -> Result<Isometry> {
    let u = unit3(*dir)?;
    let r = Rotation3::from_axis_angle(&Unit::new_unchecked(u), angle).into_inner();
    let p = Vector3::from(*point);
    let off = p - r * p + u * shift;
    Ok(Isometry { linear: to_dmatrix(&r), offset: DVector::from_row_slice(off.as_slice()) })
}

fn rotation_field(point: &[f64; 3], dir: &[f64; 3]) -> Result<GeneratorField> {
    let u = unit3(*dir)?;
    let k = cross_matrix(&u);
    let p = Vector3::from(*point);
    let shift = -(k * p);
    Ok(GeneratorField { matrix: to_dmatrix(&k), shift: DVector::from_row_slice(shift.as_slice()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_kinds() -> Vec<ActionKind> {
        vec![
            ActionKind::PlanarRotation { center: [0.3, -0.2] },
            ActionKind::PlanarTranslation { direction: [1.0, 2.0], half_range: 3.0 },
            ActionKind::AxialRotation { axis_point: [0.1, 0.0, 0.5], axis_direction: [0.0, 1.0, 1.0] },
            ActionKind::RotationTranslation { axis_point: [0.0; 3], axis_direction: [0.0, 0.0, 1.0], half_range: 2.0 },
            ActionKind::Screw,
            ActionKind::So3,
        ]
    }

    #[test]
    fn haar_weights_positive_and_normalized() {
        for kind in all_kinds() {
            let g = GroupAction::new(kind.clone(), 7).unwrap();
            let total: f64 = g.quadrature().iter().map(|n| n.weight).sum();
            assert!((total - 1.0).abs() < 1e-13, "{kind:?}");
            assert!(g.quadrature().iter().all(|n| n.weight > 0.0));
        }
    }

    #[test]
    fn isometry_and_composition_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in all_kinds() {
            let g = GroupAction::new(kind.clone(), 4).unwrap();
            let n = g.ambient_dim();
            for _ in 0..50 {
                let a = g.sample_haar(&mut rng);
                let b = g.sample_haar(&mut rng);
                let x = Point::from_fn(n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
                let y = Point::from_fn(n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
                let gx = g.act(&a, &x).unwrap();
                let gy = g.act(&a, &y).unwrap();
                assert!(((&gx - &gy).norm() - (&x - &y).norm()).abs() < 1e-12, "{kind:?}");
                let lhs = g.act(&a, &g.act(&b, &x).unwrap()).unwrap();
                let rhs = g.act(&g.compose(&a, &b).unwrap(), &x).unwrap();
                assert!((lhs - rhs).norm() < 1e-10, "{kind:?}");
            }
        }
    }

    #[test]
    fn generators_are_derivatives_of_the_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in all_kinds() {
            let g = GroupAction::new(kind.clone(), 3).unwrap();
            let n = g.ambient_dim();
            let x = Point::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
            let h = 1e-6;
            if kind == ActionKind::So3 {
                // Euler charts are singular at the identity; use one-parameter subgroups
                for (k, field) in g.generators().unwrap().iter().enumerate() {
                    let axis = Vector3::ith(k, 1.0);
                    let x3 = Vector3::new(x[0], x[1], x[2]);
                    let fd = (Rotation3::from_scaled_axis(axis * h) * x3 - Rotation3::from_scaled_axis(axis * -h) * x3)
                        / (2.0 * h);
                    let v = field.at(&x);
                    assert!((fd - Vector3::new(v[0], v[1], v[2])).norm() < 1e-8, "So3 axis {k}");
                }
                continue;
            }
            for (k, field) in g.generators().unwrap().iter().enumerate() {
                let mut plus = g.identity_param();
                let mut minus = g.identity_param();
                plus[k] += h;
                minus[k] -= h;
                let fd = (g.act(&plus, &x).unwrap() - g.act(&minus, &x).unwrap()) / (2.0 * h);
                assert!((fd - field.at(&x)).norm() < 1e-8, "{kind:?} axis {k}");
            }
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(GroupAction::new(ActionKind::Screw, 0).is_err());
        assert!(
            GroupAction::new(ActionKind::AxialRotation { axis_point: [0.0; 3], axis_direction: [0.0; 3] }, 4).is_err()
        );
        let g = GroupAction::new(ActionKind::So3, 2).unwrap();
        assert!(g.element(&[0.0]).is_err());
    }
}
