//! Built-in localization scenarios and the report generator.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use serde::{Deserialize, Serialize};

use super::action::{ActionKind, GroupAction, Point};
use super::localization::{
    classify_point, condition1_sweep, default_tol, ChartBox, Classification, Component, Condition1Sweep, SetDescriptor,
    DEFAULT_MC_SAMPLES,
};
use super::submanifold::{Submanifold, SubmanifoldKind};
use crate::error::{Error, Result};
use crate::numerics::lin_space;

/// Sampling of one chart axis. Periodic axes drop the right endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    #[serde(default)]
    pub periodic: bool,
}

impl Axis {
    fn closed(lo: f64, hi: f64, count: usize) -> Self {
        Axis { lo, hi, count, periodic: false }
    }

    fn periodic(period: f64, count: usize) -> Self {
        Axis { lo: 0.0, hi: period, count, periodic: true }
    }

    fn samples(&self) -> Vec<f64> {
        if self.periodic {
            (0..self.count).map(|j| self.lo + (self.hi - self.lo) * j as f64 / self.count as f64).collect()
        } else {
            lin_space(self.lo, self.hi, self.count)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub x_g: SetDescriptor,
    pub x_tilde: SetDescriptor,
}

/// A localization scenario; this is also the JSON config format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub action: ActionKind,
    /// Haar quadrature nodes per group-parameter axis.
    pub resolution: usize,
    pub submanifold: SubmanifoldKind,
    pub sampling: Vec<Axis>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Zone Z ⊂ X̃_G \ X_G used for the Condition 1 estimate.
    #[serde(default)]
    pub zone: Option<ChartBox>,
    #[serde(default)]
    pub expected: Option<Expected>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledPoint {
    pub chart: Vec<f64>,
    pub point: Vec<f64>,
    pub class: Classification,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub scenario: String,
    pub tol: f64,
    pub points: Vec<SampledPoint>,
    pub x_g: SetDescriptor,
    pub x_tilde: SetDescriptor,
    /// `None` when the scenario has no expected sets.
    pub matches_expected: Option<bool>,
    pub condition1: Option<Condition1Sweep>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Strictly decreasing; empty skips the Condition 1 sweep.
    pub eps: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { eps: (1..=8).map(|k| 0.5f64.powi(k)).collect(), samples: DEFAULT_MC_SAMPLES, seed: 0x5eed }
    }
}

/// Tolerance used when comparing descriptors with expectations.
pub const DESCRIPTOR_TOL: f64 = 1e-6;

pub const SCENARIO_IDS: [&str; 9] = [
    "rotation-line-through-origin",
    "rotation-line-off-origin",
    "translation-circle",
    "axial-rotation-line",
    "axial-rotation-tangent-circle",
    "axial-rotation-tilted-plane",
    "rotation-translation-sphere",
    "so3-line",
    "translation-rounded-rectangle",
];

fn point(at: &[f64]) -> Component {
    Component::Point { at: at.to_vec() }
}

fn line(point: &[f64], direction: &[f64]) -> Component {
    Component::Line { point: point.to_vec(), direction: direction.to_vec(), extent: [0.0, 0.0] }
}

fn parts(p: Vec<Component>) -> SetDescriptor {
    SetDescriptor::Components { parts: p }
}

fn expect(x_g: SetDescriptor, x_tilde: SetDescriptor) -> Option<Expected> {
    Some(Expected { x_g, x_tilde })
}

const HALF_RANGE: f64 = 4.0;

/// Short names accepted in place of full scenario ids.
pub const SCENARIO_ALIASES: [(&str, &str); 4] = [
    ("tilted-plane", "axial-rotation-tilted-plane"),
    ("tangent-circle", "axial-rotation-tangent-circle"),
    ("sphere", "rotation-translation-sphere"),
    ("rounded-rectangle", "translation-rounded-rectangle"),
];

/// Built-in scenario by id or alias.
pub fn scenario(id: &str) -> Result<Scenario> {
    let id = SCENARIO_ALIASES.iter().find(|(a, _)| *a == id).map_or(id, |(_, full)| full);
    let alpha = FRAC_PI_4;
    let (sa, ca) = alpha.sin_cos();
    let origin2 = [0.0, 0.0];
    let rotation2 = ActionKind::PlanarRotation { center: origin2 };
    let axial = ActionKind::AxialRotation { axis_point: [0.0; 3], axis_direction: [0.0, 0.0, 1.0] };
    let translation2 = ActionKind::PlanarTranslation { direction: [1.0, 0.0], half_range: HALF_RANGE };
    let s = match id {
        "rotation-line-through-origin" => Scenario {
            id: id.into(),
            action: rotation2,
            resolution: 64,
            submanifold: SubmanifoldKind::Affine { origin: vec![0.0, 0.0], basis: vec![vec![1.0, 0.0]] },
            sampling: vec![Axis::closed(-2.0, 2.0, 41)],
            tol: None,
            zone: None,
            expected: expect(parts(vec![point(&[0.0, 0.0])]), parts(vec![point(&[0.0, 0.0])])),
        },
        "rotation-line-off-origin" => Scenario {
            id: id.into(),
            action: rotation2,
            resolution: 64,
            submanifold: SubmanifoldKind::Affine { origin: vec![0.0, 1.0], basis: vec![vec![1.0, 0.0]] },
            sampling: vec![Axis::closed(-2.0, 2.0, 41)],
            tol: None,
            zone: Some(ChartBox::point(&[0.0])),
            expected: expect(SetDescriptor::Empty, parts(vec![point(&[0.0, 1.0])])),
        },
        "translation-circle" => Scenario {
            id: id.into(),
            action: translation2,
            resolution: 64,
            submanifold: SubmanifoldKind::Sphere { center: vec![0.0, 0.0], radius: 1.0 },
            sampling: vec![Axis::periodic(TAU, 48)],
            tol: None,
            zone: Some(ChartBox::point(&[FRAC_PI_2])),
            expected: expect(SetDescriptor::Empty, parts(vec![point(&[0.0, 1.0]), point(&[0.0, -1.0])])),
        },
        "axial-rotation-line" => Scenario {
            id: id.into(),
            action: axial,
            resolution: 64,
            submanifold: SubmanifoldKind::Affine { origin: vec![0.0; 3], basis: vec![vec![sa, 0.0, ca]] },
            sampling: vec![Axis::closed(-2.0, 2.0, 41)],
            tol: None,
            zone: None,
            expected: expect(parts(vec![point(&[0.0; 3])]), parts(vec![point(&[0.0; 3])])),
        },
        "axial-rotation-tangent-circle" => Scenario {
            id: id.into(),
            action: axial,
            resolution: 64,
            submanifold: SubmanifoldKind::Circle {
                center: vec![1.0, 0.0, 0.0],
                axes: [vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]],
                radius: 1.0,
            },
            sampling: vec![Axis::periodic(TAU, 48)],
            tol: None,
            zone: None,
            expected: expect(parts(vec![point(&[0.0; 3])]), parts(vec![point(&[0.0; 3])])),
        },
        "axial-rotation-tilted-plane" => Scenario {
            id: id.into(),
            action: axial,
            resolution: 64,
            // -x sinα + z cosα = 0: the normal makes angle α with the axis
            submanifold: SubmanifoldKind::Affine {
                origin: vec![0.0; 3],
                basis: vec![vec![ca, 0.0, sa], vec![0.0, 1.0, 0.0]],
            },
            sampling: vec![Axis::closed(-1.0, 1.0, 21), Axis::closed(-1.0, 1.0, 21)],
            tol: None,
            zone: None,
            expected: expect(parts(vec![point(&[0.0; 3])]), parts(vec![line(&[0.0; 3], &[ca, 0.0, sa])])),
        },
        "rotation-translation-sphere" => Scenario {
            id: id.into(),
            action: ActionKind::RotationTranslation {
                axis_point: [0.0; 3],
                axis_direction: [0.0, 0.0, 1.0],
                half_range: HALF_RANGE,
            },
            resolution: 16,
            submanifold: SubmanifoldKind::Sphere { center: vec![0.0; 3], radius: 1.0 },
            sampling: vec![Axis::closed(PI / 12.0, 11.0 * PI / 12.0, 11), Axis::periodic(TAU, 24)],
            tol: None,
            zone: Some(ChartBox { lo: vec![FRAC_PI_2, 0.0], hi: vec![FRAC_PI_2, TAU] }),
            expected: expect(
                SetDescriptor::Empty,
                parts(vec![Component::Circle { center: vec![0.0; 3], radius: 1.0 }]),
            ),
        },
        "so3-line" => {
            let d = 1.0 / 3f64.sqrt();
            Scenario {
                id: id.into(),
                action: ActionKind::So3,
                resolution: 8,
                submanifold: SubmanifoldKind::Affine { origin: vec![0.0; 3], basis: vec![vec![d, d, d]] },
                sampling: vec![Axis::closed(-2.0, 2.0, 41)],
                tol: None,
                zone: None,
                expected: expect(parts(vec![point(&[0.0; 3])]), parts(vec![point(&[0.0; 3])])),
            }
        }
        "translation-rounded-rectangle" => {
            let sub = SubmanifoldKind::RoundedRectangle {
                center: [0.0, 0.0],
                half_width: 2.0,
                half_height: 1.0,
                corner_radius: 0.5,
            };
            let built = Submanifold::new(sub.clone())?;
            let period = built.periods()[0].expect("closed curve");
            let top = built.top_side_length().expect("rounded rectangle");
            Scenario {
                id: id.into(),
                action: translation2,
                resolution: 64,
                submanifold: sub,
                sampling: vec![Axis::periodic(period, 112)],
                tol: None,
                zone: Some(ChartBox { lo: vec![0.0], hi: vec![top] }),
                expected: expect(
                    SetDescriptor::Empty,
                    parts(vec![line(&[0.0, 1.0], &[1.0, 0.0]), line(&[0.0, -1.0], &[1.0, 0.0])]),
                ),
            }
        }
        other => return Err(Error::UnknownScenario(other.into())),
    };
    Ok(s)
}

fn chart_grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        let s = axis.samples();
        out = out
            .into_iter()
            .flat_map(|p| {
                s.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    out
}

/// 1.5 × the largest nearest-neighbour spacing of the sampled points.
fn link_length(points: &[Point]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        let nearest = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| (p - q).norm())
            .fold(f64::INFINITY, f64::min);
        if nearest.is_finite() {
            worst = worst.max(nearest);
        }
    }
    1.5 * worst
}

pub fn run_scenario(s: &Scenario, opts: &ReportOptions) -> Result<LocalizationReport> {
    let action = GroupAction::new(s.action.clone(), s.resolution)?;
    let sub = Submanifold::new(s.submanifold.clone())?;
    if s.sampling.len() != sub.dim() {
        return Err(Error::Argument(format!(
            "scenario samples {} chart axes, X has dimension {}",
            s.sampling.len(),
            sub.dim()
        )));
    }
    if s.sampling.iter().any(|a| a.count == 0 || !(a.hi >= a.lo)) {
        return Err(Error::Argument("every sampling axis needs count ≥ 1 and lo ≤ hi".into()));
    }
    let tol = s.tol.unwrap_or_else(|| default_tol(&sub));
    let mut points = Vec::new();
    for t in chart_grid(&s.sampling) {
        let x = sub.chart(&t)?;
        let class = classify_point(&action, &sub, &x, tol)?;
        points.push(SampledPoint { chart: t, point: x.as_slice().to_vec(), class });
    }
    let xs: Vec<Point> = points.iter().map(|p| Point::from_row_slice(&p.point)).collect();
    let link = link_length(&xs);
    let select = |keep: &dyn Fn(Classification) -> bool| -> Vec<Point> {
        points.iter().zip(&xs).filter(|(p, _)| keep(p.class)).map(|(_, x)| x.clone()).collect()
    };
    let x_g = SetDescriptor::fit(&select(&|c| c == Classification::InXG), xs.len(), link);
    let x_tilde = SetDescriptor::fit(&select(&|c| c != Classification::Neither), xs.len(), link);
    let matches_expected =
        s.expected.as_ref().map(|e| e.x_g.matches(&x_g, DESCRIPTOR_TOL) && e.x_tilde.matches(&x_tilde, DESCRIPTOR_TOL));
    let condition1 = match (&s.zone, opts.eps.is_empty()) {
        (Some(zone), false) => Some(condition1_sweep(&action, &sub, Some(zone), &opts.eps, opts.samples, opts.seed)?),
        _ => None,
    };
    Ok(LocalizationReport { scenario: s.id.clone(), tol, points, x_g, x_tilde, matches_expected, condition1 })
}

pub fn catalog_report(id: &str, opts: &ReportOptions) -> Result<LocalizationReport> {
    run_scenario(&scenario(id)?, opts)
}
