//! Group actions, submanifolds, and the localization sets X_G ⊂ X̃_G.

pub mod action;
pub mod catalog;
pub mod localization;
pub mod submanifold;

pub use action::{ActionKind, GroupAction, HaarNode, Isometry, Point};
pub use catalog::{
    catalog_report, run_scenario, scenario, LocalizationReport, ReportOptions, Scenario, SCENARIO_ALIASES, SCENARIO_IDS,
};
pub use localization::{classify_point, condition1_sweep, condition1_volume, ChartBox, Classification, SetDescriptor};
pub use submanifold::{Submanifold, SubmanifoldKind};
