use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use gtrace_core::diagnostics::singular_spectrum;
use gtrace_core::geometry::{run_scenario, scenario, ActionKind, GroupAction, ReportOptions, Scenario, Submanifold};
use gtrace_core::mellin::{
    analyticity_and_decay, operator_norm_k, MellinOptions, Rectangle, SymbolQuadrature, TiltConfig,
};
use gtrace_core::numerics::{log_log_slope, log_space};
use gtrace_core::operator::{assemble_trace, container, FourierGrid, GOperatorSpec, Symbol, TraceOptions};
use gtrace_core::screw::{
    continuity_scan, fiber_trace, halving_ratios, schur_bounds, schur_majorant, LineGrid, DISCONTINUITY_RATIO,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, ScenarioConfig};
use crate::error::CliError;
use crate::range::RangeSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Named files produced by one run, in write order.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<(String, Vec<u8>)>,
}

impl RunOutput {
    fn push(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    command: Command,
    version: &'static str,
    config_hash: String,
    /// Without the output directory, so reports do not depend on where they land.
    config: &'a ScenarioConfig,
    result: Value,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let command = cfg.command()?;
    let mut out = RunOutput::default();
    let result = match command {
        Command::Catalog => catalog(cfg, &mut out)?,
        Command::Trace => trace(cfg, &mut out)?,
        Command::Mellin => mellin(cfg, &mut out)?,
        Command::Screw => screw(cfg, &mut out)?,
    };
    let placed = ScenarioConfig { out: None, ..cfg.clone() };
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        version: gtrace_core::VERSION,
        config_hash: cfg.hash(),
        config: &placed,
        result,
    };
    let mut json = serde_json::to_vec_pretty(&env).expect("envelope serializes");
    json.push(b'\n');
    out.files.insert(0, (format!("{}.json", command.name()), json));
    Ok(out)
}

fn resolve_scenario(cfg: &ScenarioConfig) -> Result<Scenario, CliError> {
    match (&cfg.inline_scenario, &cfg.scenario) {
        (Some(_), Some(_)) => Err(usage("give either scenario or inline_scenario, not both")),
        (Some(s), None) => Ok(s.clone()),
        (None, Some(id)) => Ok(scenario(id)?),
        (None, None) => Err(usage("this command needs --scenario or an inline_scenario in the config")),
    }
}

fn catalog(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<Value, CliError> {
    let sc = resolve_scenario(cfg)?;
    let mut opts = ReportOptions::default();
    if let Some(n) = cfg.samples {
        opts.samples = n;
    }
    if sc.zone.is_some() {
        opts.seed = cfg
            .seed
            .ok_or_else(|| usage(format!("scenario `{}` runs a Monte Carlo sweep; --seed is required", sc.id)))?;
    } else {
        opts.eps.clear();
    }
    let report = run_scenario(&sc, &opts)?;
    if let Some(c1) = &report.condition1 {
        let rows = c1.estimates.iter().map(|e| [num(e.eps), num(e.volume), num(e.std_error)]);
        out.push("catalog-condition1.csv", csv_bytes(&["eps", "volume", "std_error"], rows)?);
    }
    Ok(to_value(&report))
}

fn trace(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<Value, CliError> {
    let sc = resolve_scenario(cfg)?;
    let sub = Submanifold::new(sc.submanifold.clone())?;
    let modes = cfg.resolution.unwrap_or(16);
    let s = cfg.s.unwrap_or(-0.5);
    let grid = FourierGrid::new(sub.dim(), modes, 8.0, true)?;
    let action = match sc.action {
        ActionKind::PlanarRotation { .. } | ActionKind::AxialRotation { .. } | ActionKind::Screw => {
            GroupAction::staggered(sc.action.clone(), 4 * modes)?
        }
        _ => GroupAction::new(sc.action.clone(), sc.resolution)?,
    };
    let spec = GOperatorSpec::new(action, Symbol::InverseLaplacian);
    let op = assemble_trace(&spec, &sub, &grid, s, &TraceOptions { threads: Some(1), ..Default::default() })?;
    let profile = singular_spectrum(&op, true)?;
    out.push("trace.gtop", container::encode(&op));
    let rows = profile.values.iter().enumerate().map(|(k, v)| [k.to_string(), num(*v)]);
    out.push("trace-spectrum.csv", csv_bytes(&["k", "singular_value"], rows)?);
    Ok(json!({
        "scenario": sc.id,
        "operator": to_value(&container::metadata(&op)),
        "spectrum": {
            "leading": profile.values.iter().take(10).collect::<Vec<_>>(),
            "tail_exponent": profile.tail_exponent,
            "weighted": profile.weighted,
        },
    }))
}

fn tilt(cfg: &ScenarioConfig) -> Result<TiltConfig, CliError> {
    Ok(TiltConfig::new(cfg.alpha.unwrap_or(FRAC_PI_4), cfg.s.unwrap_or(-0.5))?)
}

/// Slope over the points selected by `keep`, when there are at least two.
fn regime_slope(points: &[(f64, f64)], keep: impl Fn(f64) -> bool, x: impl Fn(f64) -> f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().filter(|(r, _)| keep(*r)).map(|&(r, n)| (x(r), n)).unzip();
    (xs.len() >= 2).then(|| log_log_slope(&xs, &ys))
}

fn mellin(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<Value, CliError> {
    let c = tilt(cfg)?;
    match cfg.sweep.as_deref().unwrap_or("knorm") {
        "knorm" => {
            let rhos = cfg.rho.unwrap_or(RangeSpec::new(1e-3, 1e3, None)).logarithmic(25).map_err(usage)?;
            let m = cfg.resolution.unwrap_or(64);
            let mut points = Vec::new();
            let mut skipped = Vec::new();
            for rho in rhos {
                if (rho - 1.0).abs() < 1e-12 {
                    skipped.push(rho);
                    continue;
                }
                points.push((rho, operator_norm_k(&c, rho, m)?));
            }
            let slopes = [
                ("rho<=0.1", regime_slope(&points, |r| r <= 0.1, |r| r)),
                ("rho>=10", regime_slope(&points, |r| r >= 10.0, |r| r)),
                ("|rho-1|<=0.01", regime_slope(&points, |r| (r - 1.0).abs() <= 1e-2, |r| (r - 1.0).abs())),
            ];
            let mut rows: Vec<[String; 2]> = points.iter().map(|&(r, n)| [num(r), num(n)]).collect();
            rows.extend(slopes.iter().filter_map(|(k, v)| v.map(|v| [format!("slope[{k}]"), num(v)])));
            out.push("mellin-knorm.csv", csv_bytes(&["rho", "norm"], rows)?);
            Ok(json!({
                "sweep": "knorm",
                "m": m,
                "points": points.iter().map(|&(rho, norm)| json!({"rho": rho, "norm": norm})).collect::<Vec<_>>(),
                "skipped": skipped,
                "slopes": slopes.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
            }))
        }
        "decay" => {
            let ts = cfg.t.unwrap_or(RangeSpec::new(0.0, 40.0, None)).linear(9);
            let sigma = cfg.sigma.unwrap_or(-0.5);
            let opts = MellinOptions { m: cfg.resolution.unwrap_or(32), ..Default::default() };
            let quad = SymbolQuadrature::new(&c, opts)?;
            let rect = Rectangle { re: (sigma - 0.5, sigma + 0.5), im: (-1.0, 1.0) };
            let report = analyticity_and_decay(&quad, rect, 32, sigma, &ts)?;
            let rows = report.decay.iter().map(|d| [num(d.t), num(d.norm), num(d.ratio)]);
            out.push("mellin-decay.csv", csv_bytes(&["t", "norm", "ratio"], rows)?);
            Ok(json!({ "sweep": "decay", "m": opts.m, "report": to_value(&report) }))
        }
        other => Err(usage(format!("unknown mellin sweep `{other}` (knorm or decay)"))),
    }
}

fn screw(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<Value, CliError> {
    let s = cfg.s.unwrap_or(-0.5);
    match cfg.sweep.as_deref().unwrap_or("schur") {
        "schur" => {
            let phis = cfg.phi.unwrap_or(RangeSpec::new(1e-3, FRAC_PI_2, None)).logarithmic(13).map_err(usage)?;
            let half = log_space(1e-3, 1e3, 25);
            let points: Vec<f64> = half.iter().rev().map(|x| -x).chain([0.0]).chain(half.iter().copied()).collect();
            let rows = schur_bounds(s, &points, &phis)?;
            let csv = rows.iter().map(|r| [num(r.phi), num(r.over_z), num(r.over_xi)]);
            out.push("screw-schur.csv", csv_bytes(&["phi", "over_z", "over_xi"], csv)?);
            Ok(json!({ "sweep": "schur", "s": s, "rows": to_value(&rows), "majorant": schur_majorant(s)? }))
        }
        "continuity" => {
            let phis = cfg.phi.unwrap_or(RangeSpec::new(FRAC_PI_4, 3.0 * FRAC_PI_4, None)).linear(11);
            let eta = cfg.eta.map_or(1.0, |r| r.lo);
            let n = cfg.resolution.unwrap_or(128);
            let grid = LineGrid::graded(n, 1e3)?;
            let rows = continuity_scan(eta, s, &phis, &grid)?;
            let ratios = halving_ratios(&rows);
            let csv = rows.iter().map(|r| [num(r.from), num(r.to), num(r.difference)]);
            out.push("screw-continuity.csv", csv_bytes(&["from", "to", "difference"], csv)?);
            Ok(json!({
                "sweep": "continuity",
                "eta": eta,
                "n": n,
                "rows": to_value(&rows),
                "ratios": ratios,
                "discontinuity_signature": !ratios.is_empty() && ratios.iter().all(|r| *r > DISCONTINUITY_RATIO),
            }))
        }
        "fiber" => {
            let etas: Vec<i64> =
                cfg.eta.unwrap_or(RangeSpec::new(0.0, 8.0, None)).linear(9).iter().map(|e| e.round() as i64).collect();
            let n = cfg.resolution.unwrap_or(64);
            let grid = LineGrid::graded(n, 1e3)?;
            let top = etas.iter().map(|e| e.unsigned_abs() as usize).max().unwrap_or(0);
            let nodes = (4 * (top + 1)).max(32);
            let mut rows = Vec::with_capacity(etas.len());
            for &eta in &etas {
                rows.push((eta, fiber_trace(eta, nodes, s, &grid, 1.0)?.weighted_norm()));
            }
            let csv = rows.iter().map(|&(e, v)| [e.to_string(), num(v)]);
            out.push("screw-fiber.csv", csv_bytes(&["eta", "norm"], csv)?);
            Ok(json!({
                "sweep": "fiber",
                "n": n,
                "angles": nodes,
                "rows": rows.iter().map(|&(eta, norm)| json!({"eta": eta, "norm": norm})).collect::<Vec<_>>(),
            }))
        }
        other => Err(usage(format!("unknown screw sweep `{other}` (schur, continuity or fiber)"))),
    }
}
