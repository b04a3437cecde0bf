//! Run reports, run configuration files, and plot-ready curve tables.
//!
//! Reports are JSON. Polynomial coefficients are emitted in the scaled
//! coordinate `s = (t - offset) / scale` together with the transform, so
//! consumers can evaluate in either coordinate. Curve tables are CSV with one
//! header row; cells that are undefined at a given time (measurements between
//! sample times, bands outside the prediction interval) are left empty.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::UncertaintyBoundary;
use crate::collision::min_distance_to_region;
use crate::error::Result;
use crate::gp::ObservationSet;
use crate::kernels::{KernelParams, TimeInterval};
use crate::scenario::{CandidateOutcome, ObstaclePath, ScenarioRun, ScenarioSpec};

pub const DEFAULT_GRID_RESOLUTION: usize = 200;

/// Affine transform between report coordinates and time:
/// `t = offset + scale * s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordTransform {
    pub offset: f64,
    pub scale: f64,
}

/// Polynomial form of one axis boundary, in the scaled coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSummary {
    pub horizon: TimeInterval,
    pub transform: CoordTransform,
    pub mean_coeffs: Vec<f64>,
    pub var_coeffs: Vec<f64>,
}

impl AxisSummary {
    pub fn from_boundary(b: &UncertaintyBoundary) -> Self {
        let horizon = *b.horizon();
        let transform = CoordTransform {
            offset: horizon.start,
            scale: horizon.length(),
        };
        let to_scaled = |p: &crate::poly::Polynomial, len: usize| -> Vec<f64> {
            let mut coeffs = p
                .compose_affine(transform.scale, transform.offset)
                .coeffs()
                .to_vec();
            coeffs.resize(len, 0.0);
            coeffs
        };
        Self {
            horizon,
            transform,
            mean_coeffs: to_scaled(b.mean(), 4),
            var_coeffs: to_scaled(b.variance(), 7),
        }
    }

    /// Boundary mean at a time, evaluated through the scaled coefficients.
    pub fn mean_at(&self, t: f64) -> f64 {
        let s = (t - self.transform.offset) / self.transform.scale;
        self.mean_coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * s + c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub kernel: KernelParams,
    pub delta_safe: f64,
    pub band_scale: f64,
    pub t_start: f64,
    pub t_obs_end: f64,
    pub t_intent: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub params: ReportParams,
    pub axis_x: AxisSummary,
    pub axis_y: AxisSummary,
    pub candidates: Vec<CandidateOutcome>,
}

impl Report {
    pub fn from_run(run: &ScenarioRun, band_scale: f64) -> Self {
        let spec = &run.spec;
        Report {
            scenario: spec.kind.to_string(),
            seed: Some(spec.rng_seed),
            params: ReportParams {
                kernel: spec.kernel,
                delta_safe: spec.delta_safe,
                band_scale,
                t_start: spec.t_start,
                t_obs_end: spec.t_obs_end,
                t_intent: spec.t_intent,
                n_samples: spec.n_samples,
            },
            axis_x: AxisSummary::from_boundary(&run.boundary_x),
            axis_y: AxisSummary::from_boundary(&run.boundary_y),
            candidates: run.outcomes.clone(),
        }
    }

    pub fn any_collision(&self) -> bool {
        self.candidates.iter().any(|c| c.report.verdict)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Configuration for a `simulate` run: a scenario plus output options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    #[serde(default = "default_grid")]
    pub grid_resolution: usize,
    #[serde(default = "default_band_scale")]
    pub band_scale: f64,
}

/// Configuration for a `check` run: observations and intention supplied
/// directly, no simulation. Velocities are required by the joint model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub kernel: KernelParams,
    pub obs_x: ObservationSet,
    pub obs_y: ObservationSet,
    pub t_intent: f64,
    pub intent_x: crate::scenario::IntentionParams,
    pub intent_y: crate::scenario::IntentionParams,
    /// Start of the prediction horizon; defaults to the last observation time.
    #[serde(default)]
    pub horizon_start: Option<f64>,
    pub delta_safe: f64,
    pub candidates: Vec<crate::scenario::Candidate>,
    #[serde(default = "default_grid")]
    pub grid_resolution: usize,
    #[serde(default = "default_band_scale")]
    pub band_scale: f64,
}

fn default_grid() -> usize {
    DEFAULT_GRID_RESOLUTION
}

fn default_band_scale() -> f64 {
    crate::boundary::DEFAULT_BAND_SCALE
}

pub fn read_run_config(path: &Path) -> Result<RunConfig> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

pub fn read_check_config(path: &Path) -> Result<CheckConfig> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Inputs for one curve table.
pub struct CurveData<'a> {
    pub interval: TimeInterval,
    pub horizon: TimeInterval,
    pub truth: Option<&'a ObstaclePath>,
    pub obs_x: Option<&'a ObservationSet>,
    pub obs_y: Option<&'a ObservationSet>,
    pub boundary_x: &'a UncertaintyBoundary,
    pub boundary_y: &'a UncertaintyBoundary,
    pub candidates: Vec<(&'a str, &'a crate::collision::AgentTrajectory)>,
}

fn fmt_cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// Writes the curve table: a time grid over the whole interval plus one row
/// per measurement time, with truth, measurements, band curves, candidate
/// positions, and candidate distance-to-band columns.
pub fn write_curves(data: &CurveData<'_>, grid_resolution: usize, path: &Path) -> Result<()> {
    let mut times: Vec<f64> = data.interval.grid(grid_resolution.max(2));
    if let Some(obs) = data.obs_x {
        times.extend(obs.times.iter().copied());
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let mut header = vec![
        "time".to_string(),
        "truth_x".into(),
        "truth_y".into(),
        "meas_x".into(),
        "meas_y".into(),
        "mu_x".into(),
        "lower_x".into(),
        "upper_x".into(),
        "mu_y".into(),
        "lower_y".into(),
        "upper_y".into(),
    ];
    for (name, _) in &data.candidates {
        header.push(format!("traj_x_{name}"));
        header.push(format!("traj_y_{name}"));
        header.push(format!("dist_{name}"));
    }

    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{}", header.join(","))?;

    let meas_at = |obs: Option<&ObservationSet>, t: f64| -> Option<f64> {
        let obs = obs?;
        obs.times.iter().position(|&ti| ti == t).map(|i| obs.pos[i])
    };

    for &t in &times {
        let in_horizon = data.horizon.contains(t) && t >= data.horizon.start;
        let mut row = vec![
            format!("{t}"),
            fmt_cell(data.truth.and_then(|p| p.x.eval(t).ok())),
            fmt_cell(data.truth.and_then(|p| p.y.eval(t).ok())),
            fmt_cell(meas_at(data.obs_x, t)),
            fmt_cell(meas_at(data.obs_y, t)),
        ];
        for b in [data.boundary_x, data.boundary_y] {
            if in_horizon {
                row.push(format!("{}", b.mean_at(t)));
                row.push(format!("{}", b.lower_at(t)));
                row.push(format!("{}", b.upper_at(t)));
            } else {
                row.extend([String::new(), String::new(), String::new()]);
            }
        }
        for (_, traj) in &data.candidates {
            row.push(fmt_cell(traj.x.eval(t).ok()));
            row.push(fmt_cell(traj.y.eval(t).ok()));
            let dist = if in_horizon {
                let dx = min_distance_to_region(t, &traj.x, data.boundary_x).ok();
                let dy = min_distance_to_region(t, &traj.y, data.boundary_y).ok();
                dx.zip(dy).map(|(a, b)| a.hypot(b))
            } else {
                None
            };
            row.push(fmt_cell(dist));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
