//! Command-line entry points: `simulate` runs a built-in or configured
//! scenario, `check` evaluates supplied observations and candidate
//! trajectories without simulating, and `validate` runs the self-checks.
//!
//! Exit codes: 0 when no candidate collides, 2 when a collision is predicted,
//! 1 on any error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gp_predict::boundary::UncertaintyBoundary;
use gp_predict::collision::{check_collision, SafetyConfig};
use gp_predict::gp::fit_planar;
use gp_predict::kernels::TimeInterval;
use gp_predict::report::{
    read_check_config, read_run_config, CurveData, Report, ReportParams, DEFAULT_GRID_RESOLUTION,
};
use gp_predict::scenario::{build_scenario, run_scenario_scaled, CandidateOutcome, ScenarioKind};
use gp_predict::validation::run_all_checks;

const EXIT_OK: u8 = 0;
const EXIT_COLLISION: u8 = 2;

#[derive(Parser)]
#[command(
    name = "gp-predict",
    version,
    about = "Predict an obstacle's motion with a Gaussian process and check agent trajectories for collision"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its report and curve table
    Simulate(SimulateArgs),
    /// Fit and check observations supplied in a config file (no simulation)
    Check(CheckArgs),
    /// Run the self-validation checks and print a pass/fail table
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in scenario: merging | crossing
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Seed for the measurement noise
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario configuration file (JSON) as an alternative to --scenario
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and curves.csv
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Grid resolution for the exported curves [default: 200]
    #[arg(long)]
    grid: Option<usize>,
    /// Check only the named candidate trajectory
    #[arg(long)]
    only_candidate: Option<String>,
    /// Band half-width in posterior standard deviations [default: 2]
    #[arg(long)]
    safety_multiplier: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    /// Check configuration file (JSON) with observations and candidates
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and curves.csv
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Grid resolution for the exported curves [default: 200]
    #[arg(long)]
    grid: Option<usize>,
    /// Check only the named candidate trajectory
    #[arg(long)]
    only_candidate: Option<String>,
    /// Band half-width in posterior standard deviations [default: 2]
    #[arg(long)]
    safety_multiplier: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Number of seeds per scenario sweep
    #[arg(long, default_value_t = 50)]
    seeds: u64,
    /// Number of random instances per oracle check
    #[arg(long, default_value_t = 50)]
    instances: usize,
    /// Degree of the mean fit (lower it to demonstrate the negative control)
    #[arg(long, default_value_t = 3, hide = true)]
    mean_degree: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Check(args) => cmd_check(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn print_outcomes(outcomes: &[CandidateOutcome]) {
    for o in outcomes {
        if o.report.verdict {
            let windows: Vec<String> = o
                .report
                .joint
                .iter()
                .map(|iv| format!("[{:.3}, {:.3}]", iv.start, iv.end))
                .collect();
            println!(
                "candidate {}: collision predicted in {}",
                o.name,
                windows.join(", ")
            );
        } else {
            println!(
                "candidate {}: no collision (closest joint distance {:.3})",
                o.name, o.report.min_joint_distance
            );
        }
    }
}

fn write_outputs(
    report: &Report,
    data: &CurveData<'_>,
    grid: usize,
    out_dir: &Path,
) -> gp_predict::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let report_path = out_dir.join("report.json");
    report.write_json(&report_path)?;
    let curves_path = out_dir.join("curves.csv");
    gp_predict::report::write_curves(data, grid, &curves_path)?;
    println!("wrote {}", report_path.display());
    println!("wrote {}", curves_path.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> gp_predict::Result<u8> {
    let (mut spec, config_grid, config_band) = match (&args.config, &args.scenario) {
        (Some(path), _) => {
            let cfg = read_run_config(path).map_err(|e| annotate_config_error(e, path))?;
            (
                cfg.scenario,
                Some(cfg.grid_resolution),
                Some(cfg.band_scale),
            )
        }
        (None, Some(name)) => {
            let kind: ScenarioKind = name.parse()?;
            let spec = build_scenario(kind, args.seed.unwrap_or(0))?;
            (spec, None, None)
        }
        (None, None) => {
            return Err(gp_predict::Error::InvalidInput(
                "one of --scenario or --config is required".into(),
            ))
        }
    };
    if let Some(seed) = args.seed {
        spec.rng_seed = seed;
    }
    if let Some(name) = &args.only_candidate {
        spec.candidates.retain(|c| &c.name == name);
        if spec.candidates.is_empty() {
            return Err(gp_predict::Error::InvalidInput(format!(
                "no candidate named '{name}'"
            )));
        }
    }
    let band_scale = args
        .safety_multiplier
        .or(config_band)
        .unwrap_or(gp_predict::boundary::DEFAULT_BAND_SCALE);
    let grid = args.grid.or(config_grid).unwrap_or(DEFAULT_GRID_RESOLUTION);

    let run = run_scenario_scaled(&spec, band_scale)?;
    let report = Report::from_run(&run, band_scale);
    print_outcomes(&report.candidates);

    let data = CurveData {
        interval: TimeInterval::new(spec.t_start, spec.t_intent)?,
        horizon: spec.prediction_interval(),
        truth: Some(&spec.truth),
        obs_x: Some(&run.obs_x),
        obs_y: Some(&run.obs_y),
        boundary_x: &run.boundary_x,
        boundary_y: &run.boundary_y,
        candidates: spec
            .candidates
            .iter()
            .map(|c| (c.name.as_str(), &c.trajectory))
            .collect(),
    };
    write_outputs(&report, &data, grid, &args.out)?;
    Ok(if report.any_collision() {
        EXIT_COLLISION
    } else {
        EXIT_OK
    })
}

fn cmd_check(args: CheckArgs) -> gp_predict::Result<u8> {
    let mut cfg =
        read_check_config(&args.config).map_err(|e| annotate_config_error(e, &args.config))?;
    cfg.obs_x.validate()?;
    cfg.obs_y.validate()?;
    if let Some(name) = &args.only_candidate {
        cfg.candidates.retain(|c| &c.name == name);
        if cfg.candidates.is_empty() {
            return Err(gp_predict::Error::InvalidInput(format!(
                "no candidate named '{name}'"
            )));
        }
    }
    if cfg.candidates.is_empty() {
        return Err(gp_predict::Error::InvalidInput(
            "config supplies no candidate trajectories".into(),
        ));
    }

    let horizon_start = match (cfg.horizon_start, cfg.obs_x.times.last()) {
        (Some(t), _) => t,
        (None, Some(&last)) => last,
        (None, None) => {
            return Err(gp_predict::Error::InvalidInput(
                "horizon_start is required when there are no observations".into(),
            ))
        }
    };
    let horizon = TimeInterval::new(horizon_start, cfg.t_intent)?;

    let band_scale = args.safety_multiplier.unwrap_or(cfg.band_scale);
    let grid = args.grid.unwrap_or(cfg.grid_resolution);

    let (model_x, model_y) = fit_planar(
        &cfg.obs_x,
        &cfg.obs_y,
        &cfg.intent_x.at(cfg.t_intent),
        &cfg.intent_y.at(cfg.t_intent),
        &cfg.kernel,
        &cfg.kernel,
    )?;
    let boundary_x = UncertaintyBoundary::from_model_scaled(&model_x, &horizon, band_scale)?;
    let boundary_y = UncertaintyBoundary::from_model_scaled(&model_y, &horizon, band_scale)?;
    let safety = SafetyConfig::new(cfg.delta_safe)?;

    let mut outcomes = Vec::with_capacity(cfg.candidates.len());
    for c in &cfg.candidates {
        let report = check_collision(&c.trajectory, &boundary_x, &boundary_y, &safety, &horizon)?;
        outcomes.push(CandidateOutcome {
            name: c.name.clone(),
            report,
        });
    }
    print_outcomes(&outcomes);

    let report = Report {
        scenario: "check".into(),
        seed: None,
        params: ReportParams {
            kernel: cfg.kernel,
            delta_safe: cfg.delta_safe,
            band_scale,
            t_start: cfg.obs_x.times.first().copied().unwrap_or(horizon_start),
            t_obs_end: horizon_start,
            t_intent: cfg.t_intent,
            n_samples: cfg.obs_x.len(),
        },
        axis_x: gp_predict::report::AxisSummary::from_boundary(&boundary_x),
        axis_y: gp_predict::report::AxisSummary::from_boundary(&boundary_y),
        candidates: outcomes,
    };

    let interval_start = cfg.obs_x.times.first().copied().unwrap_or(horizon_start);
    let data = CurveData {
        interval: TimeInterval::new(interval_start.min(horizon.start - 1e-9), cfg.t_intent)?,
        horizon,
        truth: None,
        obs_x: Some(&cfg.obs_x),
        obs_y: Some(&cfg.obs_y),
        boundary_x: &boundary_x,
        boundary_y: &boundary_y,
        candidates: cfg
            .candidates
            .iter()
            .map(|c| (c.name.as_str(), &c.trajectory))
            .collect(),
    };
    write_outputs(&report, &data, grid, &args.out)?;
    Ok(if report.any_collision() {
        EXIT_COLLISION
    } else {
        EXIT_OK
    })
}

fn cmd_validate(args: ValidateArgs) -> gp_predict::Result<u8> {
    let outcomes = run_all_checks(args.seeds, args.instances, args.mean_degree);
    let width = outcomes
        .iter()
        .map(|o| o.name.len())
        .max()
        .unwrap_or(0)
        .max(5);
    println!("{:width$}  result  detail", "check");
    let mut all_passed = true;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{:width$}  {status:6}  {}", o.name, o.detail);
        all_passed &= o.passed;
    }
    if all_passed {
        println!("all checks passed");
        Ok(EXIT_OK)
    } else {
        println!("some checks failed");
        Err(gp_predict::Error::InvalidInput(
            "validation checks failed".into(),
        ))
    }
}

/// Config errors keep the file path and, for parse errors, the line/column.
fn annotate_config_error(err: gp_predict::Error, path: &Path) -> gp_predict::Error {
    gp_predict::Error::InvalidInput(format!("config {}: {err}", path.display()))
}
