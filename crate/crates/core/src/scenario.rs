//! The two built-in simulation scenarios — a merging overtake and a
//! perpendicular cross — plus the generic simulate/fit/extract/check pipeline
//! that runs any scenario specification.
//!
//! Each scenario carries a ground-truth obstacle path, two candidate agent
//! trajectories (one evasive, one constant-velocity), measurement noise and
//! intention parameters, and a seed. Runs are deterministic given the seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::boundary::UncertaintyBoundary;
use crate::collision::{
    check_collision, AgentTrajectory, CollisionReport, PiecewisePoly, SafetyConfig,
};
use crate::error::{Error, Result};
use crate::gp::{fit_planar, Intention, ObservationSet};
use crate::kernels::{KernelParams, TimeInterval};
use crate::poly::{cubic_hermite, Polynomial};

/// Smallest noise variance used for fitting when a spec asks for zero noise.
pub const NOISE_VAR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Merging,
    Crossing,
    Custom,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ScenarioKind::Merging => "merging",
            ScenarioKind::Crossing => "crossing",
            ScenarioKind::Custom => "custom",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merging" => Ok(ScenarioKind::Merging),
            "crossing" => Ok(ScenarioKind::Crossing),
            "custom" => Ok(ScenarioKind::Custom),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }
}

/// Measurement noise variances for one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisNoise {
    pub pos_var: f64,
    pub vel_var: f64,
}

/// Intention belief for one axis; the intention time lives on the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentionParams {
    pub mean_pos: f64,
    pub var_pos: f64,
    pub mean_vel: f64,
    pub var_vel: f64,
}

impl IntentionParams {
    pub fn at(&self, t_intent: f64) -> Intention {
        Intention {
            t_intent,
            mean_pos: self.mean_pos,
            var_pos: self.var_pos,
            mean_vel: self.mean_vel,
            var_vel: self.var_vel,
        }
    }
}

/// Ground-truth obstacle path; velocities are the segment derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstaclePath {
    pub x: PiecewisePoly,
    pub y: PiecewisePoly,
}

impl ObstaclePath {
    pub fn position(&self, t: f64) -> Result<(f64, f64)> {
        Ok((self.x.eval(t)?, self.y.eval(t)?))
    }

    pub fn velocity(&self, t: f64) -> Result<(f64, f64)> {
        Ok((self.x.eval_derivative(t)?, self.y.eval_derivative(t)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub trajectory: AgentTrajectory,
}

/// Full description of a scenario: timing, model parameters, ground truth,
/// and the candidate trajectories to check. The ground-truth constants of the
/// built-in scenarios are reference values, not measured data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub t_start: f64,
    pub t_obs_end: f64,
    pub t_intent: f64,
    pub n_samples: usize,
    pub kernel: KernelParams,
    pub noise_x: AxisNoise,
    pub noise_y: AxisNoise,
    pub intent_x: IntentionParams,
    pub intent_y: IntentionParams,
    pub delta_safe: f64,
    pub truth: ObstaclePath,
    pub candidates: Vec<Candidate>,
    pub rng_seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let ordered = self.t_start < self.t_obs_end && self.t_obs_end < self.t_intent;
        if !ordered {
            return Err(Error::InvalidInput(format!(
                "need t_start < t_obs_end < t_intent (got {}, {}, {})",
                self.t_start, self.t_obs_end, self.t_intent
            )));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 samples (got {})",
                self.n_samples
            )));
        }
        let delta_ok = self.delta_safe > 0.0;
        if !delta_ok {
            return Err(Error::InvalidInput(format!(
                "safety distance must be positive (got {})",
                self.delta_safe
            )));
        }
        if self.candidates.is_empty() {
            return Err(Error::InvalidInput("no candidate trajectories".into()));
        }
        let whole = TimeInterval::new(self.t_start, self.t_intent)?;
        if !self.truth.x.covers(&whole) || !self.truth.y.covers(&whole) {
            return Err(Error::InvalidInput(
                "ground-truth path must cover the whole interval of interest".into(),
            ));
        }
        for c in &self.candidates {
            if !c.trajectory.x.covers(&whole) || !c.trajectory.y.covers(&whole) {
                return Err(Error::InvalidInput(format!(
                    "candidate '{}' must cover the whole interval of interest",
                    c.name
                )));
            }
        }
        Ok(())
    }

    pub fn observation_interval(&self) -> TimeInterval {
        TimeInterval {
            start: self.t_start,
            end: self.t_obs_end,
        }
    }

    pub fn prediction_interval(&self) -> TimeInterval {
        TimeInterval {
            start: self.t_obs_end,
            end: self.t_intent,
        }
    }
}

/// One candidate's collision report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub name: String,
    pub report: CollisionReport,
}

/// Everything produced by one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub spec: ScenarioSpec,
    pub obs_x: ObservationSet,
    pub obs_y: ObservationSet,
    pub boundary_x: UncertaintyBoundary,
    pub boundary_y: UncertaintyBoundary,
    pub outcomes: Vec<CandidateOutcome>,
}

fn single(t0: f64, t1: f64, poly: Polynomial) -> PiecewisePoly {
    PiecewisePoly::single(TimeInterval { start: t0, end: t1 }, poly)
}

fn linear(t0: f64, t1: f64, offset: f64, slope: f64) -> PiecewisePoly {
    single(t0, t1, Polynomial::new(vec![offset, slope]))
}

/// Builds one of the named scenarios with the shared timing (observations on
/// [0, 1], intention at t = 3, ten samples) and kernel parameters
/// theta_pos = 10, theta_vel = 30, tau = 11.
pub fn build_scenario(kind: ScenarioKind, rng_seed: u64) -> Result<ScenarioSpec> {
    let kernel = KernelParams::new(10.0, 30.0, 11.0)?;
    let (t_start, t_obs_end, t_intent) = (0.0, 1.0, 3.0);
    match kind {
        ScenarioKind::Merging => {
            // The obstacle overtakes from an adjacent lane (11 m lateral
            // offset), passing the agent at t = 1 and merging in ahead of it
            // by the intention time. The evasive candidate brakes; the other
            // holds 10 m/s.
            let truth = ObstaclePath {
                x: linear(t_start, t_intent, -6.0, 16.0),
                y: PiecewisePoly::new(vec![
                    (
                        TimeInterval {
                            start: t_start,
                            end: 1.0,
                        },
                        Polynomial::constant(-11.0),
                    ),
                    (
                        TimeInterval {
                            start: 1.0,
                            end: t_intent,
                        },
                        cubic_hermite(1.0, t_intent, -11.0, 0.0, 0.0, 0.0),
                    ),
                ])?,
            };
            let constant_velocity = AgentTrajectory {
                x: linear(t_start, t_intent, 0.0, 10.0),
                y: linear(t_start, t_intent, 0.0, 0.0),
            };
            let evasive = AgentTrajectory {
                x: PiecewisePoly::new(vec![
                    (
                        TimeInterval {
                            start: t_start,
                            end: 1.0,
                        },
                        Polynomial::new(vec![0.0, 10.0]),
                    ),
                    (
                        TimeInterval {
                            start: 1.0,
                            end: 1.7,
                        },
                        cubic_hermite(1.0, 1.7, 10.0, 10.0, 13.2, 0.4),
                    ),
                    (
                        TimeInterval {
                            start: 1.7,
                            end: t_intent,
                        },
                        cubic_hermite(1.7, t_intent, 13.2, 0.4, 13.72, 0.4),
                    ),
                ])?,
                y: linear(t_start, t_intent, 0.0, 0.0),
            };
            Ok(ScenarioSpec {
                kind,
                t_start,
                t_obs_end,
                t_intent,
                n_samples: 10,
                kernel,
                noise_x: AxisNoise {
                    pos_var: 0.25,
                    vel_var: 0.25,
                },
                noise_y: AxisNoise {
                    pos_var: 0.01,
                    vel_var: 0.01,
                },
                intent_x: IntentionParams {
                    mean_pos: 42.0,
                    var_pos: 1.0,
                    mean_vel: 16.0,
                    var_vel: 1.0,
                },
                intent_y: IntentionParams {
                    mean_pos: 0.0,
                    var_pos: 0.0625,
                    mean_vel: 0.0,
                    var_vel: 0.0625,
                },
                delta_safe: 2.0,
                truth,
                candidates: vec![
                    Candidate {
                        name: "constant_velocity".into(),
                        trajectory: constant_velocity,
                    },
                    Candidate {
                        name: "evasive".into(),
                        trajectory: evasive,
                    },
                ],
                rng_seed,
            })
        }
        ScenarioKind::Crossing => {
            // The obstacle crosses the agent's lane perpendicularly, reaching
            // y = 0 near t = 2.9 at the x position the constant-velocity
            // agent sweeps through. The evasive candidate speeds up and
            // swerves away from the crossing line.
            let truth = ObstaclePath {
                x: linear(t_start, t_intent, 10.0, 0.0),
                y: linear(t_start, t_intent, 23.5, -8.0),
            };
            let constant_velocity = AgentTrajectory {
                x: linear(t_start, t_intent, 0.0, 5.0),
                y: linear(t_start, t_intent, 0.0, 0.0),
            };
            let evasive = AgentTrajectory {
                x: PiecewisePoly::new(vec![
                    (
                        TimeInterval {
                            start: t_start,
                            end: 1.0,
                        },
                        Polynomial::new(vec![0.0, 5.0]),
                    ),
                    (
                        TimeInterval {
                            start: 1.0,
                            end: t_intent,
                        },
                        cubic_hermite(1.0, t_intent, 5.0, 5.0, 17.0, 7.0),
                    ),
                ])?,
                y: PiecewisePoly::new(vec![
                    (
                        TimeInterval {
                            start: t_start,
                            end: 1.0,
                        },
                        Polynomial::constant(0.0),
                    ),
                    (
                        TimeInterval {
                            start: 1.0,
                            end: t_intent,
                        },
                        cubic_hermite(1.0, t_intent, 0.0, 0.0, -12.0, -10.0),
                    ),
                ])?,
            };
            Ok(ScenarioSpec {
                kind,
                t_start,
                t_obs_end,
                t_intent,
                n_samples: 10,
                kernel,
                noise_x: AxisNoise {
                    pos_var: 1.0,
                    vel_var: 4.0,
                },
                noise_y: AxisNoise {
                    pos_var: 1.0,
                    vel_var: 4.0,
                },
                intent_x: IntentionParams {
                    mean_pos: 10.0,
                    var_pos: 4.0,
                    mean_vel: 0.0,
                    var_vel: 16.0,
                },
                intent_y: IntentionParams {
                    mean_pos: -0.5,
                    var_pos: 4.0,
                    mean_vel: -8.0,
                    var_vel: 16.0,
                },
                delta_safe: 5.0,
                truth,
                candidates: vec![
                    Candidate {
                        name: "constant_velocity".into(),
                        trajectory: constant_velocity,
                    },
                    Candidate {
                        name: "evasive".into(),
                        trajectory: evasive,
                    },
                ],
                rng_seed,
            })
        }
        ScenarioKind::Custom => Err(Error::UnknownScenario(
            "custom scenarios come from a config file, not the generator".into(),
        )),
    }
}

/// Samples the ground-truth path at `n_samples` evenly spaced times across
/// the observation interval and adds seeded Gaussian noise. A zero noise
/// variance samples the truth exactly; fitting variances are floored at 1e-12.
pub fn simulate_observations(spec: &ScenarioSpec) -> Result<(ObservationSet, ObservationSet)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let times = spec.observation_interval().grid(spec.n_samples);

    let mut draw = |truth: &[f64], var: f64| -> Result<Vec<f64>> {
        if var == 0.0 {
            return Ok(truth.to_vec());
        }
        if var < 0.0 {
            return Err(Error::InvalidInput(format!(
                "noise variance must be nonnegative (got {var})"
            )));
        }
        let normal = Normal::new(0.0, var.sqrt())
            .map_err(|e| Error::InvalidInput(format!("bad noise distribution: {e}")))?;
        Ok(truth.iter().map(|&v| v + normal.sample(&mut rng)).collect())
    };

    let truth_px: Vec<f64> = times
        .iter()
        .map(|&t| spec.truth.x.eval(t))
        .collect::<Result<_>>()?;
    let truth_vx: Vec<f64> = times
        .iter()
        .map(|&t| spec.truth.x.eval_derivative(t))
        .collect::<Result<_>>()?;
    let truth_py: Vec<f64> = times
        .iter()
        .map(|&t| spec.truth.y.eval(t))
        .collect::<Result<_>>()?;
    let truth_vy: Vec<f64> = times
        .iter()
        .map(|&t| spec.truth.y.eval_derivative(t))
        .collect::<Result<_>>()?;

    let px = draw(&truth_px, spec.noise_x.pos_var)?;
    let vx = draw(&truth_vx, spec.noise_x.vel_var)?;
    let py = draw(&truth_py, spec.noise_y.pos_var)?;
    let vy = draw(&truth_vy, spec.noise_y.vel_var)?;

    let obs_x = ObservationSet::new(
        times.clone(),
        px,
        vx,
        spec.noise_x.pos_var.max(NOISE_VAR_FLOOR),
        spec.noise_x.vel_var.max(NOISE_VAR_FLOOR),
    )?;
    let obs_y = ObservationSet::new(
        times,
        py,
        vy,
        spec.noise_y.pos_var.max(NOISE_VAR_FLOOR),
        spec.noise_y.vel_var.max(NOISE_VAR_FLOOR),
    )?;
    Ok((obs_x, obs_y))
}

/// Runs the full pipeline with the default 2-sigma band.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioRun> {
    run_scenario_scaled(spec, crate::boundary::DEFAULT_BAND_SCALE)
}

/// Runs simulate -> fit -> extract -> per-candidate collision check.
pub fn run_scenario_scaled(spec: &ScenarioSpec, band_scale: f64) -> Result<ScenarioRun> {
    spec.validate()?;

    // every candidate must start farther from the obstacle than delta_safe
    let (ox, oy) = spec.truth.position(spec.t_start)?;
    for c in &spec.candidates {
        let ax = c.trajectory.x.eval(spec.t_start)?;
        let ay = c.trajectory.y.eval(spec.t_start)?;
        let separation = (ax - ox).hypot(ay - oy);
        if separation <= spec.delta_safe {
            return Err(Error::InitialSeparation {
                candidate: c.name.clone(),
                separation,
                t: spec.t_start,
                required: spec.delta_safe,
            });
        }
    }

    let (obs_x, obs_y) = simulate_observations(spec)?;
    let (model_x, model_y) = fit_planar(
        &obs_x,
        &obs_y,
        &spec.intent_x.at(spec.t_intent),
        &spec.intent_y.at(spec.t_intent),
        &spec.kernel,
        &spec.kernel,
    )?;
    let horizon = spec.prediction_interval();
    let boundary_x = UncertaintyBoundary::from_model_scaled(&model_x, &horizon, band_scale)?;
    let boundary_y = UncertaintyBoundary::from_model_scaled(&model_y, &horizon, band_scale)?;

    let cfg = SafetyConfig::new(spec.delta_safe)?;
    let mut outcomes = Vec::with_capacity(spec.candidates.len());
    for c in &spec.candidates {
        let report = check_collision(&c.trajectory, &boundary_x, &boundary_y, &cfg, &horizon)?;
        outcomes.push(CandidateOutcome {
            name: c.name.clone(),
            report,
        });
    }

    Ok(ScenarioRun {
        spec: spec.clone(),
        obs_x,
        obs_y,
        boundary_x,
        boundary_y,
        outcomes,
    })
}
