//! Obstacle trajectory prediction with Gaussian-process regression and
//! closed-form collision checking.
//!
//! A planar obstacle is observed through noisy position and velocity
//! measurements and assumed to hold a probabilistic intention — a Gaussian
//! over its position and velocity at a fixed future time. Each spatial axis
//! is fitted with a multi-output GP under the cubic-spline kernel, with the
//! intention injected as a pseudo-measurement. On the prediction horizon the
//! posterior mean is an exact cubic and the posterior variance an exact
//! sextic, so the 2-sigma uncertainty band has closed polynomial form and
//! collision times against an agent's piecewise-cubic trajectory reduce to
//! real-root isolation. A collision is predicted when the per-axis collision
//! intervals overlap.

pub mod boundary;
pub mod collision;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod poly;
pub mod report;
pub mod scenario;
pub mod validation;

pub use boundary::{extract_mean_poly, extract_var_poly, UncertaintyBoundary};
pub use collision::{
    check_collision, collision_intervals_axis, intersect_intervals, min_distance_to_region,
    AgentTrajectory, CollisionReport, PiecewisePoly, SafetyConfig,
};
pub use error::{Error, Result};
pub use gp::{fit_planar, AxisGpModel, Intention, ObservationSet, PosteriorMoments};
pub use kernels::{joint_gram, KernelParams, TimeInterval};
pub use poly::Polynomial;
pub use report::{CheckConfig, Report, RunConfig};
pub use scenario::{
    build_scenario, run_scenario, simulate_observations, Candidate, ObstaclePath, ScenarioKind,
    ScenarioRun, ScenarioSpec,
};
