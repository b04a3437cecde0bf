//! Shared fixtures for the pipeline benchmarks.

use gp_predict::boundary::UncertaintyBoundary;
use gp_predict::gp::AxisGpModel;
use gp_predict::kernels::TimeInterval;
use gp_predict::scenario::{build_scenario, simulate_observations, ScenarioKind, ScenarioSpec};

pub struct Fixture {
    pub spec: ScenarioSpec,
    pub model_x: AxisGpModel,
    pub boundary_x: UncertaintyBoundary,
    pub horizon: TimeInterval,
}

pub fn merging_fixture() -> Fixture {
    let spec = build_scenario(ScenarioKind::Merging, 7).unwrap();
    let (obs_x, _) = simulate_observations(&spec).unwrap();
    let model_x = AxisGpModel::fit(&obs_x, &spec.intent_x.at(spec.t_intent), &spec.kernel).unwrap();
    let horizon = spec.prediction_interval();
    let boundary_x = UncertaintyBoundary::from_model(&model_x, &horizon).unwrap();
    Fixture {
        spec,
        model_x,
        boundary_x,
        horizon,
    }
}
