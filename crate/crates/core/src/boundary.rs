//! Exact polynomial form of the posterior on the prediction horizon.
//!
//! On the interval between the last measurement and the intention time the
//! posterior position mean is a cubic and the position variance a sextic, so
//! both are recovered exactly by interpolation: four samples for the mean,
//! seven for the variance. Fits run in the scaled coordinate
//! `s = (t - start) / length`, where the Vandermonde systems stay
//! well-conditioned, and are mapped back to the time coordinate afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::AxisGpModel;
use crate::kernels::TimeInterval;
use crate::poly::{interpolate, Polynomial};

/// Variance values above this floor are clamped to zero at evaluation time;
/// anything below it is treated as a basis violation.
pub const VARIANCE_FLOOR: f64 = -1e-9;

/// Half-width of the band in posterior standard deviations.
pub const DEFAULT_BAND_SCALE: f64 = 2.0;

const MEAN_DEGREE: usize = 3;
const VAR_DEGREE: usize = 6;
const VERIFY_POINTS: usize = 100;
const VERIFY_TOL: f64 = 1e-6;
const FLOOR_CHECK_POINTS: usize = 512;

/// Which posterior moment a polynomial is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    MeanPos,
    VarPos,
}

fn horizon_checks(model: &AxisGpModel, horizon: &TimeInterval) -> Result<()> {
    if let Some(last) = model.last_obs_time() {
        if horizon.start < last - 1e-12 {
            return Err(Error::InvalidInput(format!(
                "horizon start {} overlaps the observation interval ending at {last}",
                horizon.start
            )));
        }
    }
    if horizon.end > model.t_intent() + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "horizon end {} lies beyond the intention time {}",
            horizon.end,
            model.t_intent()
        )));
    }
    Ok(())
}

fn moment_value(model: &AxisGpModel, t: f64, moment: Moment) -> Result<f64> {
    let post = model.posterior_at(t)?;
    Ok(match moment {
        Moment::MeanPos => post.mean_pos,
        Moment::VarPos => post.var_pos,
    })
}

/// Fits a polynomial of the given degree through `degree + 1` posterior
/// samples on the horizon. No verification; callers that need the exactness
/// guarantee use [`extract_mean_poly`] / [`extract_var_poly`].
pub fn fit_posterior_poly(
    model: &AxisGpModel,
    horizon: &TimeInterval,
    degree: usize,
    moment: Moment,
) -> Result<Polynomial> {
    horizon_checks(model, horizon)?;
    let h = horizon.length();
    let m = degree + 1;
    // The horizon is open at its start, so the first node sits at s = 1/100
    // rather than on the boundary.
    let nodes_s: Vec<f64> = (0..m)
        .map(|k| 0.01 + 0.99 * k as f64 / (m - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(m);
    for &s in &nodes_s {
        values.push(moment_value(model, horizon.start + h * s, moment)?);
    }
    let in_s = interpolate(&nodes_s, &values)?;
    // back to the time coordinate: s = (t - start) / h
    Ok(in_s.compose_affine(1.0 / h, -horizon.start / h))
}

fn verify_against_posterior(
    model: &AxisGpModel,
    horizon: &TimeInterval,
    poly: &Polynomial,
    moment: Moment,
) -> Result<()> {
    let h = horizon.length();
    for j in 0..VERIFY_POINTS {
        let t = horizon.start + h * (j + 1) as f64 / VERIFY_POINTS as f64;
        let residual = (poly.eval(t) - moment_value(model, t, moment)?).abs();
        if residual > VERIFY_TOL {
            return Err(Error::BasisMismatch { t, residual });
        }
    }
    Ok(())
}

/// Posterior position mean on the horizon as an exact cubic.
pub fn extract_mean_poly(model: &AxisGpModel, horizon: &TimeInterval) -> Result<Polynomial> {
    let poly = fit_posterior_poly(model, horizon, MEAN_DEGREE, Moment::MeanPos)?;
    verify_against_posterior(model, horizon, &poly, Moment::MeanPos)?;
    Ok(poly)
}

/// Posterior position variance on the horizon as an exact sextic.
pub fn extract_var_poly(model: &AxisGpModel, horizon: &TimeInterval) -> Result<Polynomial> {
    let poly = fit_posterior_poly(model, horizon, VAR_DEGREE, Moment::VarPos)?;
    verify_against_posterior(model, horizon, &poly, Moment::VarPos)?;
    Ok(poly)
}

/// Uncertainty-region boundary on the prediction horizon: a cubic mean, a
/// sextic variance, and the band half-width `band_scale * sqrt(var)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBoundary {
    mu: Polynomial,
    var: Polynomial,
    horizon: TimeInterval,
    band_scale: f64,
}

impl UncertaintyBoundary {
    /// Extracts both polynomials from a fitted model with the default 2-sigma band.
    pub fn from_model(model: &AxisGpModel, horizon: &TimeInterval) -> Result<Self> {
        Self::from_model_scaled(model, horizon, DEFAULT_BAND_SCALE)
    }

    pub fn from_model_scaled(
        model: &AxisGpModel,
        horizon: &TimeInterval,
        band_scale: f64,
    ) -> Result<Self> {
        let mu = extract_mean_poly(model, horizon)?;
        let var = extract_var_poly(model, horizon)?;
        Self::from_parts_scaled(mu, var, *horizon, band_scale)
    }

    /// Builds a boundary from explicit polynomials, checking the variance
    /// floor on a dense grid over the horizon.
    pub fn from_parts(mu: Polynomial, var: Polynomial, horizon: TimeInterval) -> Result<Self> {
        Self::from_parts_scaled(mu, var, horizon, DEFAULT_BAND_SCALE)
    }

    pub fn from_parts_scaled(
        mu: Polynomial,
        var: Polynomial,
        horizon: TimeInterval,
        band_scale: f64,
    ) -> Result<Self> {
        let scale_ok = band_scale > 0.0;
        if !scale_ok {
            return Err(Error::InvalidInput(format!(
                "band scale must be positive (got {band_scale})"
            )));
        }
        for t in horizon.grid(FLOOR_CHECK_POINTS) {
            let value = var.eval(t);
            if value < VARIANCE_FLOOR {
                return Err(Error::NegativeVariance { t, value });
            }
        }
        Ok(Self {
            mu,
            var,
            horizon,
            band_scale,
        })
    }

    pub fn mean(&self) -> &Polynomial {
        &self.mu
    }

    pub fn variance(&self) -> &Polynomial {
        &self.var
    }

    pub fn horizon(&self) -> &TimeInterval {
        &self.horizon
    }

    pub fn band_scale(&self) -> f64 {
        self.band_scale
    }

    pub fn mean_at(&self, t: f64) -> f64 {
        self.mu.eval(t)
    }

    /// Variance clamped at zero; tiny negative fitted values evaluate as zero.
    pub fn var_at(&self, t: f64) -> f64 {
        self.var.eval(t).max(0.0)
    }

    /// Band half-width `band_scale * sqrt(var)`.
    pub fn radius_at(&self, t: f64) -> f64 {
        self.band_scale * self.var_at(t).sqrt()
    }

    pub fn upper_at(&self, t: f64) -> f64 {
        self.mean_at(t) + self.radius_at(t)
    }

    pub fn lower_at(&self, t: f64) -> f64 {
        self.mean_at(t) - self.radius_at(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{AxisGpModel, Intention, ObservationSet};
    use crate::kernels::KernelParams;
    use approx::assert_abs_diff_eq;

    fn resting_model() -> AxisGpModel {
        // obstacle at rest at position 5 with matching intention
        let obs = ObservationSet::new(
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            vec![5.0; 5],
            vec![0.0; 5],
            1e-10,
            1e-10,
        )
        .unwrap();
        let intent = Intention {
            t_intent: 3.0,
            mean_pos: 5.0,
            var_pos: 1e-10,
            mean_vel: 0.0,
            var_vel: 1e-10,
        };
        AxisGpModel::fit(&obs, &intent, &KernelParams::new(1.0, 1.0, 11.0).unwrap()).unwrap()
    }

    #[test]
    fn mean_extraction_pins_a_constant() {
        let model = resting_model();
        let horizon = TimeInterval::new(1.0, 3.0).unwrap();
        let cubic = extract_mean_poly(&model, &horizon).unwrap();
        let c = cubic.coeffs();
        assert_abs_diff_eq!(c[0], 5.0, epsilon = 1e-4);
        for &coeff in &c[1..] {
            assert!(coeff.abs() < 1e-6, "nonzero higher coefficient {coeff}");
        }
    }

    #[test]
    fn cubic_samples_reproduce_a_cubic_exactly() {
        // push t^3 through the same node placement and solve path
        let horizon = TimeInterval::new(1.0, 3.0).unwrap();
        let h = horizon.length();
        let nodes_s: Vec<f64> = (0..4).map(|k| 0.01 + 0.99 * k as f64 / 3.0).collect();
        let values: Vec<f64> = nodes_s
            .iter()
            .map(|&s| {
                let t = horizon.start + h * s;
                t * t * t
            })
            .collect();
        let fit = interpolate(&nodes_s, &values)
            .unwrap()
            .compose_affine(1.0 / h, -horizon.start / h);
        let expect = [0.0, 0.0, 0.0, 1.0];
        for (got, want) in fit.coeffs().iter().zip(expect) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-10);
        }
    }

    #[test]
    fn variance_extraction_recovers_prior_variance() {
        // a pseudo-observation with huge noise leaves the prior untouched, so
        // the fitted sextic must be k_pos(t,t) = t^3/3 at unit scale.
        let obs = ObservationSet::new(vec![0.5], vec![0.0], vec![0.0], 1e12, 1e12).unwrap();
        let intent = Intention {
            t_intent: 3.0,
            mean_pos: 0.0,
            var_pos: 1e12,
            mean_vel: 0.0,
            var_vel: 1e12,
        };
        let model =
            AxisGpModel::fit(&obs, &intent, &KernelParams::new(1.0, 1.0, 0.0).unwrap()).unwrap();
        let horizon = TimeInterval::new(1.0, 3.0).unwrap();
        let sextic = fit_posterior_poly(&model, &horizon, 6, Moment::VarPos).unwrap();
        let expect = [0.0, 0.0, 0.0, 1.0 / 3.0, 0.0, 0.0, 0.0];
        for (got, want) in sextic.coeffs().iter().zip(expect) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-6);
        }
    }

    #[test]
    fn variance_poly_interpolates_its_nodes() {
        let model = resting_model();
        let horizon = TimeInterval::new(1.0, 3.0).unwrap();
        let sextic = extract_var_poly(&model, &horizon).unwrap();
        let h = horizon.length();
        for k in 0..7 {
            let s = 0.01 + 0.99 * k as f64 / 6.0;
            let t = horizon.start + h * s;
            let sampled = model.posterior_at(t).unwrap().var_pos;
            assert_abs_diff_eq!(sextic.eval(t), sampled, epsilon = 1e-10);
        }
    }

    #[test]
    fn refuses_horizon_overlapping_observations() {
        let model = resting_model();
        let horizon = TimeInterval::new(0.5, 3.0).unwrap();
        assert!(matches!(
            extract_mean_poly(&model, &horizon),
            Err(Error::InvalidInput(_))
        ));
        let beyond = TimeInterval::new(1.0, 3.5).unwrap();
        assert!(extract_mean_poly(&model, &beyond).is_err());
    }

    #[test]
    fn boundary_collapses_as_variance_vanishes() {
        // tiny output scale and near-noiseless data force sigma ~ 0
        let obs = ObservationSet::new(
            (0..10).map(|i| i as f64 / 9.0).collect(),
            vec![1.0; 10],
            vec![0.0; 10],
            1e-12,
            1e-12,
        )
        .unwrap();
        let intent = Intention {
            t_intent: 3.0,
            mean_pos: 1.0,
            var_pos: 1e-12,
            mean_vel: 0.0,
            var_vel: 1e-12,
        };
        let params = KernelParams::new(1e-5, 1e-5, 11.0).unwrap();
        let model = AxisGpModel::fit(&obs, &intent, &params).unwrap();
        let horizon = TimeInterval::new(1.0, 3.0).unwrap();
        let boundary = UncertaintyBoundary::from_model(&model, &horizon).unwrap();
        for t in horizon.grid(200) {
            assert!((boundary.upper_at(t) - boundary.mean_at(t)).abs() < 1e-4);
            assert!((boundary.lower_at(t) - boundary.mean_at(t)).abs() < 1e-4);
        }
    }

    #[test]
    fn boundary_brackets_the_intention_mean() {
        let model = resting_model();
        let horizon = TimeInterval::new(1.0, 3.0).unwrap();
        let boundary = UncertaintyBoundary::from_model(&model, &horizon).unwrap();
        let t_i = model.t_intent();
        let post = model.posterior_at(t_i).unwrap();
        let two_sigma = 2.0 * post.var_pos.sqrt();
        let intent_mean = 5.0;
        assert!(boundary.lower_at(t_i) <= intent_mean + two_sigma);
        assert!(boundary.upper_at(t_i) >= intent_mean - two_sigma);
    }

    #[test]
    fn upper_never_below_lower() {
        let model = resting_model();
        let horizon = TimeInterval::new(1.0, 3.0).unwrap();
        let boundary = UncertaintyBoundary::from_model(&model, &horizon).unwrap();
        for t in horizon.grid(1000) {
            assert!(boundary.upper_at(t) >= boundary.lower_at(t));
        }
    }

    #[test]
    fn from_parts_rejects_negative_variance() {
        let horizon = TimeInterval::new(0.0, 1.0).unwrap();
        let err = UncertaintyBoundary::from_parts(
            Polynomial::zero(),
            Polynomial::constant(-1e-3),
            horizon,
        );
        assert!(matches!(err, Err(Error::NegativeVariance { .. })));
        // floor-level noise is accepted and clamps to zero
        let ok = UncertaintyBoundary::from_parts(
            Polynomial::zero(),
            Polynomial::constant(-0.5e-9),
            horizon,
        )
        .unwrap();
        assert_eq!(ok.var_at(0.5), 0.0);
        assert_eq!(ok.radius_at(0.5), 0.0);
    }
}
