//! Per-axis multi-output Gaussian-process posteriors over position and
//! velocity, fitted to measurement data augmented with an intention
//! pseudo-measurement at a fixed future time.
//!
//! The intention enters the model exactly like a measurement: its means are
//! appended to the target vectors and its variances go on the corresponding
//! diagonal entries of the noise matrix. Targets are stacked positions first,
//! then velocities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, KernelParams};

/// Timestamped noisy position/velocity measurements for one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub times: Vec<f64>,
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
    pub noise_var_pos: f64,
    pub noise_var_vel: f64,
}

impl ObservationSet {
    pub fn new(
        times: Vec<f64>,
        pos: Vec<f64>,
        vel: Vec<f64>,
        noise_var_pos: f64,
        noise_var_vel: f64,
    ) -> Result<Self> {
        let set = Self {
            times,
            pos,
            vel,
            noise_var_pos,
            noise_var_vel,
        };
        set.validate()?;
        Ok(set)
    }

    /// Empty set for intention-only fits.
    pub fn empty(noise_var_pos: f64, noise_var_vel: f64) -> Result<Self> {
        Self::new(
            Vec::new(),
            Vec::new(),
            Vec::new(),
            noise_var_pos,
            noise_var_vel,
        )
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.pos.len() != self.times.len() || self.vel.len() != self.times.len() {
            return Err(Error::InvalidInput(format!(
                "observation lengths disagree: {} times, {} positions, {} velocities",
                self.times.len(),
                self.pos.len(),
                self.vel.len()
            )));
        }
        for pair in self.times.windows(2) {
            let increasing = pair[0] < pair[1];
            if !increasing {
                return Err(Error::InvalidInput(format!(
                    "observation times must be strictly increasing (got {} before {})",
                    pair[0], pair[1]
                )));
            }
        }
        let noise_ok = self.noise_var_pos > 0.0 && self.noise_var_vel > 0.0;
        if !noise_ok {
            return Err(Error::InvalidInput(
                "measurement noise variances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Gaussian belief over position and velocity at a fixed future time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intention {
    pub t_intent: f64,
    pub mean_pos: f64,
    pub var_pos: f64,
    pub mean_vel: f64,
    pub var_vel: f64,
}

impl Intention {
    pub fn validate(&self) -> Result<()> {
        let vars_ok = self.var_pos > 0.0 && self.var_vel > 0.0;
        if !vars_ok {
            return Err(Error::InvalidInput(
                "intention variances must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Posterior mean and covariance of the position/velocity pair at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMoments {
    pub mean_pos: f64,
    pub mean_vel: f64,
    pub var_pos: f64,
    pub var_vel: f64,
    pub cov_posvel: f64,
}

/// Numerical floor below which a computed variance is treated as an error
/// rather than roundoff.
pub const VARIANCE_FLOOR: f64 = -1e-9;

// Escalating diagonal jitter tried when the plain factorization fails.
const JITTER_LEVELS: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

/// One axis of the fitted multi-output GP: the augmented time vector, the
/// precision weights, and the triangular factor of the gram-plus-noise matrix.
#[derive(Debug, Clone)]
pub struct AxisGpModel {
    aug_times: Vec<f64>,
    weights: DVector<f64>,
    factor_l: DMatrix<f64>,
    params: KernelParams,
    jitter: f64,
    n_obs: usize,
}

impl AxisGpModel {
    /// Fits the axis model to observations plus the intention pseudo-measurement.
    pub fn fit(obs: &ObservationSet, intent: &Intention, params: &KernelParams) -> Result<Self> {
        obs.validate()?;
        intent.validate()?;
        if let Some(&last) = obs.times.last() {
            let after_data = intent.t_intent > last;
            if !after_data {
                return Err(Error::InvalidInput(format!(
                    "intention time {} must lie strictly after the last measurement at {}",
                    intent.t_intent, last
                )));
            }
        }

        let n = obs.len();
        let mut aug_times = obs.times.clone();
        aug_times.push(intent.t_intent);

        let mut targets = DVector::zeros(2 * (n + 1));
        let mut noise_diag = DVector::zeros(2 * (n + 1));
        for i in 0..n {
            targets[i] = obs.pos[i];
            targets[n + 1 + i] = obs.vel[i];
            noise_diag[i] = obs.noise_var_pos;
            noise_diag[n + 1 + i] = obs.noise_var_vel;
        }
        targets[n] = intent.mean_pos;
        targets[2 * n + 1] = intent.mean_vel;
        noise_diag[n] = intent.var_pos;
        noise_diag[2 * n + 1] = intent.var_vel;

        let gram = kernels::joint_gram(&aug_times, params)?;

        let mut last_jitter = 0.0;
        for &jitter in &JITTER_LEVELS {
            last_jitter = jitter;
            let mut sys = gram.clone();
            for i in 0..sys.nrows() {
                sys[(i, i)] += noise_diag[i] + jitter;
            }
            if let Some(chol) = sys.cholesky() {
                let weights = chol.solve(&targets);
                return Ok(Self {
                    aug_times,
                    weights,
                    factor_l: chol.unpack(),
                    params: *params,
                    jitter,
                    n_obs: n,
                });
            }
        }
        Err(Error::NotPositiveDefinite {
            jitter: last_jitter,
        })
    }

    /// Posterior moments at a test time.
    ///
    /// The quadratic form is computed as `||L^{-1} k*||^2`, which keeps the
    /// posterior covariance at or below the prior regardless of roundoff.
    pub fn posterior_at(&self, t: f64) -> Result<PosteriorMoments> {
        let kstar = kernels::cross_cov(&self.aug_times, t, &self.params)?;
        let mean = kstar.transpose() * &self.weights;
        let v = self
            .factor_l
            .solve_lower_triangular(&kstar)
            .ok_or(Error::NotPositiveDefinite {
                jitter: self.jitter,
            })?;
        let prior = kernels::prior_block(t, &self.params)?;
        let var_pos = prior[0][0] - v.column(0).dot(&v.column(0));
        let var_vel = prior[1][1] - v.column(1).dot(&v.column(1));
        let cov_posvel = prior[0][1] - v.column(0).dot(&v.column(1));
        for &value in &[var_pos, var_vel] {
            if value < VARIANCE_FLOOR {
                return Err(Error::NegativeVariance { t, value });
            }
        }
        Ok(PosteriorMoments {
            mean_pos: mean[0],
            mean_vel: mean[1],
            var_pos: var_pos.max(0.0),
            var_vel: var_vel.max(0.0),
            cov_posvel,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    /// Measurement times plus the intention time, strictly increasing.
    pub fn aug_times(&self) -> &[f64] {
        &self.aug_times
    }

    pub fn t_intent(&self) -> f64 {
        self.aug_times[self.aug_times.len() - 1]
    }

    /// Last real measurement time; `None` for an intention-only fit.
    pub fn last_obs_time(&self) -> Option<f64> {
        if self.n_obs == 0 {
            None
        } else {
            Some(self.aug_times[self.n_obs - 1])
        }
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Jitter that was added to the diagonal before factorization succeeded.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular factor; `L L^T` reconstructs gram + noise (+ jitter).
    pub fn factor_l(&self) -> &DMatrix<f64> {
        &self.factor_l
    }
}

/// Fits the two spatial axes independently. Both observation sets must share
/// the same time vector and both intentions the same intention time.
pub fn fit_planar(
    obs_x: &ObservationSet,
    obs_y: &ObservationSet,
    intent_x: &Intention,
    intent_y: &Intention,
    params_x: &KernelParams,
    params_y: &KernelParams,
) -> Result<(AxisGpModel, AxisGpModel)> {
    if obs_x.times != obs_y.times {
        return Err(Error::InvalidInput(
            "x and y observations must share the same time vector".into(),
        ));
    }
    if intent_x.t_intent != intent_y.t_intent {
        return Err(Error::InvalidInput(format!(
            "intention times differ between axes: {} vs {}",
            intent_x.t_intent, intent_y.t_intent
        )));
    }
    Ok((
        AxisGpModel::fit(obs_x, intent_x, params_x)?,
        AxisGpModel::fit(obs_y, intent_y, params_y)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_params() -> KernelParams {
        KernelParams::new(1.0, 1.0, 0.0).unwrap()
    }

    fn simple_obs() -> ObservationSet {
        ObservationSet::new(
            vec![0.25, 0.5, 0.75, 1.0],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![4.0, 4.0, 4.0, 4.0],
            0.01,
            0.01,
        )
        .unwrap()
    }

    fn simple_intent() -> Intention {
        Intention {
            t_intent: 3.0,
            mean_pos: 12.0,
            var_pos: 1.0,
            mean_vel: 4.0,
            var_vel: 1.0,
        }
    }

    #[test]
    fn rejects_unordered_times() {
        let obs = ObservationSet::new(vec![1.0, 0.5], vec![0.0, 0.0], vec![0.0, 0.0], 0.1, 0.1);
        assert!(matches!(obs, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_intent_before_last_measurement() {
        let mut intent = simple_intent();
        intent.t_intent = 0.5;
        let params = KernelParams::new(1.0, 1.0, 11.0).unwrap();
        assert!(AxisGpModel::fit(&simple_obs(), &intent, &params).is_err());
    }

    #[test]
    fn intention_only_fit_is_a_two_by_two_system() {
        let obs = ObservationSet::empty(0.1, 0.1).unwrap();
        let model = AxisGpModel::fit(
            &obs,
            &simple_intent(),
            &KernelParams::new(1.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(model.aug_times(), &[3.0]);
        assert_eq!(model.weights().len(), 2);
        assert_eq!(model.last_obs_time(), None);
        assert!(model.posterior_at(2.0).is_ok());
    }

    #[test]
    fn weights_solve_the_augmented_system() {
        let params = KernelParams::new(1.0, 1.0, 11.0).unwrap();
        let obs = simple_obs();
        let intent = simple_intent();
        let model = AxisGpModel::fit(&obs, &intent, &params).unwrap();

        let gram = kernels::joint_gram(model.aug_times(), &params).unwrap();
        let n = obs.len();
        let mut sys = gram;
        let mut targets = DVector::zeros(2 * (n + 1));
        for i in 0..n {
            targets[i] = obs.pos[i];
            targets[n + 1 + i] = obs.vel[i];
            sys[(i, i)] += obs.noise_var_pos;
            sys[(n + 1 + i, n + 1 + i)] += obs.noise_var_vel;
        }
        targets[n] = intent.mean_pos;
        targets[2 * n + 1] = intent.mean_vel;
        sys[(n, n)] += intent.var_pos;
        sys[(2 * n + 1, 2 * n + 1)] += intent.var_vel;

        let residual = &sys * model.weights() - targets;
        assert!(residual.amax() < 1e-8, "residual {}", residual.amax());
    }

    #[test]
    fn factor_reconstructs_gram_plus_noise() {
        let params = KernelParams::new(10.0, 30.0, 11.0).unwrap();
        let model = AxisGpModel::fit(&simple_obs(), &simple_intent(), &params).unwrap();
        assert_eq!(model.jitter(), 0.0);

        let obs = simple_obs();
        let intent = simple_intent();
        let n = obs.len();
        let mut expected = kernels::joint_gram(model.aug_times(), &params).unwrap();
        for i in 0..n {
            expected[(i, i)] += obs.noise_var_pos;
            expected[(n + 1 + i, n + 1 + i)] += obs.noise_var_vel;
        }
        expected[(n, n)] += intent.var_pos;
        expected[(2 * n + 1, 2 * n + 1)] += intent.var_vel;

        let reconstructed = model.factor_l() * model.factor_l().transpose();
        let diff = (&reconstructed - &expected).norm() / expected.norm();
        assert!(diff < 1e-10, "relative Frobenius error {diff}");
    }

    #[test]
    fn prior_recovery_under_infinite_noise() {
        // A single pseudo-observation with variance 1e12 barely moves the prior.
        let obs = ObservationSet::empty(1.0, 1.0).unwrap();
        let intent = Intention {
            t_intent: 1.5,
            mean_pos: 0.0,
            var_pos: 1e12,
            mean_vel: 0.0,
            var_vel: 1e12,
        };
        let params = unit_params();
        let model = AxisGpModel::fit(&obs, &intent, &params).unwrap();
        for &t in &[0.5, 1.0, 2.0, 3.0] {
            let post = model.posterior_at(t).unwrap();
            assert_abs_diff_eq!(post.mean_pos, 0.0, epsilon = 1e-3);
            assert_abs_diff_eq!(post.var_pos, params.k_pos(t, t).unwrap(), epsilon = 1e-3);
        }
    }

    #[test]
    fn single_point_position_only_posterior_matches_closed_form() {
        // Position-only sanity check bypassing the joint model: one noiseless
        // observation y = 1 at t = 1 gives mean k(1,2)/k(1,1) and variance
        // k(2,2) - k(1,2)^2/k(1,1) at t = 2.
        let params = unit_params();
        let k11 = params.k_pos(1.0, 1.0).unwrap();
        let k12 = params.k_pos(1.0, 2.0).unwrap();
        let k22 = params.k_pos(2.0, 2.0).unwrap();
        let mean = k12 / k11 * 1.0;
        let var = k22 - k12 * k12 / k11;
        assert_abs_diff_eq!(mean, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(var, 7.0 / 12.0, epsilon = 1e-12);
    }

    #[test]
    fn near_noiseless_interpolation_at_training_times() {
        let obs = ObservationSet::new(
            vec![0.2, 0.5, 0.8],
            vec![1.0, -0.5, 2.0],
            vec![0.3, 0.1, -0.2],
            1e-12,
            1e-12,
        )
        .unwrap();
        let intent = Intention {
            t_intent: 3.0,
            mean_pos: 1.0,
            var_pos: 4.0,
            mean_vel: 0.0,
            var_vel: 4.0,
        };
        let params = KernelParams::new(10.0, 30.0, 11.0).unwrap();
        let model = AxisGpModel::fit(&obs, &intent, &params).unwrap();
        for (i, &t) in obs.times.iter().enumerate() {
            let post = model.posterior_at(t).unwrap();
            assert!(
                (post.mean_pos - obs.pos[i]).abs() < 1e-4,
                "mean {} vs measurement {} at t = {t}",
                post.mean_pos,
                obs.pos[i]
            );
        }
    }

    #[test]
    fn posterior_variance_never_exceeds_prior() {
        let params = KernelParams::new(10.0, 30.0, 11.0).unwrap();
        let model = AxisGpModel::fit(&simple_obs(), &simple_intent(), &params).unwrap();
        for i in 0..100 {
            let t = 0.05 + 2.9 * i as f64 / 99.0;
            let post = model.posterior_at(t).unwrap();
            let prior = params.k_pos(t, t).unwrap();
            assert!(post.var_pos <= prior + 1e-9);
            assert!(post.var_vel <= params.k_velvel(t, t).unwrap() + 1e-9);
        }
    }

    #[test]
    fn planar_fit_checks_shared_structure() {
        let params = unit_params();
        let obs = simple_obs();
        let intent = simple_intent();
        let mut obs_other = obs.clone();
        obs_other.times[0] += 0.01;
        assert!(fit_planar(&obs, &obs_other, &intent, &intent, &params, &params).is_err());

        let mut intent_other = intent;
        intent_other.t_intent = 2.5;
        assert!(fit_planar(&obs, &obs, &intent, &intent_other, &params, &params).is_err());

        let (mx, my) = fit_planar(&obs, &obs, &intent, &intent, &params, &params).unwrap();
        for (a, b) in mx.weights().iter().zip(my.weights().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn swapping_axes_swaps_outputs() {
        let params = unit_params();
        let obs_a = simple_obs();
        let mut obs_b = simple_obs();
        obs_b.pos = vec![-1.0, -2.0, -3.0, -4.0];
        obs_b.vel = vec![-4.0, -4.0, -4.0, -4.0];
        let intent_a = simple_intent();
        let intent_b = Intention {
            mean_pos: -12.0,
            mean_vel: -4.0,
            ..intent_a
        };
        let (mx, my) = fit_planar(&obs_a, &obs_b, &intent_a, &intent_b, &params, &params).unwrap();
        let (sx, sy) = fit_planar(&obs_b, &obs_a, &intent_b, &intent_a, &params, &params).unwrap();
        let t = 2.0;
        assert_abs_diff_eq!(
            mx.posterior_at(t).unwrap().mean_pos,
            sy.posterior_at(t).unwrap().mean_pos,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            my.posterior_at(t).unwrap().mean_pos,
            sx.posterior_at(t).unwrap().mean_pos,
            epsilon = 1e-12
        );
    }
}
