//! Cubic-spline covariance kernel, its first-derivative variants, and joint
//! position-velocity gram matrices.
//!
//! All evaluations shift their inputs by `tau` first; the shift is chosen so
//! that every shifted time is positive, which keeps the kernel positive
//! semi-definite. Since `|t - u|` is shift-invariant, the shifted times are
//! substituted uniformly into every formula.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the cubic-spline kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Output scale of the position channel.
    pub theta_pos: f64,
    /// Output scale of the velocity channel.
    pub theta_vel: f64,
    /// Time shift applied to all inputs; shifted times must stay positive.
    pub tau: f64,
}

impl KernelParams {
    pub fn new(theta_pos: f64, theta_vel: f64, tau: f64) -> Result<Self> {
        let scales_ok = theta_pos > 0.0 && theta_vel > 0.0;
        if !scales_ok {
            return Err(Error::InvalidInput(format!(
                "kernel scales must be positive (theta_pos = {theta_pos}, theta_vel = {theta_vel})"
            )));
        }
        let tau_ok = tau >= 0.0;
        if !tau_ok {
            return Err(Error::InvalidInput(format!(
                "time shift must be nonnegative (tau = {tau})"
            )));
        }
        Ok(Self {
            theta_pos,
            theta_vel,
            tau,
        })
    }

    /// Shifted time, or an error if the shift does not make it positive.
    pub(crate) fn shift(&self, t: f64) -> Result<f64> {
        let shifted = t + self.tau;
        if shifted > 0.0 && shifted.is_finite() {
            Ok(shifted)
        } else {
            Err(Error::NonPositiveShiftedTime { t, tau: self.tau })
        }
    }

    /// Position-position covariance.
    pub fn k_pos(&self, t: f64, u: f64) -> Result<f64> {
        Ok(self.k_pos_shifted(self.shift(t)?, self.shift(u)?))
    }

    /// Position-velocity cross covariance: the derivative of `k_pos` in its
    /// second argument, rescaled from `theta_pos^2` to `theta_pos * theta_vel`.
    pub fn k_posvel(&self, t: f64, u: f64) -> Result<f64> {
        Ok(self.k_posvel_shifted(self.shift(t)?, self.shift(u)?))
    }

    /// Velocity-velocity covariance.
    pub fn k_velvel(&self, t: f64, u: f64) -> Result<f64> {
        Ok(self.k_velvel_shifted(self.shift(t)?, self.shift(u)?))
    }

    pub(crate) fn k_pos_shifted(&self, ts: f64, us: f64) -> f64 {
        let m = ts.min(us);
        self.theta_pos * self.theta_pos * (m * m * m / 3.0 + 0.5 * (ts - us).abs() * m * m)
    }

    // At ts == us the `ts >= us` branch applies: the cross kernel is not
    // differentiable on the diagonal and this is its one-sided limit.
    pub(crate) fn k_posvel_shifted(&self, ts: f64, us: f64) -> f64 {
        let scale = self.theta_pos * self.theta_vel;
        if ts < us {
            scale * ts * ts / 2.0
        } else {
            scale * (ts * us - us * us / 2.0)
        }
    }

    pub(crate) fn k_velvel_shifted(&self, ts: f64, us: f64) -> f64 {
        self.theta_vel * self.theta_vel * ts.min(us)
    }
}

/// Time interval with `start < end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: f64,
    pub end: f64,
}

impl TimeInterval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        let ordered = start < end && start.is_finite() && end.is_finite();
        if !ordered {
            return Err(Error::InvalidInput(format!(
                "interval start must precede end (got [{start}, {end}])"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Closed containment with a small absolute slack for endpoint roundoff.
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start - 1e-9 && t <= self.end + 1e-9
    }

    /// `n` evenly spaced points spanning the closed interval.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2, "grid needs at least two points");
        let h = self.length() / (n - 1) as f64;
        (0..n).map(|i| self.start + h * i as f64).collect()
    }
}

fn validate_times(times: &[f64], params: &KernelParams) -> Result<()> {
    for pair in times.windows(2) {
        let increasing = pair[0] < pair[1];
        if !increasing {
            return Err(Error::InvalidInput(format!(
                "times must be strictly increasing (got {} before {})",
                pair[0], pair[1]
            )));
        }
    }
    for &t in times {
        params.shift(t)?;
    }
    Ok(())
}

/// Joint gram matrix over `times`, positions stacked before velocities:
/// `[[K_pp, K_pv], [K_pv^T, K_vv]]`. Symmetric by construction.
pub fn joint_gram(times: &[f64], params: &KernelParams) -> Result<DMatrix<f64>> {
    validate_times(times, params)?;
    let m = times.len();
    let shifted: Vec<f64> = times.iter().map(|&t| t + params.tau).collect();
    let mut gram = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in i..m {
            let pp = params.k_pos_shifted(shifted[i], shifted[j]);
            gram[(i, j)] = pp;
            gram[(j, i)] = pp;
            let vv = params.k_velvel_shifted(shifted[i], shifted[j]);
            gram[(m + i, m + j)] = vv;
            gram[(m + j, m + i)] = vv;
        }
        for j in 0..m {
            // cov(f(t_i), f'(t_j)); the transposed block mirrors it exactly.
            let pv = params.k_posvel_shifted(shifted[i], shifted[j]);
            gram[(i, m + j)] = pv;
            gram[(m + j, i)] = pv;
        }
    }
    Ok(gram)
}

/// Cross-covariance between the stacked training vector over `times` and the
/// position/velocity pair at a single test time: a `2m x 2` matrix whose first
/// column covaries with `f(t)` and second with `f'(t)`.
pub(crate) fn cross_cov(times: &[f64], t: f64, params: &KernelParams) -> Result<DMatrix<f64>> {
    let ts = params.shift(t)?;
    let m = times.len();
    let mut k = DMatrix::zeros(2 * m, 2);
    for (i, &ti) in times.iter().enumerate() {
        let tis = ti + params.tau;
        k[(i, 0)] = params.k_pos_shifted(tis, ts);
        k[(i, 1)] = params.k_posvel_shifted(tis, ts);
        k[(m + i, 0)] = params.k_posvel_shifted(ts, tis);
        k[(m + i, 1)] = params.k_velvel_shifted(tis, ts);
    }
    Ok(k)
}

/// Prior covariance of the position/velocity pair at a single time.
pub(crate) fn prior_block(t: f64, params: &KernelParams) -> Result<[[f64; 2]; 2]> {
    let ts = params.shift(t)?;
    let pv = params.k_posvel_shifted(ts, ts);
    Ok([
        [params.k_pos_shifted(ts, ts), pv],
        [pv, params.k_velvel_shifted(ts, ts)],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> KernelParams {
        KernelParams::new(1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn k_pos_hand_values() {
        let p = unit_params();
        assert_abs_diff_eq!(p.k_pos(1.0, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.k_pos(1.0, 2.0).unwrap(), 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn k_posvel_hand_values() {
        let p = unit_params();
        assert_abs_diff_eq!(p.k_posvel(1.0, 2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.k_posvel(2.0, 1.0).unwrap(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn k_velvel_hand_values() {
        let p = unit_params();
        assert_abs_diff_eq!(p.k_velvel(1.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        let p2 = KernelParams::new(1.0, 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(p2.k_velvel(3.0, 3.0).unwrap(), 12.0, epsilon = 1e-15);
    }

    #[test]
    fn nonpositive_shifted_time_is_rejected() {
        let p = unit_params();
        assert!(matches!(
            p.k_pos(-1.0, 2.0),
            Err(Error::NonPositiveShiftedTime { .. })
        ));
        assert!(matches!(
            p.k_posvel(1.0, 0.0),
            Err(Error::NonPositiveShiftedTime { .. })
        ));
        let shifted = KernelParams::new(1.0, 1.0, 11.0).unwrap();
        assert!(shifted.k_pos(-11.0, 1.0).is_err());
        assert!(shifted.k_pos(-10.9, 1.0).is_ok());
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(KernelParams::new(0.0, 1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, -2.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, 1.0, -0.5).is_err());
    }

    #[test]
    fn symmetry_over_random_pairs() {
        let p = KernelParams::new(10.0, 30.0, 11.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let t = rng.random_range(0.0..3.0);
            let u = rng.random_range(0.0..3.0);
            assert_abs_diff_eq!(
                p.k_pos(t, u).unwrap(),
                p.k_pos(u, t).unwrap(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                p.k_velvel(t, u).unwrap(),
                p.k_velvel(u, t).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    // k_posvel carries theta_pos*theta_vel where the derivative of k_pos
    // carries theta_pos^2, so the finite difference is rescaled by
    // theta_vel/theta_pos before comparing.
    fn fd_cross(p: &KernelParams, t: f64, u: f64, h: f64) -> f64 {
        (p.k_pos(t, u + h).unwrap() - p.k_pos(t, u - h).unwrap()) / (2.0 * h) * p.theta_vel
            / p.theta_pos
    }

    #[test]
    fn cross_kernel_matches_finite_difference() {
        let p = unit_params();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-5;
        for _ in 0..50 {
            let t: f64 = rng.random_range(0.5..3.0);
            let mut u: f64 = rng.random_range(0.5..3.0);
            if (t - u).abs() < 1e-3 {
                u += 2e-3;
            }
            assert_abs_diff_eq!(
                p.k_posvel(t, u).unwrap(),
                fd_cross(&p, t, u, h),
                epsilon = 1e-6
            );
            // transpose counterpart: derivative in the first argument
            let fd_t = (p.k_pos(t + h, u).unwrap() - p.k_pos(t - h, u).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(p.k_posvel(u, t).unwrap(), fd_t, epsilon = 1e-6);
        }
    }

    #[test]
    fn shift_identity() {
        let shifted = KernelParams::new(2.0, 3.0, 11.0).unwrap();
        let unshifted = KernelParams::new(2.0, 3.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let t = rng.random_range(0.0..3.0);
            let u = rng.random_range(0.0..3.0);
            assert_abs_diff_eq!(
                shifted.k_pos(t, u).unwrap(),
                unshifted.k_pos(t + 11.0, u + 11.0).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn gram_single_time_hand_value() {
        let p = unit_params();
        let g = joint_gram(&[1.0], &p).unwrap();
        assert_eq!(g.nrows(), 2);
        assert_abs_diff_eq!(g[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(0, 1)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(1, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(1, 1)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gram_is_exactly_symmetric() {
        let p = KernelParams::new(10.0, 30.0, 11.0).unwrap();
        let times: Vec<f64> = (0..8).map(|i| i as f64 * 0.13).collect();
        let g = joint_gram(&times, &p).unwrap();
        assert_eq!(g, g.transpose());
    }

    #[test]
    fn gram_rejects_unordered_times() {
        let p = unit_params();
        assert!(matches!(
            joint_gram(&[1.0, 0.5], &p),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            joint_gram(&[1.0, 1.0], &p),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn gram_psd_under_reference_shift() {
        let p = KernelParams::new(10.0, 30.0, 11.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let m = rng.random_range(2..=15usize);
            let mut times = Vec::with_capacity(m);
            let mut t = rng.random_range(0.0..0.3);
            for _ in 0..m {
                times.push(t);
                t += rng.random_range(0.01..0.4);
            }
            let g = joint_gram(&times, &p).unwrap();
            let min_eig = nalgebra::SymmetricEigen::new(g)
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-8, "min eigenvalue {min_eig} below -1e-8");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn k_pos_symmetric_and_shift_invariant(
            t in 0.01f64..3.0,
            u in 0.01f64..3.0,
            tau in 0.0f64..20.0,
        ) {
            let p = KernelParams::new(1.5, 2.5, tau + 0.1).unwrap();
            let a = p.k_pos(t, u).unwrap();
            let b = p.k_pos(u, t).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            let zero_shift = KernelParams::new(1.5, 2.5, 0.0).unwrap();
            let c = zero_shift.k_pos(t + p.tau, u + p.tau).unwrap();
            prop_assert!((a - c).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
