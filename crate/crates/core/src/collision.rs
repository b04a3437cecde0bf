//! Collision prediction against the uncertainty-region boundary.
//!
//! Per axis, the collision condition at time `t` is
//! `|psi(t) - mu(t)| - s*sqrt(var(t)) < delta` with band scale `s`. The
//! boundary crossings of that condition are roots of the squared-out
//! polynomial `q = (e^2 - delta^2 - s^2 v)^2 - 4 delta^2 s^2 v` with
//! `e = psi - mu`, so the maximal collision intervals are found by isolating
//! the real roots of `q` on each trajectory segment and classifying every
//! root-free cell by its midpoint against the original condition. A joint
//! collision requires the per-axis interval lists to overlap.

use serde::{Deserialize, Serialize};

use crate::boundary::UncertaintyBoundary;
use crate::error::{Error, Result};
use crate::kernels::TimeInterval;
use crate::poly::{roots, Polynomial};

const KNOT_TOL: f64 = 1e-9;
const ROOT_TIME_TOL: f64 = 1e-10;
const MIN_INTERVAL_WIDTH: f64 = 1e-9;
const JOINT_GRID_POINTS: usize = 2000;

/// Piecewise polynomial over contiguous, non-overlapping time segments,
/// continuous at the knots to within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    segments: Vec<(TimeInterval, Polynomial)>,
}

impl PiecewisePoly {
    pub fn new(segments: Vec<(TimeInterval, Polynomial)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput(
                "piecewise polynomial needs at least one segment".into(),
            ));
        }
        for pair in segments.windows(2) {
            let (prev_iv, prev_poly) = &pair[0];
            let (next_iv, next_poly) = &pair[1];
            if (next_iv.start - prev_iv.end).abs() > KNOT_TOL {
                return Err(Error::InvalidInput(format!(
                    "segments are not contiguous: [{}, {}] then [{}, {}]",
                    prev_iv.start, prev_iv.end, next_iv.start, next_iv.end
                )));
            }
            let gap = (prev_poly.eval(prev_iv.end) - next_poly.eval(next_iv.start)).abs();
            if gap > KNOT_TOL {
                return Err(Error::InvalidInput(format!(
                    "discontinuity of {gap} at knot t = {}",
                    prev_iv.end
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn single(interval: TimeInterval, poly: Polynomial) -> Self {
        Self {
            segments: vec![(interval, poly)],
        }
    }

    pub fn segments(&self) -> &[(TimeInterval, Polynomial)] {
        &self.segments
    }

    pub fn domain(&self) -> TimeInterval {
        TimeInterval {
            start: self.segments[0].0.start,
            end: self.segments[self.segments.len() - 1].0.end,
        }
    }

    pub fn covers(&self, interval: &TimeInterval) -> bool {
        let d = self.domain();
        d.start <= interval.start + KNOT_TOL && d.end >= interval.end - KNOT_TOL
    }

    fn segment_at(&self, t: f64) -> Result<&Polynomial> {
        if !self.domain().contains(t) {
            return Err(Error::InvalidInput(format!(
                "t = {t} outside the trajectory domain [{}, {}]",
                self.domain().start,
                self.domain().end
            )));
        }
        let poly = self
            .segments
            .iter()
            .find(|(iv, _)| iv.contains(t))
            .map(|(_, p)| p)
            .expect("domain containment implies a segment match");
        Ok(poly)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.segment_at(t)?.eval(t))
    }

    pub fn eval_derivative(&self, t: f64) -> Result<f64> {
        Ok(self.segment_at(t)?.derivative().eval(t))
    }
}

/// Planar agent trajectory as per-axis piecewise cubics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrajectory {
    pub x: PiecewisePoly,
    pub y: PiecewisePoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyConfig {
    pub delta_safe: f64,
}

impl SafetyConfig {
    pub fn new(delta_safe: f64) -> Result<Self> {
        let positive = delta_safe > 0.0;
        if !positive {
            return Err(Error::InvalidInput(format!(
                "safety distance must be positive (got {delta_safe})"
            )));
        }
        Ok(Self { delta_safe })
    }
}

/// Per-axis collision intervals, their intersection, and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub intervals_x: Vec<TimeInterval>,
    pub intervals_y: Vec<TimeInterval>,
    pub joint: Vec<TimeInterval>,
    pub verdict: bool,
    /// Grid-sampled minimum of `sqrt(dx^2 + dy^2)` over the horizon
    /// (diagnostic; the verdict comes from the interval intersection).
    pub min_joint_distance: f64,
}

/// Distance from the trajectory axis to the uncertainty band at time `t`;
/// zero inside the band.
pub fn min_distance_to_region(
    t: f64,
    traj_axis: &PiecewisePoly,
    boundary: &UncertaintyBoundary,
) -> Result<f64> {
    if !boundary.horizon().contains(t) {
        return Err(Error::InvalidInput(format!(
            "t = {t} outside the boundary horizon [{}, {}]",
            boundary.horizon().start,
            boundary.horizon().end
        )));
    }
    let psi = traj_axis.eval(t)?;
    Ok(((psi - boundary.mean_at(t)).abs() - boundary.radius_at(t)).max(0.0))
}

/// Maximal subintervals of `horizon` on which the axis distance to the band
/// is below `delta_safe`.
pub fn collision_intervals_axis(
    traj_axis: &PiecewisePoly,
    boundary: &UncertaintyBoundary,
    cfg: &SafetyConfig,
    horizon: &TimeInterval,
) -> Result<Vec<TimeInterval>> {
    if !traj_axis.covers(horizon) {
        return Err(Error::InvalidInput(format!(
            "trajectory domain [{}, {}] does not cover the horizon [{}, {}]",
            traj_axis.domain().start,
            traj_axis.domain().end,
            horizon.start,
            horizon.end
        )));
    }
    let delta = cfg.delta_safe;
    let scale_sq = boundary.band_scale() * boundary.band_scale();
    let mut colliding: Vec<TimeInterval> = Vec::new();

    for (seg_iv, seg_poly) in traj_axis.segments() {
        let lo = seg_iv.start.max(horizon.start);
        let hi = seg_iv.end.min(horizon.end);
        if hi - lo <= MIN_INTERVAL_WIDTH {
            continue;
        }
        let width = hi - lo;

        // Work in the local coordinate u in [0, 1], t = lo + width*u, where
        // the squared-out polynomial keeps moderate coefficients.
        let e = &seg_poly.compose_affine(width, lo) - &boundary.mean().compose_affine(width, lo);
        let var = boundary.variance().compose_affine(width, lo);
        let a = (&(&e * &e) - &var.scale(scale_sq)).add_constant(-delta * delta);
        let q = &(&a * &a) - &var.scale(4.0 * delta * delta * scale_sq);

        let mut breakpoints = vec![0.0];
        if q.max_abs_coeff() > 0.0 {
            let tol_u = (ROOT_TIME_TOL / width).max(1e-14);
            let found = roots::isolate_roots(&q, 0.0, 1.0, tol_u)
                .map_err(|_| Error::RootIsolation { start: lo, end: hi })?;
            breakpoints.extend(found);
        }
        breakpoints.push(1.0);

        for cell in breakpoints.windows(2) {
            let (c0, c1) = (cell[0], cell[1]);
            if c1 - c0 <= 0.0 {
                continue;
            }
            let um = 0.5 * (c0 + c1);
            let inside =
                e.eval(um).abs() - boundary.band_scale() * var.eval(um).max(0.0).sqrt() < delta;
            if inside {
                push_merged(
                    &mut colliding,
                    TimeInterval {
                        start: lo + width * c0,
                        end: lo + width * c1,
                    },
                );
            }
        }
    }

    colliding.retain(|iv| iv.end - iv.start > MIN_INTERVAL_WIDTH);
    Ok(colliding)
}

fn push_merged(intervals: &mut Vec<TimeInterval>, next: TimeInterval) {
    if let Some(last) = intervals.last_mut() {
        if next.start - last.end <= KNOT_TOL {
            last.end = last.end.max(next.end);
            return;
        }
    }
    intervals.push(next);
}

/// Pairwise intersection of two sorted disjoint interval lists. Overlaps
/// narrower than the interval-width floor are dropped: a shared endpoint is a
/// tangency, not a crossing.
pub fn intersect_intervals(a: &[TimeInterval], b: &[TimeInterval]) -> Vec<TimeInterval> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let start = a[i].start.max(b[j].start);
        let end = a[i].end.min(b[j].end);
        if end - start > MIN_INTERVAL_WIDTH {
            out.push(TimeInterval { start, end });
        }
        if a[i].end < b[j].end {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Full planar collision check: per-axis intervals, their intersection, and
/// the grid-sampled joint distance diagnostic.
pub fn check_collision(
    traj: &AgentTrajectory,
    boundary_x: &UncertaintyBoundary,
    boundary_y: &UncertaintyBoundary,
    cfg: &SafetyConfig,
    horizon: &TimeInterval,
) -> Result<CollisionReport> {
    for b in [boundary_x, boundary_y] {
        if (b.horizon().start - horizon.start).abs() > 1e-12
            || (b.horizon().end - horizon.end).abs() > 1e-12
        {
            return Err(Error::InvalidInput(format!(
                "boundary horizon [{}, {}] does not match the requested horizon [{}, {}]",
                b.horizon().start,
                b.horizon().end,
                horizon.start,
                horizon.end
            )));
        }
    }
    let intervals_x = collision_intervals_axis(&traj.x, boundary_x, cfg, horizon)?;
    let intervals_y = collision_intervals_axis(&traj.y, boundary_y, cfg, horizon)?;
    let joint = intersect_intervals(&intervals_x, &intervals_y);

    let mut min_joint_distance = f64::INFINITY;
    for t in horizon.grid(JOINT_GRID_POINTS) {
        let dx = min_distance_to_region(t, &traj.x, boundary_x)?;
        let dy = min_distance_to_region(t, &traj.y, boundary_y)?;
        min_joint_distance = min_joint_distance.min(dx.hypot(dy));
    }

    Ok(CollisionReport {
        verdict: !joint.is_empty(),
        intervals_x,
        intervals_y,
        joint,
        min_joint_distance,
    })
}
