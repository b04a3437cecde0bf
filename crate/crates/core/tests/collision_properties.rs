//! Collision-interval search checked against dense grid scans.

use gp_predict::collision::{
    check_collision, collision_intervals_axis, AgentTrajectory, SafetyConfig,
};
use gp_predict::kernels::TimeInterval;
use gp_predict::validation::{
    axis_implication_check, interval_oracle_check, random_boundary_and_trajectory,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn interval_endpoints_match_dense_sign_scan() {
    let outcome = interval_oracle_check(25, 404);
    assert!(outcome.passed, "{}", outcome.detail);
}

#[test]
fn empty_intersection_implies_joint_distance_at_least_delta() {
    let outcome = axis_implication_check(40, 405);
    assert!(outcome.passed, "{}", outcome.detail);
}

#[test]
fn growing_delta_never_shrinks_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let horizon = TimeInterval::new(1.0, 3.0).unwrap();
    for _ in 0..50 {
        let (boundary, traj, cfg) = random_boundary_and_trajectory(&mut rng);
        let small = collision_intervals_axis(&traj, &boundary, &cfg, &horizon).unwrap();
        let larger = SafetyConfig::new(cfg.delta_safe * 1.5 + 0.5).unwrap();
        let big = collision_intervals_axis(&traj, &boundary, &larger, &horizon).unwrap();
        // set containment with a little endpoint slack
        for iv in &small {
            let contained = big
                .iter()
                .any(|b| b.start <= iv.start + 1e-7 && b.end >= iv.end - 1e-7);
            assert!(
                contained,
                "interval {iv:?} under delta {} has no superset under delta {} ({big:?})",
                cfg.delta_safe, larger.delta_safe
            );
        }
    }
}

#[test]
fn verdict_catches_every_grid_detected_collision() {
    // whenever sqrt(dx^2 + dy^2) < delta anywhere on the grid, both axis
    // distances are below delta there, so the verdict must be true
    let mut rng = ChaCha8Rng::seed_from_u64(4321);
    let horizon = TimeInterval::new(1.0, 3.0).unwrap();
    let mut flagged = 0usize;
    for _ in 0..40 {
        let (bx, tx, cfg) = random_boundary_and_trajectory(&mut rng);
        let (by, ty, _) = random_boundary_and_trajectory(&mut rng);
        let traj = AgentTrajectory { x: tx, y: ty };
        let report = check_collision(&traj, &bx, &by, &cfg, &horizon).unwrap();
        if report.min_joint_distance < cfg.delta_safe - 1e-6 {
            flagged += 1;
            assert!(
                report.verdict,
                "grid found joint distance {} < {} but verdict is false (x: {:?}, y: {:?})",
                report.min_joint_distance, cfg.delta_safe, report.intervals_x, report.intervals_y
            );
        }
        // containment invariant: joint intervals lie inside both axis lists
        for j in &report.joint {
            let in_x = report
                .intervals_x
                .iter()
                .any(|iv| iv.start <= j.start + 1e-9 && iv.end >= j.end - 1e-9);
            let in_y = report
                .intervals_y
                .iter()
                .any(|iv| iv.start <= j.start + 1e-9 && iv.end >= j.end - 1e-9);
            assert!(in_x && in_y, "joint interval {j:?} not contained per axis");
        }
    }
    assert!(
        flagged >= 5,
        "too few colliding instances ({flagged}) to be meaningful"
    );
}
