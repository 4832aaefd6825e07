//! Random velocity-sampling base tracker: draw candidate commands, roll
//! each through the platform kinematics for one step, and keep the one
//! whose next position best matches the objective |d - rho_d|.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RobotConfig, SamplingObjective, SamplingParams};
use crate::diff_drive::{step_pose, VelocityCommand};
use crate::geometry::{Point2, Pose2D};

/// Uniform commands over [-v_max, v_max] x [-omega_max, omega_max].
pub fn sample_velocities(
    count: usize,
    cfg: &RobotConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<VelocityCommand> {
    (0..count)
        .map(|_| {
            VelocityCommand::new(
                rng.gen_range(-cfg.v_max..=cfg.v_max),
                rng.gen_range(-cfg.omega_max..=cfg.omega_max),
            )
        })
        .collect()
}

/// Pick the sampled command minimizing J = |d - rho_d| (or plain d with
/// the point-distance objective) at the rolled-out next pose. Ties keep
/// the first sample.
pub fn velocity_sampling_step(
    pose: Pose2D,
    target: Point2,
    rho_d: f64,
    cfg: &RobotConfig,
    params: &SamplingParams,
    rng: &mut ChaCha8Rng,
) -> VelocityCommand {
    let candidates = sample_velocities(params.count, cfg, rng);
    let mut best = VelocityCommand::zero();
    let mut best_cost = f64::INFINITY;
    for cmd in candidates {
        let next = step_pose(pose, cmd, cfg.dt).expect("finite sampled command");
        let d = next.position().dist(&target);
        let cost = match params.objective {
            SamplingObjective::RingDistance => (d - rho_d).abs(),
            SamplingObjective::PointDistance => d,
        };
        if cost < best_cost {
            best_cost = cost;
            best = cmd;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn cfg() -> RobotConfig {
        RobotConfig::default()
    }

    #[test]
    fn samples_are_reproducible_and_bounded() {
        let cfg = cfg();
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        let one = sample_velocities(1, &cfg, &mut a);
        assert_eq!(one, sample_velocities(1, &cfg, &mut b));
        assert!(one[0].v.abs() <= cfg.v_max && one[0].omega.abs() <= cfg.omega_max);
    }

    #[test]
    fn default_count_is_five_hundred_in_limits() {
        let cfg = cfg();
        let params = SamplingParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cmds = sample_velocities(params.count, &cfg, &mut rng);
        assert_eq!(cmds.len(), 500);
        for c in &cmds {
            assert!(c.v.abs() <= cfg.v_max);
            assert!(c.omega.abs() <= cfg.omega_max);
        }
    }

    #[test]
    fn histogram_is_uniform_within_chi_square_tolerance() {
        let cfg = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000usize;
        let bins = 20usize;
        let mut v_hist = vec![0usize; bins];
        let mut w_hist = vec![0usize; bins];
        for cmd in sample_velocities(n, &cfg, &mut rng) {
            let vb = (((cmd.v + cfg.v_max) / (2.0 * cfg.v_max)) * bins as f64) as usize;
            let wb = (((cmd.omega + cfg.omega_max) / (2.0 * cfg.omega_max)) * bins as f64) as usize;
            v_hist[vb.min(bins - 1)] += 1;
            w_hist[wb.min(bins - 1)] += 1;
        }
        let expected = n as f64 / bins as f64;
        for hist in [v_hist, w_hist] {
            let chi2: f64 = hist
                .iter()
                .map(|&c| {
                    let d = c as f64 - expected;
                    d * d / expected
                })
                .sum();
            // 19 degrees of freedom: chi2 beyond 60 is ~1e-5 probability.
            assert!(chi2 < 60.0, "chi2 = {chi2}");
        }
    }

    #[test]
    fn zero_cost_achievable_on_the_ring() {
        // Target exactly rho_d away: standing still has J = 0, so the
        // winner must land at a cost near zero.
        let cfg = cfg();
        let rho_d = cfg.reachability_radius();
        let params = SamplingParams {
            objective: SamplingObjective::RingDistance,
            ..SamplingParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let target = Point2::new(rho_d, 0.0);
        let cmd = velocity_sampling_step(pose, target, rho_d, &cfg, &params, &mut rng);
        let next = step_pose(pose, cmd, cfg.dt).unwrap();
        let j = (next.position().dist(&target) - rho_d).abs();
        assert!(j < 2e-4, "J = {j}");
    }

    #[test]
    fn matches_dense_grid_optimum() {
        let cfg = cfg();
        let rho_d = cfg.reachability_radius();
        let params = SamplingParams {
            objective: SamplingObjective::RingDistance,
            ..SamplingParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for case in 0..100 {
            let pose = Pose2D::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-3.0..3.0),
            );
            let target = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let cmd = velocity_sampling_step(pose, target, rho_d, &cfg, &params, &mut rng);
            let next = step_pose(pose, cmd, cfg.dt).unwrap();
            let got = (next.position().dist(&target) - rho_d).abs();
            // Dense grid oracle over the command box (10^4 combinations).
            let mut best = f64::INFINITY;
            for i in 0..=100 {
                for j in 0..=100 {
                    let v = -cfg.v_max + 2.0 * cfg.v_max * i as f64 / 100.0;
                    let w = -cfg.omega_max + 2.0 * cfg.omega_max * j as f64 / 100.0;
                    let p = step_pose(pose, VelocityCommand::new(v, w), cfg.dt).unwrap();
                    best = best.min((p.position().dist(&target) - rho_d).abs());
                }
            }
            // 500 random samples against a 10^4 grid: the sampled optimum
            // cannot beat the grid by much and must come close to it.
            assert!(
                got <= best + 1e-3,
                "case {case}: sampled J {got} far above grid optimum {best}"
            );
        }
    }

    #[test]
    fn far_target_picks_maximal_progress() {
        let cfg = cfg();
        let rho_d = cfg.reachability_radius();
        let params = SamplingParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let target = Point2::new(10.0, 0.0);
        let cmd = velocity_sampling_step(pose, target, rho_d, &cfg, &params, &mut rng);
        // Moving at nearly full speed toward the target wins.
        assert!(cmd.v > 0.9 * cfg.v_max, "v = {}", cmd.v);
    }

    #[test]
    fn command_sequence_is_bit_reproducible() {
        let cfg = cfg();
        let params = SamplingParams::default();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut pose = Pose2D::new(0.0, 0.0, 0.0);
            let mut cmds = Vec::new();
            for _ in 0..25 {
                let cmd = velocity_sampling_step(
                    pose,
                    Point2::new(2.0, 1.0),
                    0.152,
                    &cfg,
                    &params,
                    &mut rng,
                );
                pose = step_pose(pose, cmd, cfg.dt).unwrap();
                cmds.push((cmd.v.to_bits(), cmd.omega.to_bits()));
            }
            cmds
        };
        assert_eq!(run(), run());
    }
}
