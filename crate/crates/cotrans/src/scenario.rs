//! Scenario construction and the scenario file format.
//!
//! The benchmark scenario is the concentric-semicircle course: each
//! trajectory is a 1 m straight lead-in, a semicircle (radius 1 m inner,
//! 1.65 m outer) and a 1 m straight lead-out at constant carry height.
//! Waypoint i of both trajectories sits at the same normalized parameter
//! of the matched three-part course, so paired waypoints stay exactly one
//! load length apart.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{Point3, Pose2D, Trajectory3D};
use crate::world::World2D;

pub const SCENARIO_FORMAT_HEADER: &str = "cotrans-scenario v1";

/// A complete two-robot transport task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Desired end-effector trajectories, robot 1 then robot 2.
    pub trajectories: [Trajectory3D; 2],
    pub start_poses: [Pose2D; 2],
    /// Rod length (m).
    pub load_length: f64,
    pub world: Option<World2D>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), Error> {
        if self.trajectories[0].len() != self.trajectories[1].len() {
            return Err(Error::InvalidScenario(format!(
                "trajectories must share n_d: {} vs {}",
                self.trajectories[0].len(),
                self.trajectories[1].len()
            )));
        }
        if !(self.load_length > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "load length must be > 0, got {}",
                self.load_length
            )));
        }
        Ok(())
    }

    /// Waypoints per trajectory.
    pub fn n_d(&self) -> usize {
        self.trajectories[0].len()
    }

    /// Benchmark course with `n_d` waypoints per trajectory.
    pub fn benchmark(n_d: usize) -> Result<Self, Error> {
        if n_d < 2 {
            return Err(Error::InvalidScenario(format!("n_d must be >= 2, got {n_d}")));
        }
        const R_INNER: f64 = 1.0;
        const R_OUTER: f64 = 1.65;
        const STRAIGHT: f64 = 1.0;
        const CARRY_Z: f64 = 0.2;
        const LOAD: f64 = 0.65;

        // Common parameter breakpoints from the rod-midpoint course, so
        // paired waypoints share their phase along the three parts.
        let r_mid = 0.5 * (R_INNER + R_OUTER);
        let total = 2.0 * STRAIGHT + std::f64::consts::PI * r_mid;
        let u1 = STRAIGHT / total;
        let u2 = (STRAIGHT + std::f64::consts::PI * r_mid) / total;

        let course = |radius: f64, u: f64| -> Point3 {
            if u <= u1 {
                let f = u / u1;
                Point3::new(radius, -STRAIGHT + f * STRAIGHT, CARRY_Z)
            } else if u <= u2 {
                let phi = (u - u1) / (u2 - u1) * std::f64::consts::PI;
                Point3::new(radius * phi.cos(), radius * phi.sin(), CARRY_Z)
            } else {
                let f = (u - u2) / (1.0 - u2);
                Point3::new(-radius, -f * STRAIGHT, CARRY_Z)
            }
        };

        let sample = |radius: f64| -> Result<Trajectory3D, Error> {
            let pts = (0..n_d)
                .map(|i| course(radius, i as f64 / (n_d - 1) as f64))
                .collect();
            Trajectory3D::new(pts)
        };

        // Both robots start at their first waypoint facing along the
        // first segment tangent (+y).
        let heading = std::f64::consts::FRAC_PI_2;
        Ok(Self {
            trajectories: [sample(R_INNER)?, sample(R_OUTER)?],
            start_poses: [
                Pose2D::new(R_INNER, -STRAIGHT, heading),
                Pose2D::new(R_OUTER, -STRAIGHT, heading),
            ],
            load_length: LOAD,
            world: None,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let mut text = String::new();
        let _ = writeln!(text, "{SCENARIO_FORMAT_HEADER}");
        let _ = writeln!(text, "load_length {}", self.load_length);
        for (i, pose) in self.start_poses.iter().enumerate() {
            let _ = writeln!(text, "start {} {} {} {}", i + 1, pose.x, pose.y, pose.theta);
        }
        for (i, traj) in self.trajectories.iter().enumerate() {
            let _ = writeln!(text, "trajectory {} {}", i + 1, traj.len());
            for w in traj.waypoints() {
                let _ = writeln!(text, "{} {} {}", w.x, w.y, w.z);
            }
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidScenario(msg) => Error::parse(path, msg),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let bad = |msg: String| Error::InvalidScenario(msg);
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| bad("empty scenario file".into()))?;
        if header != SCENARIO_FORMAT_HEADER {
            return Err(bad(format!(
                "unsupported header {header:?}; expected {SCENARIO_FORMAT_HEADER:?}"
            )));
        }
        let mut load_length = None;
        let mut starts: [Option<Pose2D>; 2] = [None, None];
        let mut trajs: [Option<Trajectory3D>; 2] = [None, None];
        while let Some(line) = lines.next() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("load_length") => {
                    let v: f64 = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| bad("bad load_length line".into()))?;
                    load_length = Some(v);
                }
                Some("start") => {
                    let nums: Vec<f64> = it
                        .map(|t| t.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| bad(format!("bad start line: {e}")))?;
                    if nums.len() != 4 {
                        return Err(bad("start line needs: index x y theta".into()));
                    }
                    let idx = nums[0] as usize;
                    if !(1..=2).contains(&idx) {
                        return Err(bad(format!("start index must be 1 or 2, got {idx}")));
                    }
                    starts[idx - 1] = Some(Pose2D::new(nums[1], nums[2], nums[3]));
                }
                Some("trajectory") => {
                    let idx: usize = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| bad("trajectory line needs an index".into()))?;
                    let count: usize = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| bad("trajectory line needs a waypoint count".into()))?;
                    if !(1..=2).contains(&idx) {
                        return Err(bad(format!("trajectory index must be 1 or 2, got {idx}")));
                    }
                    let mut pts = Vec::with_capacity(count);
                    for _ in 0..count {
                        let wline = lines
                            .next()
                            .ok_or_else(|| bad("truncated waypoint list".into()))?;
                        let nums: Vec<f64> = wline
                            .split_whitespace()
                            .map(|t| t.parse::<f64>())
                            .collect::<Result<_, _>>()
                            .map_err(|e| bad(format!("bad waypoint line: {e}")))?;
                        if nums.len() != 3 {
                            return Err(bad(format!("waypoint needs 3 numbers, got {wline:?}")));
                        }
                        pts.push(Point3::new(nums[0], nums[1], nums[2]));
                    }
                    trajs[idx - 1] = Some(Trajectory3D::new(pts).map_err(|e| bad(e.to_string()))?);
                }
                Some(other) => return Err(bad(format!("unknown directive {other:?}"))),
                None => unreachable!("blank lines are filtered"),
            }
        }
        let scenario = Scenario {
            trajectories: [
                trajs[0].take().ok_or_else(|| bad("missing trajectory 1".into()))?,
                trajs[1].take().ok_or_else(|| bad("missing trajectory 2".into()))?,
            ],
            start_poses: [
                starts[0].ok_or_else(|| bad("missing start 1".into()))?,
                starts[1].ok_or_else(|| bad("missing start 2".into()))?,
            ],
            load_length: load_length.ok_or_else(|| bad("missing load_length".into()))?,
            world: None,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Analytic course length: two straights plus a semicircle.
    fn course_length(radius: f64) -> f64 {
        2.0 + PI * radius
    }

    #[test]
    fn benchmark_course_geometry() {
        let s = Scenario::benchmark(60).unwrap();
        assert_eq!(s.n_d(), 60);
        assert_abs_diff_eq!(s.load_length, 0.65, epsilon = 1e-15);
        assert_abs_diff_eq!(course_length(1.0), 5.141592653589793, epsilon = 1e-12);
        assert_abs_diff_eq!(course_length(1.65), 7.183627878423159, epsilon = 1e-12);
        // Polyline length approaches the analytic arc length from below.
        assert_abs_diff_eq!(s.trajectories[0].xy_length(), course_length(1.0), epsilon = 5e-3);
        assert_abs_diff_eq!(s.trajectories[1].xy_length(), course_length(1.65), epsilon = 5e-3);

        let inner = s.trajectories[0].waypoints();
        let outer = s.trajectories[1].waypoints();
        // Endpoints: starts at (r, -1), goals at (-r, -1).
        assert_abs_diff_eq!(inner[0].x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inner[0].y, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(outer[0].x, 1.65, epsilon = 1e-12);
        assert_abs_diff_eq!(inner[59].x, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inner[59].y, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(outer[59].x, -1.65, epsilon = 1e-12);
        // Carry height everywhere.
        for w in inner.iter().chain(outer) {
            assert_abs_diff_eq!(w.z, 0.2, epsilon = 1e-15);
        }
        // Start poses face the first segment tangent.
        assert_eq!(s.start_poses[0].x, 1.0);
        assert_eq!(s.start_poses[1].x, 1.65);
        assert_abs_diff_eq!(s.start_poses[0].theta, PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn benchmark_pairs_separated_by_load_length() {
        let s = Scenario::benchmark(60).unwrap();
        for (a, b) in s.trajectories[0]
            .waypoints()
            .iter()
            .zip(s.trajectories[1].waypoints())
        {
            assert_abs_diff_eq!(a.dist(b), 0.65, epsilon = 1e-12);
        }
    }

    #[test]
    fn benchmark_arc_pairs_are_radial() {
        let s = Scenario::benchmark(120).unwrap();
        for (a, b) in s.trajectories[0]
            .waypoints()
            .iter()
            .zip(s.trajectories[1].waypoints())
        {
            let ra = (a.x * a.x + a.y * a.y).sqrt();
            if a.y > 1e-9 {
                // On the semicircle: same polar angle, radii 1 and 1.65.
                assert_abs_diff_eq!(ra, 1.0, epsilon = 1e-9);
                let rb = (b.x * b.x + b.y * b.y).sqrt();
                assert_abs_diff_eq!(rb, 1.65, epsilon = 1e-9);
                assert_abs_diff_eq!(a.y.atan2(a.x), b.y.atan2(b.x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn benchmark_waypoint_spacing_is_below_default_reachability() {
        let s = Scenario::benchmark(60).unwrap();
        let rho_d = crate::config::RobotConfig::default().reachability_radius();
        for traj in &s.trajectories {
            for pair in traj.waypoints().windows(2) {
                assert!(pair[0].dist(&pair[1]) < rho_d);
            }
        }
    }

    #[test]
    fn scenario_file_round_trip() {
        let s = Scenario::benchmark(12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.scenario");
        s.save(&path).unwrap();
        let back = Scenario::load(&path).unwrap();
        assert_eq!(s.trajectories, back.trajectories);
        assert_eq!(s.start_poses, back.start_poses);
        assert_eq!(s.load_length, back.load_length);
    }

    #[test]
    fn scenario_rejects_mismatched_trajectories() {
        let mut s = Scenario::benchmark(10).unwrap();
        s.trajectories[1] = Trajectory3D::new(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
        ])
        .unwrap();
        assert!(s.validate().is_err());
    }
}
