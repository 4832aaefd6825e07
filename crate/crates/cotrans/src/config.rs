//! Runtime configuration: platform limits, arm description, tracker and
//! MPC parameters. Everything is overridable from a TOML file; the
//! defaults reproduce the benchmark setup.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::arm::ArmConfig;
use crate::error::Error;
use crate::geometry::Point2;

/// Per-robot platform and arm configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    /// Platform linear velocity limit (m/s).
    pub v_max: f64,
    /// Platform angular velocity limit (rad/s).
    pub omega_max: f64,
    /// Manipulator reachability radius (m); 0 derives it from the arm
    /// link lengths.
    pub rho_l: f64,
    /// Tolerable fraction of the reachability used for target switching.
    pub gamma: f64,
    /// Command period (s).
    pub dt: f64,
    /// Arm geometry and joint limits.
    pub arm: ArmConfig,
    /// Planar offset of the arm base from the platform center (m).
    pub mount_offset: Point2,
}

impl Default for RobotConfig {
    fn default() -> Self {
        let arm = ArmConfig::default();
        let rho_l = arm.chain().max_reach();
        Self {
            // TurtleBot3 Waffle Pi platform limits.
            v_max: 0.26,
            omega_max: 1.82,
            rho_l,
            gamma: 0.4,
            dt: 0.08,
            arm,
            // Side-mounted arm: keeps the projected candidate points off
            // the yaw axis, where the levelled gripper cannot reach.
            mount_offset: Point2::new(0.0, -0.08),
        }
    }
}

impl RobotConfig {
    /// Replace the `rho_l = 0` sentinel with the arm-derived reach and
    /// check all invariants.
    pub fn normalize(&mut self) -> Result<(), Error> {
        if self.rho_l == 0.0 {
            self.rho_l = self.arm.chain().max_reach();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.v_max > 0.0) {
            return Err(Error::InvalidConfig(format!("v_max must be > 0, got {}", self.v_max)));
        }
        if !(self.omega_max > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "omega_max must be > 0, got {}",
                self.omega_max
            )));
        }
        if !(self.rho_l > 0.0) {
            return Err(Error::InvalidConfig(format!("rho_l must be > 0, got {}", self.rho_l)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        self.arm.validate()?;
        if !self.mount_offset.x.is_finite() || !self.mount_offset.y.is_finite() {
            return Err(Error::InvalidConfig("mount_offset must be finite".into()));
        }
        Ok(())
    }

    /// Reachability radius used for target switching: gamma * rho_l.
    pub fn reachability_radius(&self) -> f64 {
        self.gamma * self.rho_l
    }
}

/// Proportional-navigation tracker parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PngParams {
    /// Navigation constant N.
    pub nav_constant: f64,
    /// Constant forward speed while pursuing (m/s).
    pub v_cruise: f64,
}

impl Default for PngParams {
    fn default() -> Self {
        Self {
            nav_constant: 6.0,
            v_cruise: 0.2,
        }
    }
}

/// Objective used to rank sampled velocities. The default heads straight
/// for the target point; ring seeking scatters the bases sideways once
/// inside the ring, which the rod cannot absorb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingObjective {
    /// |d - rho_d|: reach the ring at the reachability distance.
    RingDistance,
    /// d: move for the target point itself.
    PointDistance,
}

/// Random velocity-sampling tracker parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingParams {
    /// Candidate commands drawn per step.
    pub count: usize,
    pub objective: SamplingObjective,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            count: 500,
            objective: SamplingObjective::PointDistance,
        }
    }
}

/// SLQ-MPC parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcParams {
    /// Horizon length in steps.
    pub horizon: usize,
    /// Diagonal end-effector error weight.
    pub q_weight: f64,
    /// Diagonal input weight.
    pub r_weight: f64,
    /// Relaxed-barrier switch point.
    pub barrier_delta: f64,
    /// Relaxed-barrier weight.
    pub barrier_weight: f64,
    /// Reference speed used to time-parameterize the trajectory (m/s).
    pub v_ref: f64,
    /// Extra settling time appended after the reference ends (s).
    pub settle_time: f64,
}

impl Default for MpcParams {
    fn default() -> Self {
        Self {
            horizon: 20,
            q_weight: 100.0,
            r_weight: 0.1,
            barrier_delta: 0.1,
            barrier_weight: 0.01,
            v_ref: 0.2,
            settle_time: 2.0,
        }
    }
}

/// Simulation-wide parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Hard cap on timesteps before a run is declared stuck.
    pub step_budget: usize,
    /// Waypoint count per trajectory for generated scenarios.
    pub n_d: usize,
    /// Which robot solves the unconstrained IK (0 or 1); the other keeps
    /// the load length.
    pub leader: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            step_budget: 100_000,
            n_d: 60,
            leader: 0,
        }
    }
}

/// Roadmap planner parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    /// Free-space samples drawn for the roadmap.
    pub n_samples: usize,
    /// Neighbours each vertex connects to.
    pub neighbors: usize,
    /// Obstacle inflation radius (m) covering the platform footprint.
    pub clearance: f64,
    /// Rejection-sampling budget per requested sample.
    pub attempt_factor: usize,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            n_samples: 200,
            neighbors: 10,
            clearance: 0.22,
            attempt_factor: 1000,
        }
    }
}

/// Top-level configuration file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub robot: RobotConfig,
    pub png: PngParams,
    pub sampling: SamplingParams,
    pub mpc: MpcParams,
    pub sim: SimParams,
    pub planner: PlannerParams,
}

impl SimConfig {
    pub fn normalize(&mut self) -> Result<(), Error> {
        self.robot.normalize()?;
        if !(self.png.nav_constant > 0.0) {
            return Err(Error::InvalidConfig("png.nav_constant must be > 0".into()));
        }
        if !(self.png.v_cruise > 0.0 && self.png.v_cruise <= self.robot.v_max) {
            return Err(Error::InvalidConfig(format!(
                "png.v_cruise must be in (0, v_max], got {}",
                self.png.v_cruise
            )));
        }
        if self.sampling.count == 0 {
            return Err(Error::InvalidConfig("sampling.count must be >= 1".into()));
        }
        if self.mpc.horizon < 2 {
            return Err(Error::InvalidConfig("mpc.horizon must be >= 2".into()));
        }
        if !(self.mpc.q_weight > 0.0 && self.mpc.r_weight > 0.0) {
            return Err(Error::InvalidConfig("mpc weights must be > 0".into()));
        }
        if !(self.mpc.barrier_delta > 0.0 && self.mpc.barrier_delta < 1.0) {
            return Err(Error::InvalidConfig(
                "mpc.barrier_delta must be in (0, 1)".into(),
            ));
        }
        if self.sim.leader > 1 {
            return Err(Error::InvalidConfig("sim.leader must be 0 or 1".into()));
        }
        if self.sim.n_d < 2 {
            return Err(Error::InvalidConfig("sim.n_d must be >= 2".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: SimConfig =
            toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        cfg.normalize()?;
        Ok(cfg)
    }

    /// Hash of the effective configuration, recorded with every run.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let mut cfg = SimConfig::default();
        cfg.normalize().unwrap();
        assert!((cfg.robot.rho_l - 0.38).abs() < 1e-12);
        assert!((cfg.robot.reachability_radius() - 0.152).abs() < 1e-12);
    }

    #[test]
    fn rho_l_sentinel_is_derived_from_arm() {
        let mut cfg = RobotConfig {
            rho_l: 0.0,
            ..RobotConfig::default()
        };
        cfg.normalize().unwrap();
        assert_eq!(cfg.rho_l, cfg.arm.chain().max_reach());
    }

    #[test]
    fn toml_round_trip_and_stable_hash() {
        let cfg = SimConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: SimConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn partial_toml_overrides_defaults() {
        let text = "[png]\nv_cruise = 0.15\n";
        let cfg: SimConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.png.v_cruise, 0.15);
        assert_eq!(cfg.png.nav_constant, 6.0);
        assert_eq!(cfg.sampling.count, 500);
    }

    #[test]
    fn cruise_above_v_max_is_rejected() {
        let mut cfg = SimConfig::default();
        cfg.png.v_cruise = 1.0;
        assert!(cfg.normalize().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[robot]\nv_mx = 0.2\n";
        assert!(toml::from_str::<SimConfig>(text).is_err());
    }
}
