//! Differential-drive forward kinematics.
//!
//! One timestep advances the pose along a circular arc of radius `v/omega`;
//! below `EPS_OMEGA` the arc degenerates to a straight line and the
//! closed form loses precision, so the linear limit is used instead.

use serde::{Deserialize, Serialize};

use crate::config::RobotConfig;
use crate::error::Error;
use crate::geometry::{wrap_angle, Pose2D};

/// Angular rate below which the arc model switches to the straight-line
/// limit (the arc radius would exceed 1e6 * v meters).
pub const EPS_OMEGA: f64 = 1e-6;

/// Base velocity command: linear speed and turn rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    /// Linear velocity (m/s).
    pub v: f64,
    /// Angular velocity (rad/s).
    pub omega: f64,
}

impl VelocityCommand {
    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub const fn zero() -> Self {
        Self { v: 0.0, omega: 0.0 }
    }

    /// Clamp into the platform limits of `cfg`.
    pub fn clamped(&self, cfg: &RobotConfig) -> Self {
        Self {
            v: self.v.clamp(-cfg.v_max, cfg.v_max),
            omega: self.omega.clamp(-cfg.omega_max, cfg.omega_max),
        }
    }
}

/// Advance a platform pose under a velocity command over one timestep.
pub fn step_pose(pose: Pose2D, cmd: VelocityCommand, dt: f64) -> Result<Pose2D, Error> {
    if !(pose.x.is_finite() && pose.y.is_finite() && pose.theta.is_finite()) {
        return Err(Error::NonFinite("pose".into()));
    }
    if !(cmd.v.is_finite() && cmd.omega.is_finite()) {
        return Err(Error::NonFinite("velocity command".into()));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }

    let theta_next = wrap_angle(pose.theta + cmd.omega * dt);
    if cmd.omega.abs() >= EPS_OMEGA {
        let r = cmd.v / cmd.omega;
        let a = pose.theta + cmd.omega * dt;
        Ok(Pose2D {
            x: pose.x + r * (a.sin() - pose.theta.sin()),
            y: pose.y - r * (a.cos() - pose.theta.cos()),
            theta: theta_next,
        })
    } else {
        Ok(Pose2D {
            x: pose.x + cmd.v * dt * pose.theta.cos(),
            y: pose.y + cmd.v * dt * pose.theta.sin(),
            theta: theta_next,
        })
    }
}

/// World-frame pose of the arm base: the platform pose composed with the
/// planar mount offset.
pub fn arm_base_pose(platform: Pose2D, cfg: &RobotConfig) -> Pose2D {
    let p = platform.transform_point(cfg.mount_offset);
    Pose2D {
        x: p.x,
        y: p.y,
        theta: platform.theta,
    }
}
