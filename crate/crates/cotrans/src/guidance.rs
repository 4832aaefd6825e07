//! Proportional-navigation base tracker.
//!
//! The turn rate responds to the line-of-sight rotation rate: the lateral
//! acceleration alpha_n = N * lambda_dot * v acts centripetally, so
//! omega = alpha_n / v = N * lambda_dot with the forward speed held
//! constant. The LOS rate is a wrapped backward difference; the first
//! step after (re)targeting aligns the heading instead since no previous
//! LOS exists yet.

use serde::{Deserialize, Serialize};

use crate::config::{PngParams, RobotConfig};
use crate::diff_drive::VelocityCommand;
use crate::error::Error;
use crate::geometry::{wrap_angle, Point2, Pose2D};

/// Per-robot tracker state threaded through the steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PngState {
    /// LOS angle at the previous step; cleared on every target switch.
    pub prev_los: Option<f64>,
    /// Navigation constant N.
    pub nav_constant: f64,
    /// Constant pursuit speed (m/s).
    pub v_cruise: f64,
}

impl PngState {
    pub fn new(params: &PngParams) -> Self {
        Self {
            prev_los: None,
            nav_constant: params.nav_constant,
            v_cruise: params.v_cruise,
        }
    }

    /// Forget the LOS history (call at every target switch).
    pub fn reset(&mut self) {
        self.prev_los = None;
    }
}

/// Line-of-sight bearing from the pose position to the target.
pub fn los_angle(pose: Pose2D, target: Point2) -> Result<f64, Error> {
    let dx = target.x - pose.x;
    let dy = target.y - pose.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateLos);
    }
    Ok(wrap_angle(dy.atan2(dx)))
}

/// One tracker step toward a stationary target. Returns the command and
/// the updated state.
pub fn png_step(
    state: PngState,
    pose: Pose2D,
    target: Point2,
    cfg: &RobotConfig,
    dt: f64,
) -> Result<(VelocityCommand, PngState), Error> {
    let lambda = los_angle(pose, target)?;
    let heading_error = wrap_angle(lambda - pose.theta);

    let cmd = if heading_error.abs() > std::f64::consts::FRAC_PI_2 {
        // Pre-rotation: constant-speed pursuit of a near-behind target can
        // orbit it, so turn in place until the LOS is in front.
        VelocityCommand::new(0.0, (heading_error / dt).clamp(-cfg.omega_max, cfg.omega_max))
    } else {
        match state.prev_los {
            None => VelocityCommand::new(
                state.v_cruise,
                (heading_error / dt).clamp(-cfg.omega_max, cfg.omega_max),
            ),
            Some(prev) => {
                let los_rate = wrap_angle(lambda - prev) / dt;
                let omega = (state.nav_constant * los_rate).clamp(-cfg.omega_max, cfg.omega_max);
                VelocityCommand::new(state.v_cruise, omega)
            }
        }
    };

    let next = PngState {
        prev_los: Some(lambda),
        ..state
    };
    Ok((cmd, next))
}

/// Reachability distance rho_d = gamma * rho_l.
pub fn reachability_radius(cfg: &RobotConfig) -> f64 {
    cfg.reachability_radius()
}

/// Closed-ball membership test against the reachability distance.
pub fn reached(pose: Pose2D, target: Point2, rho_d: f64) -> bool {
    pose.position().dist(&target) <= rho_d
}
