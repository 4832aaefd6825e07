//! 4-DOF arm kinematics: forward kinematics of a yaw-pitch-pitch-pitch
//! serial chain and the two constrained position-IK solves used by the
//! leader and the follower.
//!
//! Joint convention: `beta[0]` is the yaw about the vertical axis;
//! `beta[1..4]` are elevations of the three pitch links, measured from
//! horizontal (all zeros extends the arm horizontally along the base x
//! axis). The gripper-levelling requirement is the linear equality
//! `beta[1] + beta[2] + beta[3] = pitch_sum`.
//!
//! Both IK problems are solved with a damped-Newton iteration over the
//! per-step joint box (active-set reduction at the bounds, exact
//! Hessians); the levelling equality and the follower's load-length
//! equality enter as augmented-Lagrangian terms so the iteration stays
//! smooth while the true violations are reported exactly.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::config::RobotConfig;
use crate::diff_drive::arm_base_pose;
use crate::error::Error;
use crate::geometry::{Point3, Pose2D};

/// Joint-space vector of the 4-DOF arm.
pub type JointVector = [f64; 4];

/// Geometry of the serial chain. Link lengths come from configuration,
/// never from code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    /// Vertical offset from the arm mounting plane to the first pitch
    /// joint (m).
    pub base_height: f64,
    /// Lengths of the three pitch links (m).
    pub link_lengths: [f64; 3],
    /// Required sum of the pitch angles (rad); 0 keeps the gripper
    /// parallel to the XY plane.
    pub pitch_sum: f64,
}

impl KinematicChain {
    pub fn validate(&self) -> Result<(), Error> {
        if self.base_height <= 0.0 || !self.base_height.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "base_height must be > 0, got {}",
                self.base_height
            )));
        }
        for (i, l) in self.link_lengths.iter().enumerate() {
            if *l <= 0.0 || !l.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "link length {i} must be > 0, got {l}"
                )));
            }
        }
        if !self.pitch_sum.is_finite() {
            return Err(Error::InvalidConfig("pitch_sum must be finite".into()));
        }
        Ok(())
    }

    /// Maximum reach radius from the first pitch joint (rho_l).
    pub fn max_reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }
}

/// Full arm description as stored in a chain file: geometry plus joint
/// limits and rate limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmConfig {
    /// Joint axes, base to tip. Only the yaw-pitch-pitch-pitch layout is
    /// supported.
    pub axes: [String; 4],
    pub base_height: f64,
    pub link_lengths: [f64; 3],
    pub pitch_sum: f64,
    pub lower_limits: [f64; 4],
    pub upper_limits: [f64; 4],
    pub rate_limits: [f64; 4],
}

impl Default for ArmConfig {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            axes: [
                "yaw".to_string(),
                "pitch".to_string(),
                "pitch".to_string(),
                "pitch".to_string(),
            ],
            // OpenMANIPULATOR-X style geometry.
            base_height: 0.077,
            link_lengths: [0.130, 0.124, 0.126],
            pitch_sum: 0.0,
            lower_limits: [-0.9 * PI, -0.57 * PI, -0.3 * PI, -0.5 * PI],
            upper_limits: [0.9 * PI, 0.5 * PI, 0.44 * PI, 0.65 * PI],
            rate_limits: [4.0; 4],
        }
    }
}

impl ArmConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.axes[0] != "yaw" || self.axes[1..].iter().any(|a| a != "pitch") {
            return Err(Error::InvalidConfig(format!(
                "unsupported joint axes {:?}; expected yaw, pitch, pitch, pitch",
                self.axes
            )));
        }
        self.chain().validate()?;
        for i in 0..4 {
            if self.lower_limits[i] > self.upper_limits[i] {
                return Err(Error::InvalidConfig(format!(
                    "joint {i} lower limit exceeds upper limit"
                )));
            }
            if self.rate_limits[i] <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "joint {i} rate limit must be > 0"
                )));
            }
        }
        Ok(())
    }

    pub fn chain(&self) -> KinematicChain {
        KinematicChain {
            base_height: self.base_height,
            link_lengths: self.link_lengths,
            pitch_sum: self.pitch_sum,
        }
    }

    /// Joint state seeded at the middle of the limit box.
    pub fn mid_range_state(&self) -> JointState {
        let beta = [
            0.5 * (self.lower_limits[0] + self.upper_limits[0]),
            0.5 * (self.lower_limits[1] + self.upper_limits[1]),
            0.5 * (self.lower_limits[2] + self.upper_limits[2]),
            0.5 * (self.lower_limits[3] + self.upper_limits[3]),
        ];
        JointState {
            beta,
            lower: self.lower_limits,
            upper: self.upper_limits,
            rate_limit: self.rate_limits,
        }
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ArmConfig =
            toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Joint angles with their box and rate limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub beta: JointVector,
    pub lower: JointVector,
    pub upper: JointVector,
    /// Per-joint rate limit (rad/s).
    pub rate_limit: JointVector,
}

impl JointState {
    pub fn validate(&self) -> Result<(), Error> {
        for i in 0..4 {
            if self.beta[i] < self.lower[i] - 1e-12 || self.beta[i] > self.upper[i] + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "joint {i} angle {} outside [{}, {}]",
                    self.beta[i], self.lower[i], self.upper[i]
                )));
            }
        }
        Ok(())
    }

    /// Per-step box: rate window intersected with the joint limits.
    fn step_box(&self, dt: f64) -> ([f64; 4], [f64; 4]) {
        let mut lo = [0.0; 4];
        let mut hi = [0.0; 4];
        for i in 0..4 {
            lo[i] = (self.beta[i] - self.rate_limit[i] * dt).max(self.lower[i]);
            hi[i] = (self.beta[i] + self.rate_limit[i] * dt).min(self.upper[i]);
        }
        (lo, hi)
    }
}

/// Outcome of an IK solve. `residual` is the end-effector position error
/// at the returned angles; `constraint_violation` is the absolute
/// load-length error for follower solves (0 for the leader).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkResult {
    pub beta_star: JointVector,
    pub residual: f64,
    pub constraint_violation: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// End-effector position in the arm-base frame.
pub fn forward_kinematics(chain: &KinematicChain, beta: &JointVector) -> Point3 {
    let [a2, a3, a4] = chain.link_lengths;
    let p2 = beta[1];
    let p23 = beta[1] + beta[2];
    let p234 = beta[1] + beta[2] + beta[3];
    let r = a2 * p2.cos() + a3 * p23.cos() + a4 * p234.cos();
    let z = chain.base_height + a2 * p2.sin() + a3 * p23.sin() + a4 * p234.sin();
    let (s1, c1) = beta[0].sin_cos();
    Point3::new(r * c1, r * s1, z)
}

/// Analytic Jacobian of `forward_kinematics` (3x4).
pub fn fk_jacobian(chain: &KinematicChain, beta: &JointVector) -> SMatrix<f64, 3, 4> {
    let [a2, a3, a4] = chain.link_lengths;
    let p2 = beta[1];
    let p23 = beta[1] + beta[2];
    let p234 = beta[1] + beta[2] + beta[3];
    let r = a2 * p2.cos() + a3 * p23.cos() + a4 * p234.cos();
    let (s1, c1) = beta[0].sin_cos();

    // Radial and vertical partials of the planar sub-chain.
    let dr = [
        -a2 * p2.sin() - a3 * p23.sin() - a4 * p234.sin(),
        -a3 * p23.sin() - a4 * p234.sin(),
        -a4 * p234.sin(),
    ];
    let dz = [
        a2 * p2.cos() + a3 * p23.cos() + a4 * p234.cos(),
        a3 * p23.cos() + a4 * p234.cos(),
        a4 * p234.cos(),
    ];

    let mut j = SMatrix::<f64, 3, 4>::zeros();
    j[(0, 0)] = -r * s1;
    j[(1, 0)] = r * c1;
    j[(2, 0)] = 0.0;
    for k in 0..3 {
        j[(0, k + 1)] = c1 * dr[k];
        j[(1, k + 1)] = s1 * dr[k];
        j[(2, k + 1)] = dz[k];
    }
    j
}

/// Second derivatives of the arm-frame end-effector position: one 4x4
/// Hessian per coordinate.
pub fn fk_hessians(chain: &KinematicChain, beta: &JointVector) -> [SMatrix<f64, 4, 4>; 3] {
    let a = chain.link_lengths;
    let p = [
        beta[1],
        beta[1] + beta[2],
        beta[1] + beta[2] + beta[3],
    ];
    // Tail sums over the links a pitch joint moves.
    let mut dr = [0.0; 3];
    let mut dz = [0.0; 3];
    for i in 0..3 {
        for k in i..3 {
            dr[i] -= a[k] * p[k].sin();
            dz[i] += a[k] * p[k].cos();
        }
    }
    let r = dz[0];
    let (s1, c1) = beta[0].sin_cos();

    let mut hx = SMatrix::<f64, 4, 4>::zeros();
    let mut hy = SMatrix::<f64, 4, 4>::zeros();
    let mut hz = SMatrix::<f64, 4, 4>::zeros();
    hx[(0, 0)] = -r * c1;
    hy[(0, 0)] = -r * s1;
    for i in 0..3 {
        hx[(0, i + 1)] = -s1 * dr[i];
        hx[(i + 1, 0)] = -s1 * dr[i];
        hy[(0, i + 1)] = c1 * dr[i];
        hy[(i + 1, 0)] = c1 * dr[i];
        for j in 0..3 {
            let m = i.max(j);
            hx[(i + 1, j + 1)] = -c1 * dz[m];
            hy[(i + 1, j + 1)] = -s1 * dz[m];
            hz[(i + 1, j + 1)] = dr[m];
        }
    }
    [hx, hy, hz]
}

/// End-effector position in the world frame for a platform pose.
pub fn ee_world(platform: Pose2D, cfg: &RobotConfig, beta: &JointVector) -> Point3 {
    let base = arm_base_pose(platform, cfg);
    let local = forward_kinematics(&cfg.arm.chain(), beta);
    let xy = base.transform_point(local.xy());
    Point3::new(xy.x, xy.y, local.z)
}

/// World-frame end-effector Jacobian for a fixed platform pose (3x4).
pub fn ee_world_jacobian(
    arm_base: Pose2D,
    chain: &KinematicChain,
    beta: &JointVector,
) -> SMatrix<f64, 3, 4> {
    let j = fk_jacobian(chain, beta);
    let (s, c) = arm_base.theta.sin_cos();
    let mut out = SMatrix::<f64, 3, 4>::zeros();
    for col in 0..4 {
        out[(0, col)] = c * j[(0, col)] - s * j[(1, col)];
        out[(1, col)] = s * j[(0, col)] + c * j[(1, col)];
        out[(2, col)] = j[(2, col)];
    }
    out
}

/// Standard leader IK: nearest in-limit joint vector whose end-effector
/// reaches `target_in_base`, warm-started at the previous state.
pub fn solve_ik_leader(
    chain: &KinematicChain,
    target_in_base: Point3,
    prev: &JointState,
    dt: f64,
) -> Result<IkResult, Error> {
    if !target_in_base.is_finite() {
        return Err(Error::NonFinite("IK target".into()));
    }
    prev.validate()?;
    let (lo, hi) = prev.step_box(dt);
    Ok(solve_constrained(chain, target_in_base, prev.beta, lo, hi, None))
}

/// Follower IK: additionally keeps the end-effector at distance `l` from
/// the leader's estimated world-frame end-effector.
#[allow(clippy::too_many_arguments)]
pub fn solve_ik_follower(
    chain: &KinematicChain,
    target_in_base: Point3,
    prev: &JointState,
    dt: f64,
    leader_ee_world: Point3,
    own_base: Pose2D,
    cfg: &RobotConfig,
    l: f64,
) -> Result<IkResult, Error> {
    if !target_in_base.is_finite() || !leader_ee_world.is_finite() {
        return Err(Error::NonFinite("IK target".into()));
    }
    if l <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "load length must be > 0, got {l}"
        )));
    }
    prev.validate()?;
    let (lo, hi) = prev.step_box(dt);
    let load = LoadConstraint {
        leader_ee: leader_ee_world,
        arm_base: arm_base_pose(own_base, cfg),
        length: l,
    };
    Ok(solve_constrained(
        chain,
        target_in_base,
        prev.beta,
        lo,
        hi,
        Some(load),
    ))
}

/// Acceptance tolerance on the load-length equality (m).
pub const LOAD_LENGTH_TOL: f64 = 1e-4;
/// Acceptance tolerance on the gripper-levelling equality (rad).
const PITCH_SUM_TOL: f64 = 1e-7;
/// First-order optimality tolerance of the inner iteration.
const OPT_TOL: f64 = 1e-8;
/// Total inner-iteration budget per attempt.
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy)]
struct LoadConstraint {
    leader_ee: Point3,
    arm_base: Pose2D,
    length: f64,
}

struct AlState {
    lambda_pitch: f64,
    mu_pitch: f64,
    lambda_load: f64,
    mu_load: f64,
}

/// Closed-form seeds for the levelled-gripper position IK: yaw from the
/// target azimuth (both radial branches) and elbow-up/down solutions of
/// the two-link problem for the wrist center. Each seed is clamped into
/// the step box before the iteration polishes it.
fn analytic_seeds(chain: &KinematicChain, target: Point3) -> Vec<JointVector> {
    let [a2, a3, a4] = chain.link_lengths;
    let h = chain.pitch_sum;
    let r_t = (target.x * target.x + target.y * target.y).sqrt();
    let azimuth = if r_t > 1e-12 {
        target.y.atan2(target.x)
    } else {
        0.0
    };
    let z_t = target.z - chain.base_height;

    let mut seeds = Vec::new();
    for (yaw, radial) in [
        (azimuth, r_t),
        (crate::geometry::wrap_angle(azimuth + std::f64::consts::PI), -r_t),
    ] {
        // Wrist center with the last link held at the levelling pitch.
        let wx = radial - a4 * h.cos();
        let wz = z_t - a4 * h.sin();
        let d2 = wx * wx + wz * wz;
        let c3 = ((d2 - a2 * a2 - a3 * a3) / (2.0 * a2 * a3)).clamp(-1.0, 1.0);
        let elbow = c3.acos();
        for b3 in [elbow, -elbow] {
            let b2 = wz.atan2(wx) - (a3 * b3.sin()).atan2(a2 + a3 * b3.cos());
            let b4 = h - b2 - b3;
            seeds.push([yaw, b2, b3, b4]);
        }
    }
    seeds
}

fn solve_constrained(
    chain: &KinematicChain,
    target: Point3,
    warm: JointVector,
    lo: JointVector,
    hi: JointVector,
    load: Option<LoadConstraint>,
) -> IkResult {
    let first = attempt(chain, target, warm, lo, hi, load.as_ref());
    if first.converged && first.residual <= 1e-6 {
        return first;
    }
    // Local-minimum escape: the warm start may have settled in the wrong
    // elbow or yaw branch, so also polish the analytic two-link seeds and
    // the middle of the step box, keeping the best outcome.
    let mut iterations = first.iterations;
    let mut best = first;
    let mid = [
        0.5 * (lo[0] + hi[0]),
        0.5 * (lo[1] + hi[1]),
        0.5 * (lo[2] + hi[2]),
        0.5 * (lo[3] + hi[3]),
    ];
    let mut seeds = analytic_seeds(chain, target);
    seeds.push(mid);
    // The candidate point can sit near the yaw axis, where whole families
    // of branches tie to within microns; restarts must beat the
    // warm-started branch by a margin or the arm would swing between
    // near-equal optima from step to step.
    const SWITCH_MARGIN: f64 = 5.0e-5;
    for seed in seeds {
        let r = attempt(chain, target, seed, lo, hi, load.as_ref());
        iterations += r.iterations;
        let better = (
            !r.converged,
            if r.constraint_violation > LOAD_LENGTH_TOL { r.constraint_violation } else { 0.0 },
            r.residual + SWITCH_MARGIN,
        ) < (
            !best.converged,
            if best.constraint_violation > LOAD_LENGTH_TOL { best.constraint_violation } else { 0.0 },
            best.residual,
        );
        if better {
            best = r;
        }
        if best.converged && best.residual <= 1e-6 {
            break;
        }
    }
    best.iterations = iterations;
    best
}

/// Pitch-sum constraint value.
fn pitch_defect(chain: &KinematicChain, beta: &JointVector) -> f64 {
    beta[1] + beta[2] + beta[3] - chain.pitch_sum
}

/// Load-length constraint value: signed distance error to the sphere of
/// radius `length` around the leader end-effector.
fn load_defect(chain: &KinematicChain, c: &LoadConstraint, beta: &JointVector) -> f64 {
    let local = forward_kinematics(chain, beta);
    let xy = c.arm_base.transform_point(local.xy());
    let ee = Point3::new(xy.x, xy.y, local.z);
    ee.dist(&c.leader_ee) - c.length
}

fn attempt(
    chain: &KinematicChain,
    target: Point3,
    start: JointVector,
    lo: JointVector,
    hi: JointVector,
    load: Option<&LoadConstraint>,
) -> IkResult {
    type V4 = SVector<f64, 4>;

    let clamp = |b: &JointVector| -> JointVector {
        let mut out = *b;
        for i in 0..4 {
            out[i] = out[i].clamp(lo[i], hi[i]);
        }
        out
    };

    let mut beta = clamp(&start);
    let mut al = AlState {
        lambda_pitch: 0.0,
        mu_pitch: 1.0e4,
        lambda_load: 0.0,
        mu_load: 1.0e2,
    };

    // Augmented-Lagrangian objective as shifted quadratic penalties.
    let phi = |b: &JointVector, al: &AlState| -> f64 {
        let fk = forward_kinematics(chain, b);
        let mut v = (fk.x - target.x).powi(2)
            + (fk.y - target.y).powi(2)
            + (fk.z - target.z).powi(2);
        let ch = pitch_defect(chain, b);
        v += 0.5 * al.mu_pitch * (ch + al.lambda_pitch / al.mu_pitch).powi(2);
        if let Some(c) = load {
            let cl = load_defect(chain, c, b);
            v += 0.5 * al.mu_load * (cl + al.lambda_load / al.mu_load).powi(2);
        }
        v
    };

    // Gradient of the objective above.
    let grad = |b: &JointVector, al: &AlState| -> V4 {
        let fk = forward_kinematics(chain, b);
        let j = fk_jacobian(chain, b);
        let e = SVector::<f64, 3>::new(fk.x - target.x, fk.y - target.y, fk.z - target.z);
        let mut g: V4 = 2.0 * j.transpose() * e;
        let ch = pitch_defect(chain, b);
        let gh = al.mu_pitch * ch + al.lambda_pitch;
        g[1] += gh;
        g[2] += gh;
        g[3] += gh;
        if let Some(c) = load {
            let cl = load_defect(chain, c, b);
            let jw = ee_world_jacobian(c.arm_base, chain, b);
            let local = forward_kinematics(chain, b);
            let xy = c.arm_base.transform_point(local.xy());
            let d = [xy.x - c.leader_ee.x, xy.y - c.leader_ee.y, local.z - c.leader_ee.z];
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().max(1e-12);
            let gl = al.mu_load * cl + al.lambda_load;
            for col in 0..4 {
                let dcol =
                    (d[0] * jw[(0, col)] + d[1] * jw[(1, col)] + d[2] * jw[(2, col)]) / norm;
                g[col] += gl * dcol;
            }
        }
        g
    };

    // Exact Hessian of the same objective. The converged residual can be
    // large (the candidate often sits outside the reachable shell), so
    // the Gauss-Newton approximation stalls; the exact curvature keeps
    // the damped-Newton iteration quadratically convergent.
    let hess = |b: &JointVector, al: &AlState| -> SMatrix<f64, 4, 4> {
        let j = fk_jacobian(chain, b);
        let fk = forward_kinematics(chain, b);
        let hf = fk_hessians(chain, b);
        let e = [fk.x - target.x, fk.y - target.y, fk.z - target.z];
        let mut h: SMatrix<f64, 4, 4> =
            2.0 * j.transpose() * j + 2.0 * (e[0] * hf[0] + e[1] * hf[1] + e[2] * hf[2]);
        for r in 1..4 {
            for c in 1..4 {
                h[(r, c)] += al.mu_pitch;
            }
        }
        if let Some(c) = load {
            let jw = ee_world_jacobian(c.arm_base, chain, b);
            let xy = c.arm_base.transform_point(fk.xy());
            let d = [xy.x - c.leader_ee.x, xy.y - c.leader_ee.y, fk.z - c.leader_ee.z];
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().max(1e-12);
            let u = [d[0] / norm, d[1] / norm, d[2] / norm];
            let mut jc = V4::zeros();
            for col in 0..4 {
                jc[col] = u[0] * jw[(0, col)] + u[1] * jw[(1, col)] + u[2] * jw[(2, col)];
            }
            let cl = norm - c.length;
            let shift = al.mu_load * cl + al.lambda_load;
            // World-frame coordinate Hessians: the xy pair rotates with
            // the arm base, z is frame-independent.
            let (s, cth) = c.arm_base.theta.sin_cos();
            let hwx = cth * hf[0] - s * hf[1];
            let hwy = s * hf[0] + cth * hf[1];
            let mut hc: SMatrix<f64, 4, 4> =
                (jw.transpose() * jw - jc * jc.transpose()) / norm;
            hc += u[0] * hwx + u[1] * hwy + u[2] * hf[2];
            h += al.mu_load * jc * jc.transpose() + shift * hc;
        }
        h
    };

    let projected_grad_norm = |b: &JointVector, g: &V4| -> f64 {
        let mut n: f64 = 0.0;
        for i in 0..4 {
            let gi = g[i];
            let active = (b[i] <= lo[i] && gi > 0.0) || (b[i] >= hi[i] && gi < 0.0);
            if !active {
                n = n.max(gi.abs());
            }
        }
        n
    };

    let mut nu = 1e-3;
    let mut iterations = 0usize;
    let mut value = phi(&beta, &al);
    let mut prev_pitch = pitch_defect(chain, &beta).abs();
    let mut prev_load = load.map(|c| load_defect(chain, c, &beta).abs());
    let mut stationary = false;

    'outer: for _round in 0..12 {
        // Inner box-projected Levenberg-Marquardt loop at fixed multipliers.
        let mut inner_stationary = false;
        while iterations < MAX_ITER {
            let g = grad(&beta, &al);
            if projected_grad_norm(&beta, &g) <= OPT_TOL {
                inner_stationary = true;
                break;
            }
            let h = hess(&beta, &al);
            iterations += 1;
            // Freeze bound-active coordinates whose gradient points
            // outward; the Newton system is solved over the free ones.
            let mut active = [false; 4];
            for i in 0..4 {
                active[i] = (beta[i] <= lo[i] && g[i] > 0.0) || (beta[i] >= hi[i] && g[i] < 0.0);
            }
            let mut accepted = false;
            for _ in 0..30 {
                let mut hreg = h;
                let mut rhs: V4 = -g;
                for i in 0..4 {
                    if active[i] {
                        for j in 0..4 {
                            hreg[(i, j)] = 0.0;
                            hreg[(j, i)] = 0.0;
                        }
                        hreg[(i, i)] = 1.0;
                        rhs[i] = 0.0;
                    } else {
                        hreg[(i, i)] += nu;
                    }
                }
                let Some(chol) = hreg.cholesky() else {
                    nu = (nu * 4.0).max(1e-10);
                    continue;
                };
                let d = chol.solve(&rhs);
                let mut cand = beta;
                for i in 0..4 {
                    cand[i] = (beta[i] + d[i]).clamp(lo[i], hi[i]);
                }
                let cand_value = phi(&cand, &al);
                if cand_value < value {
                    let step: f64 = (0..4).map(|i| (cand[i] - beta[i]).abs()).fold(0.0, f64::max);
                    beta = cand;
                    value = cand_value;
                    nu = (nu / 3.0).max(1e-12);
                    accepted = true;
                    if step <= 1e-13 {
                        inner_stationary = true;
                    }
                    break;
                }
                nu *= 4.0;
                if nu > 1e14 {
                    break;
                }
            }
            if !accepted {
                // Fully stalled at the current multipliers.
                inner_stationary = projected_grad_norm(&beta, &grad(&beta, &al)) <= 1e-6;
                break;
            }
            if inner_stationary {
                break;
            }
        }

        let ch = pitch_defect(chain, &beta);
        let cl = load.map(|c| load_defect(chain, c, &beta));
        let pitch_ok = ch.abs() <= PITCH_SUM_TOL;
        let load_ok = cl.is_none_or(|v| v.abs() <= 0.2 * LOAD_LENGTH_TOL);
        if inner_stationary && pitch_ok && load_ok {
            stationary = true;
            break 'outer;
        }
        if iterations >= MAX_ITER {
            stationary = inner_stationary && pitch_ok && load_ok;
            break 'outer;
        }

        // Multiplier updates; escalate penalties that are not making
        // sufficient progress.
        al.lambda_pitch += al.mu_pitch * ch;
        if ch.abs() > 0.25 * prev_pitch && ch.abs() > PITCH_SUM_TOL {
            al.mu_pitch = (al.mu_pitch * 10.0).min(1e10);
        }
        prev_pitch = ch.abs();
        if let Some(clv) = cl {
            al.lambda_load += al.mu_load * clv;
            if clv.abs() > 0.25 * prev_load.unwrap_or(f64::INFINITY)
                && clv.abs() > 0.2 * LOAD_LENGTH_TOL
            {
                al.mu_load = (al.mu_load * 10.0).min(1e10);
            }
            prev_load = Some(clv.abs());
        }
        value = phi(&beta, &al);
    }

    let fk = forward_kinematics(chain, &beta);
    let residual = fk.dist(&target);
    let violation = load
        .map(|c| load_defect(chain, c, &beta).abs())
        .unwrap_or(0.0);
    let pitch_ok = pitch_defect(chain, &beta).abs() <= 10.0 * PITCH_SUM_TOL;
    let load_ok = load.is_none() || violation <= LOAD_LENGTH_TOL;
    IkResult {
        beta_star: beta,
        residual,
        constraint_violation: violation,
        converged: stationary && pitch_ok && load_ok,
        iterations,
    }
}
