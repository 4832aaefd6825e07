//! Stop-and-sync coordination and the full simulation loop.
//!
//! Both robots share a single target index p. Each step every non-stopped
//! robot is commanded toward the XY projection of waypoint p of its own
//! trajectory; after the motion update the distances to the targets are
//! checked. If both robots are inside the reachability radius the index
//! advances and both stop flags clear; if exactly one is inside, it stops
//! and waits for the other. The arms then track: the leader solves plain
//! position IK against its projected candidate point, the follower solves
//! IK constrained to hold the rod length against the leader's estimated
//! end-effector. A stopped robot's arm holds, except the follower, which
//! re-solves every step because the leader may still be moving.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arm::{ee_world, solve_ik_follower, solve_ik_leader, IkResult, JointState};
use crate::config::{RobotConfig, SamplingParams, SimConfig};
use crate::diff_drive::{arm_base_pose, step_pose, VelocityCommand};
use crate::error::Error;
use crate::geometry::{
    lift_to_trajectory, project_point_to_polyline, Point2, Point3, Pose2D, Trajectory3D,
};
use crate::guidance::{png_step, PngState};
use crate::logging::{LogRecord, Method, RobotRecord, RunMetadata, SimulationLog};
use crate::mpc::{mpc_dynamics, pack_state, unpack_beta, unpack_pose, MpcController, TimedReference};
use crate::sampling::velocity_sampling_step;
use crate::scenario::Scenario;

/// Which IK problem a robot solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Leader,
    Follower,
}

/// Mutable per-robot state threaded through the run.
#[derive(Debug, Clone)]
pub struct RobotRuntime {
    pub pose: Pose2D,
    pub joints: JointState,
    pub png: PngState,
    pub role: Role,
}

/// Shared coordinator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyncState {
    /// Shared target index, 1-based over the waypoints.
    pub p: usize,
    pub stop: [bool; 2],
    /// Timestep counter.
    pub k: usize,
}

impl SyncState {
    pub fn new() -> Self {
        Self {
            p: 1,
            stop: [false, false],
            k: 0,
        }
    }
}

impl Default for SyncState {
    fn default() -> Self {
        Self::new()
    }
}

/// Base-command source for the tracked methods.
pub enum BaseTracker {
    Png,
    Sampling {
        params: SamplingParams,
        rngs: Box<[ChaCha8Rng; 2]>,
    },
}

/// One coordination step: command and move the non-stopped robots, then
/// update the shared index and stop flags from the post-move distances.
pub fn sync_step(
    state: &mut SyncState,
    robots: &mut [RobotRuntime; 2],
    targets: [Point2; 2],
    rho_d: f64,
    cfgs: &[RobotConfig; 2],
    tracker: &mut BaseTracker,
    n_d: usize,
) -> Result<[VelocityCommand; 2], Error> {
    if state.p > n_d {
        return Err(Error::RunComplete);
    }
    let dt = cfgs[0].dt;
    let mut cmds = [VelocityCommand::zero(); 2];
    for a in 0..2 {
        if state.stop[a] {
            continue;
        }
        let cmd = match tracker {
            BaseTracker::Png => {
                match png_step(robots[a].png, robots[a].pose, targets[a], &cfgs[a], dt) {
                    Ok((cmd, next)) => {
                        robots[a].png = next;
                        cmd
                    }
                    // Standing exactly on the target: hold still and let
                    // the distance check advance the index.
                    Err(Error::DegenerateLos) => VelocityCommand::zero(),
                    Err(e) => return Err(e),
                }
            }
            BaseTracker::Sampling { params, rngs } => velocity_sampling_step(
                robots[a].pose,
                targets[a],
                rho_d,
                &cfgs[a],
                params,
                &mut rngs[a],
            ),
        };
        robots[a].pose = step_pose(robots[a].pose, cmd, dt)?;
        cmds[a] = cmd;
    }

    let dist = [
        robots[0].pose.position().dist(&targets[0]),
        robots[1].pose.position().dist(&targets[1]),
    ];
    if dist[0] <= rho_d && dist[1] <= rho_d {
        state.p += 1;
        state.stop = [false, false];
        robots[0].png.reset();
        robots[1].png.reset();
    } else if dist[0] <= rho_d && dist[1] > rho_d {
        state.stop[0] = true;
    } else if dist[1] <= rho_d && dist[0] > rho_d {
        state.stop[1] = true;
    }
    state.k += 1;
    Ok(cmds)
}

/// Candidate end-effector point for a base position: the nearest point of
/// the trajectory's XY projection, lifted back onto the 3D trajectory.
pub fn candidate_ee_point(base: Pose2D, traj: &Trajectory3D) -> Result<Point3, Error> {
    let poly = traj.xy_polyline();
    let pr = project_point_to_polyline(base.position(), &poly)?;
    lift_to_trajectory(traj, pr.segment, pr.t)
}

fn world_to_arm_base(arm_base: Pose2D, p: Point3) -> Point3 {
    let xy = arm_base.inverse_transform_point(p.xy());
    Point3::new(xy.x, xy.y, p.z)
}

/// Per-robot outcome of the arm update, indexed by robot (not by role).
#[derive(Debug, Clone, Copy)]
pub struct ArmStepOutcome {
    pub ik: [IkResult; 2],
    pub ee: [Point3; 2],
    pub candidates: [Point3; 2],
}

/// Arm update for one timestep: leader IK, leader end-effector estimate,
/// then the constrained follower IK. `hold_leader` keeps the leader arm
/// at its previous solution (used while the leader base is stopped).
#[allow(clippy::too_many_arguments)]
pub fn leader_follower_step(
    robots: &mut [RobotRuntime; 2],
    trajectories: &[Trajectory3D; 2],
    cfgs: &[RobotConfig; 2],
    load_length: f64,
    dt: f64,
    leader: usize,
    hold_leader: bool,
    prev_leader_ik: IkResult,
) -> Result<ArmStepOutcome, Error> {
    let follower = 1 - leader;

    let cand_l = candidate_ee_point(robots[leader].pose, &trajectories[leader])?;
    let ik_l = if hold_leader {
        prev_leader_ik
    } else {
        let base = arm_base_pose(robots[leader].pose, &cfgs[leader]);
        let target = world_to_arm_base(base, cand_l);
        let r = solve_ik_leader(
            &cfgs[leader].arm.chain(),
            target,
            &robots[leader].joints,
            dt,
        )?;
        robots[leader].joints.beta = r.beta_star;
        r
    };
    // Estimate of the leader end-effector: forward kinematics of the
    // solved angles in the world frame.
    let leader_ee = ee_world(robots[leader].pose, &cfgs[leader], &robots[leader].joints.beta);

    let cand_f = candidate_ee_point(robots[follower].pose, &trajectories[follower])?;
    let base_f = arm_base_pose(robots[follower].pose, &cfgs[follower]);
    let target_f = world_to_arm_base(base_f, cand_f);
    let ik_f = solve_ik_follower(
        &cfgs[follower].arm.chain(),
        target_f,
        &robots[follower].joints,
        dt,
        leader_ee,
        robots[follower].pose,
        &cfgs[follower],
        load_length,
    )?;
    robots[follower].joints.beta = ik_f.beta_star;
    let follower_ee = ee_world(
        robots[follower].pose,
        &cfgs[follower],
        &robots[follower].joints.beta,
    );

    let mut ik = [ik_l; 2];
    ik[follower] = ik_f;
    let mut ee = [leader_ee; 2];
    ee[follower] = follower_ee;
    let mut candidates = [cand_l; 2];
    candidates[follower] = cand_f;
    Ok(ArmStepOutcome { ik, ee, candidates })
}

/// Initial arm placement: solve the IK once without rate limits so the
/// run starts from a tracking configuration.
fn initial_joints(
    cfg: &RobotConfig,
    pose: Pose2D,
    candidate: Point3,
    follower_ctx: Option<(Point3, f64)>,
) -> Result<(JointState, IkResult), Error> {
    let mut state = cfg.arm.mid_range_state();
    state.rate_limit = [1e6; 4];
    let base = arm_base_pose(pose, cfg);
    let target = world_to_arm_base(base, candidate);
    let ik = match follower_ctx {
        None => solve_ik_leader(&cfg.arm.chain(), target, &state, cfg.dt)?,
        Some((leader_ee, l)) => solve_ik_follower(
            &cfg.arm.chain(),
            target,
            &state,
            cfg.dt,
            leader_ee,
            pose,
            cfg,
            l,
        )?,
    };
    state.beta = ik.beta_star;
    state.rate_limit = cfg.arm.rate_limits;
    Ok((state, ik))
}

/// Run one simulation to completion (or budget expiry) and return the
/// full log.
pub fn run_simulation(
    scenario: &Scenario,
    cfgs: &[RobotConfig; 2],
    sim: &SimConfig,
    method: Method,
    seed: u64,
) -> Result<SimulationLog, Error> {
    scenario.validate()?;
    cfgs[0].validate()?;
    cfgs[1].validate()?;
    if (cfgs[0].dt - cfgs[1].dt).abs() > 0.0 {
        return Err(Error::InvalidConfig(
            "both robots must share the command period".into(),
        ));
    }
    if sim.sim.leader > 1 {
        return Err(Error::InvalidConfig("sim.leader must be 0 or 1".into()));
    }
    match method {
        Method::PngLf | Method::RrtLf => run_tracked(scenario, cfgs, sim, method, seed),
        Method::SlqMpc => run_mpc(scenario, cfgs, sim, seed),
    }
}

fn tracking_error(ee: Point3, traj: &Trajectory3D, poly: &[Point2]) -> f64 {
    let pr = project_point_to_polyline(ee.xy(), poly).expect("trajectory polyline");
    let nearest = lift_to_trajectory(traj, pr.segment, pr.t).expect("valid projection");
    ee.dist(&nearest)
}

fn run_tracked(
    scenario: &Scenario,
    cfgs: &[RobotConfig; 2],
    sim: &SimConfig,
    method: Method,
    seed: u64,
) -> Result<SimulationLog, Error> {
    let trajs = &scenario.trajectories;
    let polys = [trajs[0].xy_polyline(), trajs[1].xy_polyline()];
    let n_d = scenario.n_d();
    let dt = cfgs[0].dt;
    let leader = sim.sim.leader;
    let follower = 1 - leader;
    let rho_d = cfgs[0]
        .reachability_radius()
        .min(cfgs[1].reachability_radius());
    let load_length = scenario.load_length;

    // Initial arm configurations track the initial candidates.
    let cand0 = [
        candidate_ee_point(scenario.start_poses[0], &trajs[0])?,
        candidate_ee_point(scenario.start_poses[1], &trajs[1])?,
    ];
    let (joints_l, ik_l0) = initial_joints(
        &cfgs[leader],
        scenario.start_poses[leader],
        cand0[leader],
        None,
    )?;
    let leader_ee0 = ee_world(scenario.start_poses[leader], &cfgs[leader], &joints_l.beta);
    let (joints_f, ik_f0) = initial_joints(
        &cfgs[follower],
        scenario.start_poses[follower],
        cand0[follower],
        Some((leader_ee0, load_length)),
    )?;
    let follower_ee0 = ee_world(scenario.start_poses[follower], &cfgs[follower], &joints_f.beta);

    let mut robots = {
        let make = |idx: usize, joints: JointState| RobotRuntime {
            pose: scenario.start_poses[idx],
            joints,
            png: PngState::new(&sim.png),
            role: if idx == leader { Role::Leader } else { Role::Follower },
        };
        if leader == 0 {
            [make(0, joints_l), make(1, joints_f)]
        } else {
            [make(0, joints_f), make(1, joints_l)]
        }
    };

    let mut tracker = match method {
        Method::PngLf => BaseTracker::Png,
        Method::RrtLf => BaseTracker::Sampling {
            params: sim.sampling,
            rngs: Box::new([
                ChaCha8Rng::seed_from_u64(seed.wrapping_mul(2).wrapping_add(1)),
                ChaCha8Rng::seed_from_u64(seed.wrapping_mul(2).wrapping_add(2)),
            ]),
        },
        Method::SlqMpc => unreachable!("dispatched separately"),
    };

    let mut ee = [leader_ee0; 2];
    ee[follower] = follower_ee0;
    let mut last_ik = [ik_l0; 2];
    last_ik[follower] = ik_f0;

    let mut records = Vec::new();
    let record_step = |records: &mut Vec<LogRecord>,
                       t: f64,
                       robots: &[RobotRuntime; 2],
                       cmds: [VelocityCommand; 2],
                       stops: [bool; 2],
                       p: usize,
                       ee: [Point3; 2],
                       candidates: [Point3; 2],
                       ik: [IkResult; 2]| {
        let err = [
            tracking_error(ee[0], &trajs[0], &polys[0]),
            tracking_error(ee[1], &trajs[1], &polys[1]),
        ];
        let robot = |a: usize| RobotRecord {
            pose: robots[a].pose,
            cmd: cmds[a],
            joints: robots[a].joints.beta,
            ee: ee[a],
            stop: stops[a],
            candidate: candidates[a],
            ik_converged: ik[a].converged,
            ik_violation: ik[a].constraint_violation,
        };
        records.push(LogRecord {
            t,
            robots: [robot(0), robot(1)],
            target_index: p,
            load_length: ee[0].dist(&ee[1]),
            tracking_error: err,
        });
    };

    record_step(
        &mut records,
        0.0,
        &robots,
        [VelocityCommand::zero(); 2],
        [false, false],
        1,
        ee,
        cand0,
        last_ik,
    );

    let mut sync = SyncState::new();
    while sync.p <= n_d && sync.k < sim.sim.step_budget {
        let governing_p = sync.p;
        let governing_stops = sync.stop;
        let targets = [
            trajs[0].waypoints()[governing_p - 1].xy(),
            trajs[1].waypoints()[governing_p - 1].xy(),
        ];
        let cmds = sync_step(
            &mut sync,
            &mut robots,
            targets,
            rho_d,
            cfgs,
            &mut tracker,
            n_d,
        )?;
        let outcome = leader_follower_step(
            &mut robots,
            trajs,
            cfgs,
            load_length,
            dt,
            leader,
            governing_stops[leader],
            last_ik[leader],
        )?;
        last_ik = outcome.ik;
        ee = outcome.ee;
        record_step(
            &mut records,
            sync.k as f64 * dt,
            &robots,
            cmds,
            governing_stops,
            governing_p,
            ee,
            outcome.candidates,
            outcome.ik,
        );
    }

    let completed = sync.p > n_d;
    let follower_ok = records
        .iter()
        .filter(|r| r.robots[follower].ik_converged)
        .count();
    let meta = RunMetadata {
        method,
        seed,
        config_hash: sim.hash(),
        completed,
        load_length,
        n_d,
        leader,
        steps: records.len(),
        follower_converged_fraction: follower_ok as f64 / records.len() as f64,
    };
    Ok(SimulationLog { records, meta })
}

fn run_mpc(
    scenario: &Scenario,
    cfgs: &[RobotConfig; 2],
    sim: &SimConfig,
    seed: u64,
) -> Result<SimulationLog, Error> {
    let trajs = &scenario.trajectories;
    let polys = [trajs[0].xy_polyline(), trajs[1].xy_polyline()];
    let dt = cfgs[0].dt;
    let n_d = scenario.n_d();

    // Both references share one duration so paired reference points keep
    // their rod spacing; the longer trajectory moves at v_ref.
    let length = |t: &Trajectory3D| -> f64 {
        t.waypoints().windows(2).map(|w| w[0].dist(&w[1])).sum()
    };
    let duration = length(&trajs[0]).max(length(&trajs[1])) / sim.mpc.v_ref;
    let refs = [
        TimedReference::new(&trajs[0], duration),
        TimedReference::new(&trajs[1], duration),
    ];
    let planned_steps = ((duration + sim.mpc.settle_time) / dt).ceil() as usize;
    let steps = planned_steps.min(sim.sim.step_budget);

    // Initial arms track the first waypoints, as in the other methods.
    let mut states = [pack_state(Pose2D::new(0.0, 0.0, 0.0), &[0.0; 4]); 2];
    let mut ik0 = Vec::with_capacity(2);
    for a in 0..2 {
        let cand = candidate_ee_point(scenario.start_poses[a], &trajs[a])?;
        let (joints, ik) = initial_joints(&cfgs[a], scenario.start_poses[a], cand, None)?;
        states[a] = pack_state(scenario.start_poses[a], &joints.beta);
        ik0.push(ik);
    }

    let mut controllers = [
        MpcController::new(&cfgs[0], &sim.mpc),
        MpcController::new(&cfgs[1], &sim.mpc),
    ];

    let mut records = Vec::new();
    let push_record = |records: &mut Vec<LogRecord>,
                       t: f64,
                       states: &[crate::mpc::StateVec; 2],
                       cmds: [VelocityCommand; 2],
                       p: usize,
                       candidates: [Point3; 2],
                       converged: [bool; 2]| {
        let ee = [
            ee_world(unpack_pose(&states[0]), &cfgs[0], &unpack_beta(&states[0])),
            ee_world(unpack_pose(&states[1]), &cfgs[1], &unpack_beta(&states[1])),
        ];
        let robot = |a: usize| RobotRecord {
            pose: unpack_pose(&states[a]),
            cmd: cmds[a],
            joints: unpack_beta(&states[a]),
            ee: ee[a],
            stop: false,
            candidate: candidates[a],
            ik_converged: converged[a],
            ik_violation: 0.0,
        };
        records.push(LogRecord {
            t,
            robots: [robot(0), robot(1)],
            target_index: p,
            load_length: ee[0].dist(&ee[1]),
            tracking_error: [
                tracking_error(ee[0], &trajs[0], &polys[0]),
                tracking_error(ee[1], &trajs[1], &polys[1]),
            ],
        });
    };

    push_record(
        &mut records,
        0.0,
        &states,
        [VelocityCommand::zero(); 2],
        1,
        [refs[0].sample(0.0), refs[1].sample(0.0)],
        [ik0[0].converged, ik0[1].converged],
    );

    for k in 1..=steps {
        let t0 = (k - 1) as f64 * dt;
        let mut cmds = [VelocityCommand::zero(); 2];
        let mut converged = [true; 2];
        for a in 0..2 {
            let window = refs[a].window(t0, dt, controllers[a].horizon);
            let (u, sol) = controllers[a].step(states[a], window)?;
            states[a] = mpc_dynamics(&states[a], &u, dt);
            cmds[a] = VelocityCommand::new(u[0], u[1]);
            converged[a] = sol.converged || !sol.line_search_failed;
        }
        let p = refs[0].progress_index(t0);
        push_record(
            &mut records,
            k as f64 * dt,
            &states,
            cmds,
            p,
            [refs[0].sample(t0), refs[1].sample(t0)],
            converged,
        );
    }

    let meta = RunMetadata {
        method: Method::SlqMpc,
        seed,
        config_hash: sim.hash(),
        completed: steps == planned_steps,
        load_length: scenario.load_length,
        n_d,
        leader: sim.sim.leader,
        steps: records.len(),
        follower_converged_fraction: 1.0,
    };
    Ok(SimulationLog { records, meta })
}
