//! Sequential-linear-quadratic MPC over the combined base+arm kinematic
//! model.
//!
//! State x = [x, y, theta, beta1..beta4], input u = [v, omega,
//! beta_dot1..beta_dot4]. The stage cost penalizes the world-frame
//! end-effector error against a time-indexed reference plus quadratic
//! input effort; input and joint-angle limits enter softly through
//! relaxed log barriers. The solver is the standard iLQR loop:
//! linearize, Riccati backward pass, line-searched forward rollout.

use nalgebra::{SMatrix, SVector};

use crate::arm::{fk_jacobian, forward_kinematics, JointVector, KinematicChain};
use crate::config::{MpcParams, RobotConfig};
use crate::error::Error;
use crate::geometry::{wrap_angle, Point2, Point3, Pose2D, Trajectory3D};

pub const N_STATE: usize = 7;
pub const N_INPUT: usize = 6;

pub type StateVec = SVector<f64, N_STATE>;
pub type InputVec = SVector<f64, N_INPUT>;
type MatAx = SMatrix<f64, N_STATE, N_STATE>;
type MatBu = SMatrix<f64, N_STATE, N_INPUT>;
type MatEe = SMatrix<f64, 3, N_STATE>;

pub fn pack_state(pose: Pose2D, beta: &JointVector) -> StateVec {
    StateVec::from_column_slice(&[pose.x, pose.y, pose.theta, beta[0], beta[1], beta[2], beta[3]])
}

pub fn unpack_pose(x: &StateVec) -> Pose2D {
    Pose2D::new(x[0], x[1], x[2])
}

pub fn unpack_beta(x: &StateVec) -> JointVector {
    [x[3], x[4], x[5], x[6]]
}

/// One Euler step of the unicycle-plus-joint-integrator model; the
/// heading stays wrapped.
pub fn mpc_dynamics(x: &StateVec, u: &InputVec, dt: f64) -> StateVec {
    let theta = x[2];
    let (s, c) = theta.sin_cos();
    let mut next = *x;
    next[0] += dt * u[0] * c;
    next[1] += dt * u[0] * s;
    next[2] = wrap_angle(theta + dt * u[1]);
    for j in 0..4 {
        next[3 + j] += dt * u[2 + j];
    }
    next
}

/// Exact Jacobians of the discrete dynamics.
fn dynamics_jacobians(x: &StateVec, u: &InputVec, dt: f64) -> (MatAx, MatBu) {
    let (s, c) = x[2].sin_cos();
    let mut a = MatAx::identity();
    a[(0, 2)] = -dt * u[0] * s;
    a[(1, 2)] = dt * u[0] * c;
    let mut b = MatBu::zeros();
    b[(0, 0)] = dt * c;
    b[(1, 0)] = dt * s;
    b[(2, 1)] = dt;
    for j in 0..4 {
        b[(3 + j, 2 + j)] = dt;
    }
    (a, b)
}

/// Relaxed log barrier: -w ln(z) beyond `delta`, quadratically extended
/// below it so the cost stays finite for violated constraints. Value and
/// first derivative are continuous at z = delta.
pub fn relaxed_barrier(z: f64, delta: f64, weight: f64) -> f64 {
    if z > delta {
        -weight * z.ln()
    } else {
        let q = (z - 2.0 * delta) / delta;
        weight * (0.5 * (q * q - 1.0) - delta.ln())
    }
}

pub fn relaxed_barrier_d1(z: f64, delta: f64, weight: f64) -> f64 {
    if z > delta {
        -weight / z
    } else {
        weight * (z - 2.0 * delta) / (delta * delta)
    }
}

pub fn relaxed_barrier_d2(z: f64, delta: f64, weight: f64) -> f64 {
    if z > delta {
        weight / (z * z)
    } else {
        weight / (delta * delta)
    }
}

/// MPC problem over one horizon: weights, bounds and the reference
/// window r(t_0), ..., r(t_N).
#[derive(Debug, Clone)]
pub struct MpcProblem {
    pub horizon: usize,
    pub dt: f64,
    pub q_weight: [f64; 3],
    pub r_weight: [f64; N_INPUT],
    pub barrier_delta: f64,
    pub barrier_weight: f64,
    pub reference: Vec<Point3>,
    pub chain: KinematicChain,
    pub mount_offset: Point2,
    pub input_lower: [f64; N_INPUT],
    pub input_upper: [f64; N_INPUT],
    pub joint_lower: [f64; 4],
    pub joint_upper: [f64; 4],
}

impl MpcProblem {
    pub fn validate(&self) -> Result<(), Error> {
        if self.horizon < 2 {
            return Err(Error::InvalidParameter(format!(
                "horizon must be >= 2, got {}",
                self.horizon
            )));
        }
        if self.reference.len() < self.horizon + 1 {
            return Err(Error::InvalidParameter(format!(
                "reference must cover the horizon: need {} samples, got {}",
                self.horizon + 1,
                self.reference.len()
            )));
        }
        if self.q_weight.iter().any(|&w| w <= 0.0) || self.r_weight.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidParameter("weights must be > 0".into()));
        }
        if !(self.barrier_delta > 0.0 && self.barrier_delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "barrier delta must be in (0, 1), got {}",
                self.barrier_delta
            )));
        }
        Ok(())
    }

    /// World-frame end-effector position of a combined state.
    pub fn ee_of_state(&self, x: &StateVec) -> Point3 {
        let beta = unpack_beta(x);
        let local = forward_kinematics(&self.chain, &beta);
        let (s, c) = x[2].sin_cos();
        let mx = self.mount_offset.x + local.x;
        let my = self.mount_offset.y + local.y;
        Point3::new(x[0] + c * mx - s * my, x[1] + s * mx + c * my, local.z)
    }

    fn ee_jacobian(&self, x: &StateVec) -> MatEe {
        let beta = unpack_beta(x);
        let local = forward_kinematics(&self.chain, &beta);
        let jfk = fk_jacobian(&self.chain, &beta);
        let (s, c) = x[2].sin_cos();
        let mx = self.mount_offset.x + local.x;
        let my = self.mount_offset.y + local.y;
        let mut j = MatEe::zeros();
        j[(0, 0)] = 1.0;
        j[(1, 1)] = 1.0;
        j[(0, 2)] = -s * mx - c * my;
        j[(1, 2)] = c * mx - s * my;
        for col in 0..4 {
            j[(0, 3 + col)] = c * jfk[(0, col)] - s * jfk[(1, col)];
            j[(1, 3 + col)] = s * jfk[(0, col)] + c * jfk[(1, col)];
            j[(2, 3 + col)] = jfk[(2, col)];
        }
        j
    }

    fn input_barrier(&self, u: &InputVec) -> f64 {
        let (d, w) = (self.barrier_delta, self.barrier_weight);
        (0..N_INPUT)
            .map(|i| {
                relaxed_barrier(self.input_upper[i] - u[i], d, w)
                    + relaxed_barrier(u[i] - self.input_lower[i], d, w)
            })
            .sum()
    }

    fn joint_barrier(&self, x: &StateVec) -> f64 {
        let (d, w) = (self.barrier_delta, self.barrier_weight);
        (0..4)
            .map(|j| {
                relaxed_barrier(self.joint_upper[j] - x[3 + j], d, w)
                    + relaxed_barrier(x[3 + j] - self.joint_lower[j], d, w)
            })
            .sum()
    }

    fn ee_error(&self, t: usize, x: &StateVec) -> SVector<f64, 3> {
        let ee = self.ee_of_state(x);
        let r = self.reference[t.min(self.reference.len() - 1)];
        SVector::<f64, 3>::new(ee.x - r.x, ee.y - r.y, ee.z - r.z)
    }

    fn stage_cost(&self, t: usize, x: &StateVec, u: &InputVec) -> f64 {
        let e = self.ee_error(t, x);
        let mut cost = 0.0;
        for i in 0..3 {
            cost += self.q_weight[i] * e[i] * e[i];
        }
        for i in 0..N_INPUT {
            cost += self.r_weight[i] * u[i] * u[i];
        }
        cost + self.input_barrier(u) + self.joint_barrier(x)
    }

    fn terminal_cost(&self, x: &StateVec) -> f64 {
        let e = self.ee_error(self.horizon, x);
        let mut cost = 0.0;
        for i in 0..3 {
            cost += self.q_weight[i] * e[i] * e[i];
        }
        cost + self.joint_barrier(x)
    }

    /// Exact gradient of the stage cost w.r.t. the state.
    fn stage_lx(&self, t: usize, x: &StateVec) -> StateVec {
        let e = self.ee_error(t, x);
        let je = self.ee_jacobian(x);
        let mut qe = SVector::<f64, 3>::zeros();
        for i in 0..3 {
            qe[i] = 2.0 * self.q_weight[i] * e[i];
        }
        let mut lx: StateVec = je.transpose() * qe;
        let (d, w) = (self.barrier_delta, self.barrier_weight);
        for j in 0..4 {
            lx[3 + j] += -relaxed_barrier_d1(self.joint_upper[j] - x[3 + j], d, w)
                + relaxed_barrier_d1(x[3 + j] - self.joint_lower[j], d, w);
        }
        lx
    }

    /// Gauss-Newton Hessian of the stage cost w.r.t. the state.
    fn stage_lxx(&self, _t: usize, x: &StateVec) -> MatAx {
        let je = self.ee_jacobian(x);
        let mut qje = je;
        for i in 0..3 {
            for col in 0..N_STATE {
                qje[(i, col)] *= 2.0 * self.q_weight[i];
            }
        }
        let mut lxx: MatAx = je.transpose() * qje;
        let (d, w) = (self.barrier_delta, self.barrier_weight);
        for j in 0..4 {
            lxx[(3 + j, 3 + j)] += relaxed_barrier_d2(self.joint_upper[j] - x[3 + j], d, w)
                + relaxed_barrier_d2(x[3 + j] - self.joint_lower[j], d, w);
        }
        lxx
    }

    fn stage_lu(&self, u: &InputVec) -> InputVec {
        let mut lu = InputVec::zeros();
        let (d, w) = (self.barrier_delta, self.barrier_weight);
        for i in 0..N_INPUT {
            lu[i] = 2.0 * self.r_weight[i] * u[i]
                - relaxed_barrier_d1(self.input_upper[i] - u[i], d, w)
                + relaxed_barrier_d1(u[i] - self.input_lower[i], d, w);
        }
        lu
    }

    fn stage_luu(&self, u: &InputVec) -> SMatrix<f64, N_INPUT, N_INPUT> {
        let mut luu = SMatrix::<f64, N_INPUT, N_INPUT>::zeros();
        let (d, w) = (self.barrier_delta, self.barrier_weight);
        for i in 0..N_INPUT {
            luu[(i, i)] = 2.0 * self.r_weight[i]
                + relaxed_barrier_d2(self.input_upper[i] - u[i], d, w)
                + relaxed_barrier_d2(u[i] - self.input_lower[i], d, w);
        }
        luu
    }
}

/// Rollout of an input sequence from an initial state.
pub fn rollout(problem: &MpcProblem, x0: StateVec, inputs: &[InputVec]) -> Vec<StateVec> {
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0);
    for u in inputs {
        let next = mpc_dynamics(states.last().unwrap(), u, problem.dt);
        states.push(next);
    }
    states
}

/// Total cost of a trajectory.
pub fn total_cost(problem: &MpcProblem, states: &[StateVec], inputs: &[InputVec]) -> f64 {
    let mut cost = 0.0;
    for (t, u) in inputs.iter().enumerate() {
        cost += problem.stage_cost(t, &states[t], u);
    }
    cost + problem.terminal_cost(&states[problem.horizon])
}

/// Exact gradient of the total cost w.r.t. the input sequence (adjoint
/// recursion). Used by the finite-difference health checks.
pub fn cost_gradient(problem: &MpcProblem, x0: StateVec, inputs: &[InputVec]) -> Vec<InputVec> {
    let states = rollout(problem, x0, inputs);
    let n = inputs.len();
    let mut grads = vec![InputVec::zeros(); n];
    let mut lambda: StateVec = {
        let e = problem.ee_error(problem.horizon, &states[n]);
        let je = problem.ee_jacobian(&states[n]);
        let mut qe = SVector::<f64, 3>::zeros();
        for i in 0..3 {
            qe[i] = 2.0 * problem.q_weight[i] * e[i];
        }
        let mut lx: StateVec = je.transpose() * qe;
        let (d, w) = (problem.barrier_delta, problem.barrier_weight);
        for j in 0..4 {
            lx[3 + j] += -relaxed_barrier_d1(problem.joint_upper[j] - states[n][3 + j], d, w)
                + relaxed_barrier_d1(states[n][3 + j] - problem.joint_lower[j], d, w);
        }
        lx
    };
    for t in (0..n).rev() {
        let (a, b) = dynamics_jacobians(&states[t], &inputs[t], problem.dt);
        grads[t] = problem.stage_lu(&inputs[t]) + b.transpose() * lambda;
        lambda = problem.stage_lx(t, &states[t]) + a.transpose() * lambda;
    }
    grads
}

/// Result of one SLQ solve.
#[derive(Debug, Clone)]
pub struct SlqSolution {
    pub inputs: Vec<InputVec>,
    pub states: Vec<StateVec>,
    /// Cost after each accepted iteration, starting with the initial
    /// rollout cost. Non-increasing.
    pub cost_history: Vec<f64>,
    pub converged: bool,
    /// Set when the line search could not improve the cost before the
    /// iteration limit.
    pub line_search_failed: bool,
    pub iterations: usize,
}

const SLQ_MAX_ITER: usize = 100;
const SLQ_COST_TOL: f64 = 1e-8;

/// Iterative linearize / Riccati / line-search loop.
pub fn slq_solve(
    problem: &MpcProblem,
    x0: StateVec,
    warm_start: Option<&[InputVec]>,
) -> Result<SlqSolution, Error> {
    problem.validate()?;
    let n = problem.horizon;
    let mut inputs: Vec<InputVec> = match warm_start {
        Some(w) if w.len() == n => w.to_vec(),
        Some(_) | None => vec![InputVec::zeros(); n],
    };
    let mut states = rollout(problem, x0, &inputs);
    let mut cost = total_cost(problem, &states, &inputs);
    let mut history = vec![cost];
    let mut reg = 1e-6;
    let mut converged = false;
    let mut line_search_failed = false;
    let mut iterations = 0;

    'outer: for _ in 0..SLQ_MAX_ITER {
        iterations += 1;
        // Backward Riccati pass with regularization on Quu.
        let (gains, feedforward) = loop {
            match backward_pass(problem, &states, &inputs, reg) {
                Some(pair) => break pair,
                None => {
                    reg *= 10.0;
                    if reg > 1e10 {
                        line_search_failed = true;
                        break 'outer;
                    }
                }
            }
        };

        // Forward pass with backtracking line search.
        let mut improved = false;
        let mut alpha = 1.0;
        for _ in 0..13 {
            let mut xs = Vec::with_capacity(n + 1);
            let mut us = Vec::with_capacity(n);
            xs.push(x0);
            for t in 0..n {
                let dx = xs[t] - states[t];
                let u = inputs[t] + alpha * feedforward[t] + gains[t] * dx;
                xs.push(mpc_dynamics(&xs[t], &u, problem.dt));
                us.push(u);
            }
            let new_cost = total_cost(problem, &xs, &us);
            if new_cost < cost - 1e-14 {
                let decrease = cost - new_cost;
                states = xs;
                inputs = us;
                cost = new_cost;
                history.push(cost);
                reg = (reg / 2.0).max(1e-9);
                improved = true;
                if decrease < SLQ_COST_TOL {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            reg *= 10.0;
            if reg > 1e10 {
                // Stalled: declare convergence if the remaining gradient
                // is tiny, otherwise surface the warning flag.
                let g = cost_gradient(problem, x0, &inputs);
                let gnorm = g.iter().map(|v| v.amax()).fold(0.0, f64::max);
                if gnorm < 1e-6 {
                    converged = true;
                } else {
                    line_search_failed = true;
                }
                break 'outer;
            }
        }
    }

    Ok(SlqSolution {
        inputs,
        states,
        cost_history: history,
        converged,
        line_search_failed,
        iterations,
    })
}

type Gains = SMatrix<f64, N_INPUT, N_STATE>;

fn backward_pass(
    problem: &MpcProblem,
    states: &[StateVec],
    inputs: &[InputVec],
    reg: f64,
) -> Option<(Vec<Gains>, Vec<InputVec>)> {
    let n = problem.horizon;
    let mut vx = {
        let e = problem.ee_error(n, &states[n]);
        let je = problem.ee_jacobian(&states[n]);
        let mut qe = SVector::<f64, 3>::zeros();
        for i in 0..3 {
            qe[i] = 2.0 * problem.q_weight[i] * e[i];
        }
        let mut lx: StateVec = je.transpose() * qe;
        let (d, w) = (problem.barrier_delta, problem.barrier_weight);
        for j in 0..4 {
            lx[3 + j] += -relaxed_barrier_d1(problem.joint_upper[j] - states[n][3 + j], d, w)
                + relaxed_barrier_d1(states[n][3 + j] - problem.joint_lower[j], d, w);
        }
        lx
    };
    let mut vxx = problem.stage_lxx(n, &states[n]);

    let mut gains = vec![Gains::zeros(); n];
    let mut feedforward = vec![InputVec::zeros(); n];
    for t in (0..n).rev() {
        let (a, b) = dynamics_jacobians(&states[t], &inputs[t], problem.dt);
        let qx: StateVec = problem.stage_lx(t, &states[t]) + a.transpose() * vx;
        let qu: InputVec = problem.stage_lu(&inputs[t]) + b.transpose() * vx;
        let qxx: MatAx = problem.stage_lxx(t, &states[t]) + a.transpose() * vxx * a;
        let mut quu = problem.stage_luu(&inputs[t]) + b.transpose() * vxx * b;
        for i in 0..N_INPUT {
            quu[(i, i)] += reg;
        }
        let qux: SMatrix<f64, N_INPUT, N_STATE> = b.transpose() * vxx * a;
        let chol = quu.cholesky()?;
        let k_ff: InputVec = -chol.solve(&qu);
        let k_fb: Gains = -chol.solve(&qux);
        vx = qx
            + k_fb.transpose() * quu * k_ff
            + k_fb.transpose() * qu
            + qux.transpose() * k_ff;
        vxx = qxx
            + k_fb.transpose() * quu * k_fb
            + k_fb.transpose() * qux
            + qux.transpose() * k_fb;
        vxx = 0.5 * (vxx + vxx.transpose());
        gains[t] = k_fb;
        feedforward[t] = k_ff;
    }
    Some((gains, feedforward))
}

/// Constant-speed time parameterization of a trajectory over a common
/// run duration, holding the final waypoint afterwards.
#[derive(Debug, Clone)]
pub struct TimedReference {
    waypoints: Vec<Point3>,
    cumulative: Vec<f64>,
    total_length: f64,
    pub duration: f64,
}

impl TimedReference {
    pub fn new(traj: &Trajectory3D, duration: f64) -> Self {
        let waypoints = traj.waypoints().to_vec();
        let mut cumulative = vec![0.0];
        for pair in waypoints.windows(2) {
            cumulative.push(cumulative.last().unwrap() + pair[0].dist(&pair[1]));
        }
        let total_length = *cumulative.last().unwrap();
        Self {
            waypoints,
            cumulative,
            total_length,
            duration,
        }
    }

    pub fn sample(&self, t: f64) -> Point3 {
        let frac = (t / self.duration).clamp(0.0, 1.0);
        let s = frac * self.total_length;
        let mut seg = 0;
        while seg + 2 < self.waypoints.len() && self.cumulative[seg + 1] < s {
            seg += 1;
        }
        let span = (self.cumulative[seg + 1] - self.cumulative[seg]).max(1e-300);
        let t01 = ((s - self.cumulative[seg]) / span).clamp(0.0, 1.0);
        let a = self.waypoints[seg];
        let b = self.waypoints[seg + 1];
        Point3::new(
            a.x + t01 * (b.x - a.x),
            a.y + t01 * (b.y - a.y),
            a.z + t01 * (b.z - a.z),
        )
    }

    /// Horizon window r(t0), r(t0+dt), ..., r(t0+n*dt).
    pub fn window(&self, t0: f64, dt: f64, n: usize) -> Vec<Point3> {
        (0..=n).map(|i| self.sample(t0 + i as f64 * dt)).collect()
    }

    /// 1-based waypoint index matching the reference progress at `t`.
    pub fn progress_index(&self, t: f64) -> usize {
        let n_d = self.waypoints.len();
        let frac = (t / self.duration).clamp(0.0, 1.0);
        1 + (frac * (n_d - 1) as f64).floor() as usize
    }
}

/// Receding-horizon controller: solve, apply the first input, shift the
/// warm start.
#[derive(Debug, Clone)]
pub struct MpcController {
    pub horizon: usize,
    pub dt: f64,
    params: MpcParams,
    chain: KinematicChain,
    mount_offset: Point2,
    input_lower: [f64; N_INPUT],
    input_upper: [f64; N_INPUT],
    joint_lower: [f64; 4],
    joint_upper: [f64; 4],
    warm: Vec<InputVec>,
}

impl MpcController {
    pub fn new(cfg: &RobotConfig, params: &MpcParams) -> Self {
        let arm = &cfg.arm;
        let mut input_lower = [0.0; N_INPUT];
        let mut input_upper = [0.0; N_INPUT];
        input_lower[0] = -cfg.v_max;
        input_upper[0] = cfg.v_max;
        input_lower[1] = -cfg.omega_max;
        input_upper[1] = cfg.omega_max;
        for j in 0..4 {
            input_lower[2 + j] = -arm.rate_limits[j];
            input_upper[2 + j] = arm.rate_limits[j];
        }
        Self {
            horizon: params.horizon,
            dt: cfg.dt,
            params: *params,
            chain: arm.chain(),
            mount_offset: cfg.mount_offset,
            input_lower,
            input_upper,
            joint_lower: arm.lower_limits,
            joint_upper: arm.upper_limits,
            warm: vec![InputVec::zeros(); params.horizon],
        }
    }

    pub fn problem_for(&self, reference: Vec<Point3>) -> MpcProblem {
        MpcProblem {
            horizon: self.horizon,
            dt: self.dt,
            q_weight: [self.params.q_weight; 3],
            r_weight: [self.params.r_weight; N_INPUT],
            barrier_delta: self.params.barrier_delta,
            barrier_weight: self.params.barrier_weight,
            reference,
            chain: self.chain.clone(),
            mount_offset: self.mount_offset,
            input_lower: self.input_lower,
            input_upper: self.input_upper,
            joint_lower: self.joint_lower,
            joint_upper: self.joint_upper,
        }
    }

    /// Solve over the reference window and return the input to apply.
    pub fn step(&mut self, x0: StateVec, reference: Vec<Point3>) -> Result<(InputVec, SlqSolution), Error> {
        let problem = self.problem_for(reference);
        let solution = slq_solve(&problem, x0, Some(&self.warm))?;
        let applied = solution.inputs[0];
        // Shift the solution one step and repeat the tail.
        self.warm.clear();
        self.warm.extend_from_slice(&solution.inputs[1..]);
        self.warm.push(*solution.inputs.last().unwrap());
        Ok((applied, solution))
    }
}
