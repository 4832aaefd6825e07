//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured values (run with `--nocapture` to see them).
//!
//! Oracles used here (RK4 integration, brute-force graph search, dense
//! sampling, finite differences) are implemented locally and stay
//! independent of the library paths they check.

use cotrans::arm::{
    ee_world, fk_jacobian, forward_kinematics, solve_ik_leader, ArmConfig, JointState,
};
use cotrans::config::{MpcParams, RobotConfig, SimConfig};
use cotrans::diff_drive::{step_pose, VelocityCommand};
use cotrans::geometry::{wrap_angle, Point2, Point3, Pose2D};
use cotrans::guidance::{png_step, reached, PngState};
use cotrans::logging::{
    read_log_csv, write_log_csv, write_metadata, Method, SimulationLog,
};
use cotrans::mpc::{
    cost_gradient, rollout, slq_solve, total_cost, InputVec, MpcController, StateVec,
};
use cotrans::planner::{build_roadmap, plan, sample_free, segment_collides, shortest_path, Roadmap};
use cotrans::scenario::Scenario;
use cotrans::sync::run_simulation;
use cotrans::world::{ConvexPolygon, Rect, World2D};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::time::Instant;

fn default_sim() -> SimConfig {
    let mut sim = SimConfig::default();
    sim.normalize().expect("default config is valid");
    sim
}

fn benchmark_run(method: Method, seed: u64) -> (Scenario, SimConfig, SimulationLog) {
    let sim = default_sim();
    let scenario = Scenario::benchmark(sim.sim.n_d).expect("benchmark scenario");
    let cfgs = [sim.robot.clone(), sim.robot.clone()];
    let log = run_simulation(&scenario, &cfgs, &sim, method, seed).expect("simulation runs");
    (scenario, sim, log)
}

#[test]
fn criterion_1_load_rigidity() {
    let start = Instant::now();
    let (scenario, _, log) = benchmark_run(Method::PngLf, 1);
    assert!(log.meta.completed, "png-lf benchmark run did not complete");
    let follower = 1 - log.meta.leader;
    let mut max_dev_converged: f64 = 0.0;
    let mut converged = 0usize;
    for r in &log.records {
        if r.robots[follower].ik_converged {
            converged += 1;
            max_dev_converged =
                max_dev_converged.max((r.load_length - scenario.load_length).abs());
        }
    }
    let fraction = converged as f64 / log.records.len() as f64;
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        max_dev_converged <= 1e-3,
        "max |l - 0.65| over converged steps = {max_dev_converged}"
    );
    assert!(fraction >= 0.99, "follower converged on {fraction} of steps");
    assert!(elapsed <= 60.0, "run took {elapsed} s");
    println!(
        "[PASS] criterion 1: load rigidity max|l-0.65| = {max_dev_converged:.2e} m \
         (tol 1e-3), follower convergence {:.1}% (>= 99%), {elapsed:.2} s (<= 60 s)",
        fraction * 100.0
    );
}

#[test]
fn criterion_2_method_ordering() {
    let (scenario, _, png) = benchmark_run(Method::PngLf, 1);
    let (_, _, rrt) = benchmark_run(Method::RrtLf, 1);
    let (_, _, mpc) = benchmark_run(Method::SlqMpc, 1);
    let max_dev = |log: &SimulationLog| {
        log.records
            .iter()
            .map(|r| (r.load_length - scenario.load_length).abs())
            .fold(0.0f64, f64::max)
    };
    let (d_png, d_rrt, d_mpc) = (max_dev(&png), max_dev(&rrt), max_dev(&mpc));
    assert!(
        d_png <= d_rrt && d_rrt <= d_mpc,
        "ordering violated: png-lf {d_png} rrt-lf {d_rrt} slq-mpc {d_mpc}"
    );
    println!(
        "[PASS] criterion 2: max load deviation ordering png-lf {d_png:.2e} <= \
         rrt-lf {d_rrt:.2e} <= slq-mpc {d_mpc:.2e}"
    );
}

#[test]
fn criterion_3_leader_priority() {
    let (scenario, _, log) = benchmark_run(Method::PngLf, 1);
    let errs = log.tracking_error_series(&scenario.trajectories);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let leader = log.meta.leader;
    let e_leader = mean(&errs[leader]);
    let e_follower = mean(&errs[1 - leader]);
    assert!(
        e_leader <= e_follower,
        "leader mean error {e_leader} > follower mean error {e_follower}"
    );
    println!(
        "[PASS] criterion 3: mean tracking error leader {e_leader:.5} m <= \
         follower {e_follower:.5} m"
    );
}

#[test]
fn criterion_4_stop_and_sync_invariants() {
    let (_, _, log) = benchmark_run(Method::PngLf, 1);
    let mut increments = 0usize;
    for (k, pair) in log.records.windows(2).enumerate() {
        let (prev, cur) = (&pair[0], &pair[1]);
        assert!(
            cur.target_index >= prev.target_index,
            "p decreased at step {}",
            k + 1
        );
        for a in 0..2 {
            if cur.robots[a].stop {
                assert_eq!(
                    cur.robots[a].pose, prev.robots[a].pose,
                    "stopped robot {a} moved at step {}",
                    k + 1
                );
                assert_eq!(
                    cur.robots[a].cmd,
                    VelocityCommand::zero(),
                    "stopped robot {a} commanded at step {}",
                    k + 1
                );
            }
        }
        if cur.target_index > prev.target_index {
            increments += 1;
            assert!(
                !cur.robots[0].stop && !cur.robots[1].stop,
                "stop flag set on the first step after an increment at step {}",
                k + 1
            );
        }
    }
    assert!(increments > 0, "no target switches recorded");
    println!(
        "[PASS] criterion 4: stop-and-sync invariants hold over {} steps \
         ({increments} target switches)",
        log.records.len()
    );
}

/// Reference RK4 integration of the unicycle ODE.
fn rk4_unicycle(pose: Pose2D, cmd: VelocityCommand, dt: f64, steps: usize) -> Pose2D {
    let f = |th: f64| (cmd.v * th.cos(), cmd.v * th.sin(), cmd.omega);
    let h = dt / steps as f64;
    let (mut x, mut y, mut th) = (pose.x, pose.y, pose.theta);
    for _ in 0..steps {
        let (k1x, k1y, k1t) = f(th);
        let (k2x, k2y, k2t) = f(th + 0.5 * h * k1t);
        let (k3x, k3y, k3t) = f(th + 0.5 * h * k2t);
        let (k4x, k4y, k4t) = f(th + h * k3t);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        th += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    }
    Pose2D::new(x, y, th)
}

#[test]
fn criterion_5_kinematics_oracles() {
    let start = Instant::now();

    // Diff-drive closed form vs RK4 on 10^4 random triples.
    let mut rng = StdRng::seed_from_u64(50);
    let mut worst_step = 0.0f64;
    for _ in 0..10_000 {
        let pose = Pose2D::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-3.14..3.14),
        );
        let cmd = VelocityCommand::new(rng.gen_range(-0.26..0.26), rng.gen_range(-1.82..1.82));
        let dt = rng.gen_range(1e-4..0.08);
        let got = step_pose(pose, cmd, dt).unwrap();
        let want = rk4_unicycle(pose, cmd, dt, 64);
        let err = got.position().dist(&want.position());
        worst_step = worst_step.max(err);
    }
    assert!(worst_step <= 1e-6, "diff-drive vs RK4 max error {worst_step}");

    // FK-IK round trip on 1000 reachable targets.
    let arm = ArmConfig::default();
    let chain = arm.chain();
    let mut relaxed = arm.mid_range_state();
    relaxed.rate_limit = [1e6; 4];
    let mut worst_round_trip = 0.0f64;
    let mut solved = 0usize;
    while solved < 1000 {
        let b1 = rng.gen_range(arm.lower_limits[0]..arm.upper_limits[0]);
        let b2 = rng.gen_range(arm.lower_limits[1]..arm.upper_limits[1]);
        let b3 = rng.gen_range(arm.lower_limits[2]..arm.upper_limits[2]);
        let b4 = arm.pitch_sum - b2 - b3;
        if b4 < arm.lower_limits[3] || b4 > arm.upper_limits[3] {
            continue;
        }
        let target = forward_kinematics(&chain, &[b1, b2, b3, b4]);
        let r = solve_ik_leader(&chain, target, &relaxed, 0.08).unwrap();
        let reached = forward_kinematics(&chain, &r.beta_star);
        worst_round_trip = worst_round_trip.max(reached.dist(&target));
        solved += 1;
    }
    assert!(
        worst_round_trip <= 1e-4,
        "FK-IK round trip max error {worst_round_trip}"
    );

    // Analytic Jacobian vs central differences at 100 configurations.
    let mut worst_jac = 0.0f64;
    let h = 1e-6;
    for _ in 0..100 {
        let beta = [
            rng.gen_range(-2.5..2.5),
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-0.9..1.3),
            rng.gen_range(-1.5..2.0),
        ];
        let j = fk_jacobian(&chain, &beta);
        for col in 0..4 {
            let mut bp = beta;
            let mut bm = beta;
            bp[col] += h;
            bm[col] -= h;
            let fp = forward_kinematics(&chain, &bp);
            let fm = forward_kinematics(&chain, &bm);
            let fd = [
                (fp.x - fm.x) / (2.0 * h),
                (fp.y - fm.y) / (2.0 * h),
                (fp.z - fm.z) / (2.0 * h),
            ];
            for row in 0..3 {
                let rel = (j[(row, col)] - fd[row]).abs() / fd[row].abs().max(1e-3);
                worst_jac = worst_jac.max(rel);
            }
        }
    }
    assert!(worst_jac <= 1e-5, "Jacobian FD relative error {worst_jac}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed <= 30.0, "kinematics oracles took {elapsed} s");
    println!(
        "[PASS] criterion 5: diff-drive vs RK4 {worst_step:.2e} m (tol 1e-6), \
         FK-IK round trip {worst_round_trip:.2e} m (tol 1e-4), Jacobian FD \
         {worst_jac:.2e} rel (tol 1e-5), {elapsed:.1} s (<= 30 s)"
    );
}

/// Exhaustive simple-path minimum for small graphs.
fn brute_force_shortest(rm: &Roadmap, start: usize, goal: usize) -> Option<f64> {
    fn dfs(
        rm: &Roadmap,
        current: usize,
        goal: usize,
        visited: &mut Vec<bool>,
        cost: f64,
        best: &mut Option<f64>,
    ) {
        if current == goal {
            if best.map_or(true, |b| cost < b) {
                *best = Some(cost);
            }
            return;
        }
        for &(j, w) in &rm.adjacency[current] {
            if !visited[j] {
                visited[j] = true;
                dfs(rm, j, goal, visited, cost + w, best);
                visited[j] = false;
            }
        }
    }
    let mut visited = vec![false; rm.vertices.len()];
    visited[start] = true;
    let mut best = None;
    dfs(rm, start, goal, &mut visited, 0.0, &mut best);
    best
}

#[test]
fn criterion_6_planner_correctness() {
    // Dijkstra against exhaustive enumeration on 100 random graphs.
    let mut rng = StdRng::seed_from_u64(60);
    let mut checked = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(2..=10usize);
        let vertices: Vec<Point2> = (0..n)
            .map(|_| Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.45) {
                    let w = vertices[i].dist(&vertices[j]);
                    adjacency[i].push((j, w));
                    adjacency[j].push((i, w));
                }
            }
        }
        let rm = Roadmap {
            vertices: vertices.clone(),
            adjacency,
        };
        let brute = brute_force_shortest(&rm, 0, n - 1);
        match (brute, shortest_path(&rm, vertices[0], vertices[n - 1])) {
            (None, Err(_)) => {}
            (Some(best), Ok(path)) => {
                let len: f64 = path.windows(2).map(|w| w[0].dist(&w[1])).sum();
                assert!(
                    (len - best).abs() <= 1e-9,
                    "dijkstra {len} vs brute force {best}"
                );
            }
            (b, d) => panic!("oracle {b:?} disagrees with dijkstra {d:?}"),
        }
        checked += 1;
    }

    // Full pipeline: planned path must survive a dense collision re-check
    // in the planning-inflated world.
    let bounds = Rect::new(Point2::new(-4.0, -4.0), Point2::new(4.0, 4.0)).unwrap();
    let square = |cx: f64, cy: f64, half: f64| {
        ConvexPolygon::new(vec![
            Point2::new(cx - half, cy - half),
            Point2::new(cx + half, cy - half),
            Point2::new(cx + half, cy + half),
            Point2::new(cx - half, cy + half),
        ])
        .unwrap()
    };
    let world = World2D::new(bounds, vec![square(0.0, -0.8, 0.6), square(0.5, 1.8, 0.5)]).unwrap();
    let sim = default_sim();
    let outcome = plan(
        &world,
        Point2::new(-3.2, 0.0),
        Point2::new(3.2, 0.0),
        &sim.planner,
        7,
        0.65,
        0.2,
        40,
    )
    .expect("plan succeeds");
    let inflated = world.inflated(sim.planner.clearance + 0.325);
    for seg in outcome.path.windows(2) {
        for k in 0..=10_000 {
            let t = k as f64 / 10_000.0;
            let p = Point2::new(
                seg[0].x + t * (seg[1].x - seg[0].x),
                seg[0].y + t * (seg[1].y - seg[0].y),
            );
            assert!(
                inflated.point_free(p),
                "planned path touches an inflated obstacle at ({}, {})",
                p.x,
                p.y
            );
        }
    }
    // Offset trajectories stay clear of the raw obstacles.
    for traj in [&outcome.leader_trajectory, &outcome.follower_trajectory] {
        for seg in traj.waypoints().windows(2) {
            assert!(!segment_collides(seg[0].xy(), seg[1].xy(), &world));
        }
    }

    // Roadmap determinism: identical seeds reproduce the roadmap
    // bit-exactly.
    let samples_a = sample_free(&world, 150, 99, 1_000_000).unwrap();
    let samples_b = sample_free(&world, 150, 99, 1_000_000).unwrap();
    assert_eq!(samples_a, samples_b);
    let rm_a = build_roadmap(&world, &samples_a, 8, Point2::new(-3.0, 0.0), Point2::new(3.0, 0.0));
    let rm_b = build_roadmap(&world, &samples_b, 8, Point2::new(-3.0, 0.0), Point2::new(3.0, 0.0));
    assert_eq!(rm_a, rm_b);
    for (va, vb) in rm_a.vertices.iter().zip(&rm_b.vertices) {
        assert_eq!(va.x.to_bits(), vb.x.to_bits());
        assert_eq!(va.y.to_bits(), vb.y.to_bits());
    }

    println!(
        "[PASS] criterion 6: dijkstra = brute force on {checked} graphs, planned \
         path clear under dense re-check, roadmaps bit-identical per seed"
    );
}

#[test]
fn criterion_7_slq_mpc_health() {
    // Non-increasing cost on 50 random short-horizon problems.
    let cfg = RobotConfig::default();
    let arm = ArmConfig::default();
    let mut rng = StdRng::seed_from_u64(70);
    let random_state = |rng: &mut StdRng| -> StateVec {
        let mut x = StateVec::zeros();
        x[0] = rng.gen_range(-1.0..1.0);
        x[1] = rng.gen_range(-1.0..1.0);
        x[2] = rng.gen_range(-1.5..1.5);
        for j in 0..4 {
            x[3 + j] = rng.gen_range(arm.lower_limits[j] + 0.3..arm.upper_limits[j] - 0.3);
        }
        x
    };
    for case in 0..50 {
        let horizon = rng.gen_range(4..12);
        let controller = MpcController::new(&cfg, &MpcParams { horizon, ..MpcParams::default() });
        let x0 = random_state(&mut rng);
        let reference: Vec<Point3> = (0..=horizon)
            .map(|i| {
                Point3::new(
                    x0[0] + 0.02 * i as f64,
                    x0[1] + rng.gen_range(-0.02..0.02),
                    0.2,
                )
            })
            .collect();
        let problem = controller.problem_for(reference);
        let sol = slq_solve(&problem, x0, None).unwrap();
        for pair in sol.cost_history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "case {case}: cost increased {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    // Analytic cost gradient vs finite differences.
    let horizon = 8;
    let controller = MpcController::new(&cfg, &MpcParams { horizon, ..MpcParams::default() });
    let mut worst_grad = 0.0f64;
    for _ in 0..5 {
        let x0 = random_state(&mut rng);
        let reference: Vec<Point3> = (0..=horizon)
            .map(|i| Point3::new(x0[0] + 0.01 * i as f64, x0[1] + 0.2, 0.2))
            .collect();
        let problem = controller.problem_for(reference);
        let us: Vec<InputVec> = (0..horizon)
            .map(|_| {
                let mut u = InputVec::zeros();
                u[0] = rng.gen_range(-0.2..0.2);
                u[1] = rng.gen_range(-1.0..1.0);
                for j in 0..4 {
                    u[2 + j] = rng.gen_range(-1.0..1.0);
                }
                u
            })
            .collect();
        let grads = cost_gradient(&problem, x0, &us);
        let h = 1e-6;
        for t in 0..horizon {
            for i in 0..6 {
                let mut up = us.clone();
                let mut dn = us.clone();
                up[t][i] += h;
                dn[t][i] -= h;
                let cp = total_cost(&problem, &rollout(&problem, x0, &up), &up);
                let cn = total_cost(&problem, &rollout(&problem, x0, &dn), &dn);
                let fd = (cp - cn) / (2.0 * h);
                let rel = (grads[t][i] - fd).abs() / fd.abs().max(1e-2);
                worst_grad = worst_grad.max(rel);
            }
        }
    }
    assert!(worst_grad <= 1e-4, "cost gradient FD relative error {worst_grad}");

    // The benchmark MPC run completes with bounded mean tracking error.
    let (scenario, _, log) = benchmark_run(Method::SlqMpc, 1);
    assert!(log.meta.completed, "slq-mpc run did not complete");
    let errs = log.tracking_error_series(&scenario.trajectories);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let worst_mean = mean(&errs[0]).max(mean(&errs[1]));
    assert!(worst_mean.is_finite() && worst_mean < 0.2, "mean error {worst_mean}");

    println!(
        "[PASS] criterion 7: SLQ costs non-increasing (50 problems), gradient FD \
         {worst_grad:.2e} rel (tol 1e-4), benchmark mean error {worst_mean:.4} m (< 0.2)"
    );
}

#[test]
fn criterion_8_png_convergence() {
    let sim = default_sim();
    let cfg = &sim.robot;
    let rho_d = cfg.reachability_radius();
    let target = Point2::new(0.0, 0.0);
    let mut rng = StdRng::seed_from_u64(80);
    let mut failures: Vec<(Pose2D, f64)> = Vec::new();
    for _ in 0..100 {
        let r = rng.gen_range(0.0..3.0);
        let phi = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let start = Pose2D::new(
            r * phi.cos(),
            r * phi.sin(),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        let mut pose = start;
        let mut state = PngState::new(&sim.png);
        let mut ok = false;
        for _ in 0..5000 {
            if reached(pose, target, rho_d) {
                ok = true;
                break;
            }
            match png_step(state, pose, target, cfg, cfg.dt) {
                Ok((cmd, next)) => {
                    state = next;
                    pose = step_pose(pose, cmd, cfg.dt).unwrap();
                }
                Err(_) => {
                    ok = true;
                    break;
                }
            }
        }
        if !ok {
            failures.push((start, pose.position().dist(&target)));
        }
    }
    if !failures.is_empty() {
        for (start, final_dist) in &failures {
            println!(
                "[FAIL-CASE] start ({:.3}, {:.3}, {:.3}) ended {final_dist:.3} m from target",
                start.x, start.y, start.theta
            );
        }
    }
    assert!(
        failures.len() <= 1,
        "{} of 100 pursuits failed to enter rho_d",
        failures.len()
    );
    println!(
        "[PASS] criterion 8: PNG (N = 6) entered rho_d in {}/100 random starts within 5000 steps",
        100 - failures.len()
    );
}

#[test]
fn criterion_9_determinism_and_io() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for repeat in 0..2 {
        let (_, _, log) = benchmark_run(Method::RrtLf, 11);
        let path = dir.path().join(format!("run{repeat}.csv"));
        write_log_csv(&log, &path).unwrap();
        write_metadata(&log.meta, &path).unwrap();
        bytes.push(std::fs::read(&path).unwrap());

        // Read-back reproduces every CSV-carried float bit-exactly.
        let back = read_log_csv(&path).unwrap();
        assert_eq!(back.records.len(), log.records.len());
        for (a, b) in log.records.iter().zip(&back.records) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.load_length.to_bits(), b.load_length.to_bits());
            for i in 0..2 {
                assert_eq!(a.robots[i].pose.x.to_bits(), b.robots[i].pose.x.to_bits());
                assert_eq!(a.robots[i].pose.y.to_bits(), b.robots[i].pose.y.to_bits());
                assert_eq!(
                    a.robots[i].pose.theta.to_bits(),
                    b.robots[i].pose.theta.to_bits()
                );
                assert_eq!(a.robots[i].cmd.v.to_bits(), b.robots[i].cmd.v.to_bits());
                assert_eq!(
                    a.robots[i].cmd.omega.to_bits(),
                    b.robots[i].cmd.omega.to_bits()
                );
                for j in 0..4 {
                    assert_eq!(
                        a.robots[i].joints[j].to_bits(),
                        b.robots[i].joints[j].to_bits()
                    );
                }
                assert_eq!(a.robots[i].ee.x.to_bits(), b.robots[i].ee.x.to_bits());
                assert_eq!(a.robots[i].ee.z.to_bits(), b.robots[i].ee.z.to_bits());
                assert_eq!(a.robots[i].stop, b.robots[i].stop);
            }
            assert_eq!(a.target_index, b.target_index);
            assert_eq!(
                a.tracking_error[0].to_bits(),
                b.tracking_error[0].to_bits()
            );
            assert_eq!(
                a.tracking_error[1].to_bits(),
                b.tracking_error[1].to_bits()
            );
        }
    }
    assert_eq!(bytes[0], bytes[1], "repeat runs differ at the byte level");
    println!(
        "[PASS] criterion 9: identical seed + config gave byte-identical CSVs \
         ({} bytes) and bit-exact read-back",
        bytes[0].len()
    );
}

// The acceptance scan above exercises the public surfaces end to end;
// the remaining checks pin a handful of values the criteria reference
// implicitly.

#[test]
fn benchmark_golden_values() {
    let sim = default_sim();
    let s = Scenario::benchmark(60).unwrap();
    assert_eq!(s.load_length, 0.65);
    assert_eq!(s.n_d(), 60);
    assert_eq!(sim.robot.gamma, 0.4);
    assert_eq!(sim.robot.dt, 0.08);
    assert_eq!(sim.png.nav_constant, 6.0);
    assert_eq!(sim.sampling.count, 500);
    let w = s.trajectories[0].waypoints();
    assert_eq!((w[0].x, w[0].y), (1.0, -1.0));
    let w2 = s.trajectories[1].waypoints();
    assert_eq!((w2[0].x, w2[0].y), (1.65, -1.0));
    assert_eq!((w[59].x, w[59].y), (-1.0, -1.0));
    assert_eq!((w2[59].x, w2[59].y), (-1.65, -1.0));
    let limits = ArmConfig::default();
    use std::f64::consts::PI;
    assert_eq!(limits.lower_limits, [-0.9 * PI, -0.57 * PI, -0.3 * PI, -0.5 * PI]);
    assert_eq!(limits.upper_limits, [0.9 * PI, 0.5 * PI, 0.44 * PI, 0.65 * PI]);
    assert_eq!(limits.rate_limits, [4.0; 4]);
    println!("[PASS] benchmark golden values match the documented course setup");
}

#[test]
fn rate_limits_hold_over_a_full_run() {
    let (_, sim, log) = benchmark_run(Method::PngLf, 1);
    let dt = sim.robot.dt;
    let rates = sim.robot.arm.rate_limits;
    for pair in log.records.windows(2) {
        for a in 0..2 {
            for j in 0..4 {
                let moved = (pair[1].robots[a].joints[j] - pair[0].robots[a].joints[j]).abs();
                assert!(
                    moved <= rates[j] * dt + 1e-12,
                    "joint {j} of robot {a} moved {moved} rad in one step"
                );
            }
        }
    }
    println!("[PASS] joint rate limits hold at every logged step");
}

#[test]
fn follower_distance_recomputed_from_logged_state() {
    // Whenever the follower solve converged, the end-effector distance
    // recomputed from the logged joint states stays within tolerance.
    let (scenario, sim, log) = benchmark_run(Method::PngLf, 1);
    let follower = 1 - log.meta.leader;
    let mut checked = 0;
    for r in &log.records {
        if !r.robots[follower].ik_converged {
            continue;
        }
        let ee0 = ee_world(r.robots[0].pose, &sim.robot, &r.robots[0].joints);
        let ee1 = ee_world(r.robots[1].pose, &sim.robot, &r.robots[1].joints);
        let dist = ee0.dist(&ee1);
        assert!(
            (dist - scenario.load_length).abs() <= 1e-3,
            "recomputed distance {dist}"
        );
        checked += 1;
    }
    assert!(checked > 100);
    println!("[PASS] recomputed end-effector distances match the rod length on {checked} steps");
}

#[test]
fn wrapped_angles_stay_in_range_across_runs() {
    let (_, _, log) = benchmark_run(Method::PngLf, 1);
    for r in &log.records {
        for a in 0..2 {
            let th = r.robots[a].pose.theta;
            assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&th));
            assert_eq!(wrap_angle(th), th);
        }
    }
    println!("[PASS] logged headings stay wrapped to [-pi, pi)");
}

#[test]
fn init_joint_states_respect_limits() {
    let (_, sim, log) = benchmark_run(Method::PngLf, 1);
    let arm = &sim.robot.arm;
    for r in &log.records {
        for a in 0..2 {
            let state = JointState {
                beta: r.robots[a].joints,
                lower: arm.lower_limits,
                upper: arm.upper_limits,
                rate_limit: arm.rate_limits,
            };
            state.validate().expect("logged joints stay within limits");
        }
    }
    println!("[PASS] all logged joint states stay inside the configured limits");
}
