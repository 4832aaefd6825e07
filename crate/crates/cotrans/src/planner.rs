//! Probabilistic roadmap over the free space, Dijkstra extraction and the
//! conversion of one planned path into the pair of offset end-effector
//! trajectories for the rod endpoints.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::config::PlannerParams;
use crate::error::Error;
use crate::geometry::{Point2, Point3, Trajectory3D};
use crate::world::World2D;

/// Undirected roadmap with Euclidean edge weights. Adjacency lists are
/// sorted by neighbor index so identical inputs give identical graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roadmap {
    pub vertices: Vec<Point2>,
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

/// Rejection-sample `n` collision-free points. Deterministic for a fixed
/// seed; fails once `max_attempts` draws have been rejected.
pub fn sample_free(
    world: &World2D,
    n: usize,
    rng_seed: u64,
    max_attempts: usize,
) -> Result<Vec<Point2>, Error> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut points = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while points.len() < n {
        if attempts >= max_attempts {
            return Err(Error::PlanningFailure(format!(
                "rejection sampling exhausted {max_attempts} attempts after {} of {n} samples",
                points.len()
            )));
        }
        attempts += 1;
        let p = Point2::new(
            rng.gen_range(world.bounds.min.x..=world.bounds.max.x),
            rng.gen_range(world.bounds.min.y..=world.bounds.max.y),
        );
        if world.point_free(p) {
            points.push(p);
        }
    }
    Ok(points)
}

/// Straight-line local planner collision check: does segment `ab` touch
/// any obstacle's interior or boundary?
pub fn segment_collides(a: Point2, b: Point2, world: &World2D) -> bool {
    world.obstacles.iter().any(|o| o.intersects_segment(a, b))
}

/// Connect every vertex to up to `c` nearest neighbours whose connecting
/// segments are collision-free. Vertices are the samples followed by
/// `q_init` and `q_goal`.
pub fn build_roadmap(
    world: &World2D,
    samples: &[Point2],
    c: usize,
    q_init: Point2,
    q_goal: Point2,
) -> Roadmap {
    let mut vertices = samples.to_vec();
    vertices.push(q_init);
    vertices.push(q_goal);
    let n = vertices.len();
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];

    for i in 0..n {
        // c nearest neighbours, ties broken by index.
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            let da = vertices[i].dist2(&vertices[a]);
            let db = vertices[i].dist2(&vertices[b]);
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        for &j in order.iter().take(c) {
            if adjacency[i].iter().any(|&(k, _)| k == j) {
                continue;
            }
            if !segment_collides(vertices[i], vertices[j], world) {
                let w = vertices[i].dist(&vertices[j]);
                adjacency[i].push((j, w));
                adjacency[j].push((i, w));
            }
        }
    }
    for list in &mut adjacency {
        list.sort_by_key(|e| e.0);
        list.dedup_by_key(|e| e.0);
    }
    Roadmap { vertices, adjacency }
}

/// Dijkstra distances from `source`; unreachable vertices get infinity.
fn dijkstra_distances(roadmap: &Roadmap, source: usize) -> Vec<f64> {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Item {
        cost: f64,
        index: usize,
    }
    impl Eq for Item {}
    impl Ord for Item {
        fn cmp(&self, other: &Self) -> Ordering {
            // Min-heap on cost, then on index for determinism.
            other
                .cost
                .partial_cmp(&self.cost)
                .unwrap_or(Ordering::Equal)
                .then(other.index.cmp(&self.index))
        }
    }
    impl PartialOrd for Item {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }

    let n = roadmap.vertices.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Item { cost: 0.0, index: source });
    let mut done = vec![false; n];
    while let Some(Item { cost, index }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        for &(j, w) in &roadmap.adjacency[index] {
            let next = cost + w;
            if next < dist[j] {
                dist[j] = next;
                heap.push(Item { cost: next, index: j });
            }
        }
    }
    dist
}

/// Minimal-total-weight vertex sequence between two roadmap vertices.
/// Among equal-length paths the lexicographically smallest vertex-index
/// sequence is returned.
pub fn shortest_path(
    roadmap: &Roadmap,
    q_init: Point2,
    q_goal: Point2,
) -> Result<Vec<Point2>, Error> {
    let find = |p: Point2| roadmap.vertices.iter().position(|v| *v == p);
    let start = find(q_init).ok_or_else(|| {
        Error::InvalidParameter("q_init is not a roadmap vertex".into())
    })?;
    let goal = find(q_goal).ok_or_else(|| {
        Error::InvalidParameter("q_goal is not a roadmap vertex".into())
    })?;

    if start == goal {
        return Ok(vec![roadmap.vertices[start]]);
    }
    let from_start = dijkstra_distances(roadmap, start);
    if !from_start[goal].is_finite() {
        return Err(Error::NoPath);
    }
    let to_goal = dijkstra_distances(roadmap, goal);
    let total = from_start[goal];

    // Greedy walk over the shortest-path DAG, taking the smallest vertex
    // index among admissible successors at every hop.
    const EPS: f64 = 1e-9;
    let mut path = vec![start];
    let mut current = start;
    while current != goal {
        let mut next: Option<usize> = None;
        for &(j, w) in &roadmap.adjacency[current] {
            let on_tree = (from_start[current] + w - from_start[j]).abs() <= EPS;
            let on_shortest = (from_start[j] + to_goal[j] - total).abs() <= EPS;
            if on_tree && on_shortest {
                next = Some(next.map_or(j, |k| k.min(j)));
            }
        }
        let Some(j) = next else {
            return Err(Error::NoPath);
        };
        path.push(j);
        current = j;
    }
    Ok(path.into_iter().map(|i| roadmap.vertices[i]).collect())
}

/// Resample a path at arc-length-uniform spacing.
fn resample_path(path: &[Point2], n_d: usize) -> Vec<Point2> {
    let mut cum = vec![0.0];
    for seg in path.windows(2) {
        cum.push(cum.last().unwrap() + seg[0].dist(&seg[1]));
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n_d);
    out.push(path[0]);
    let mut seg = 0usize;
    for i in 1..n_d - 1 {
        let s = total * i as f64 / (n_d - 1) as f64;
        while seg + 2 < path.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let span = (cum[seg + 1] - cum[seg]).max(1e-300);
        let t = (s - cum[seg]) / span;
        out.push(Point2::new(
            path[seg].x + t * (path[seg + 1].x - path[seg].x),
            path[seg].y + t * (path[seg + 1].y - path[seg].y),
        ));
    }
    out.push(*path.last().unwrap());
    out
}

/// Unit tangents at the resampled waypoints; interior corners use the
/// bisector of the adjacent segment directions.
fn waypoint_normals(pts: &[Point2]) -> Vec<Point2> {
    let n = pts.len();
    let seg_dir = |a: Point2, b: Point2| {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let len = (dx * dx + dy * dy).sqrt().max(1e-300);
        Point2::new(dx / len, dy / len)
    };
    (0..n)
        .map(|i| {
            let t = if i == 0 {
                seg_dir(pts[0], pts[1])
            } else if i == n - 1 {
                seg_dir(pts[n - 2], pts[n - 1])
            } else {
                let a = seg_dir(pts[i - 1], pts[i]);
                let b = seg_dir(pts[i], pts[i + 1]);
                let sx = a.x + b.x;
                let sy = a.y + b.y;
                let len = (sx * sx + sy * sy).sqrt();
                if len < 1e-12 {
                    // 180-degree reversal; keep the incoming direction.
                    a
                } else {
                    Point2::new(sx / len, sy / len)
                }
            };
            // Left normal of the travel direction.
            Point2::new(-t.y, t.x)
        })
        .collect()
}

/// Turn one planned path into the leader/follower end-effector
/// trajectories: resampled to `n_d` waypoints, offset half the load
/// length to each side of the path, at constant carry height. The leader
/// runs on the left of the direction of travel.
pub fn path_to_trajectories(
    path: &[Point2],
    load_length: f64,
    carry_height: f64,
    n_d: usize,
    world: Option<&World2D>,
) -> Result<(Trajectory3D, Trajectory3D), Error> {
    if path.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "path needs at least 2 points, got {}",
            path.len()
        )));
    }
    if n_d < 2 {
        return Err(Error::InvalidParameter(format!("n_d must be >= 2, got {n_d}")));
    }
    if !(load_length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "load length must be > 0, got {load_length}"
        )));
    }
    let pts = resample_path(path, n_d);
    let normals = waypoint_normals(&pts);
    let half = 0.5 * load_length;
    let offset = |sign: f64| -> Vec<Point3> {
        pts.iter()
            .zip(&normals)
            .map(|(p, nrm)| {
                Point3::new(p.x + sign * half * nrm.x, p.y + sign * half * nrm.y, carry_height)
            })
            .collect()
    };
    let left = offset(1.0);
    let right = offset(-1.0);

    if let Some(world) = world {
        for (side, pts) in [("leader", &left), ("follower", &right)] {
            for seg in pts.windows(2) {
                if segment_collides(seg[0].xy(), seg[1].xy(), world) {
                    return Err(Error::PlanningFailure(format!(
                        "{side}-side trajectory intersects an obstacle near ({:.3}, {:.3})",
                        seg[0].x, seg[0].y
                    )));
                }
            }
        }
    }

    let t_l = Trajectory3D::new(left)
        .map_err(|e| Error::PlanningFailure(format!("leader-side trajectory degenerate: {e}")))?;
    let t_f = Trajectory3D::new(right)
        .map_err(|e| Error::PlanningFailure(format!("follower-side trajectory degenerate: {e}")))?;
    Ok((t_l, t_f))
}

/// Planned path plus the derived trajectories.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub path: Vec<Point2>,
    pub leader_trajectory: Trajectory3D,
    pub follower_trajectory: Trajectory3D,
}

/// Full pipeline: inflate the world by the platform clearance, sample,
/// connect, search, and offset the path into the two rod-end
/// trajectories.
#[allow(clippy::too_many_arguments)]
pub fn plan(
    world: &World2D,
    q_init: Point2,
    q_goal: Point2,
    params: &PlannerParams,
    rng_seed: u64,
    load_length: f64,
    carry_height: f64,
    n_d: usize,
) -> Result<PlanOutcome, Error> {
    // The planned path is the rod midpoint; the rod ends sweep half the
    // load length to each side, so they need clearance too.
    let inflated = world.inflated(params.clearance + 0.5 * load_length);
    if !inflated.point_free(q_init) {
        return Err(Error::PlanningFailure("q_init is not in free space".into()));
    }
    if !inflated.point_free(q_goal) {
        return Err(Error::PlanningFailure("q_goal is not in free space".into()));
    }
    let samples = sample_free(
        &inflated,
        params.n_samples,
        rng_seed,
        params.attempt_factor.saturating_mul(params.n_samples),
    )?;
    let roadmap = build_roadmap(&inflated, &samples, params.neighbors, q_init, q_goal);
    let path = shortest_path(&roadmap, q_init, q_goal)?;
    let (t_l, t_f) = path_to_trajectories(&path, load_length, carry_height, n_d, Some(world))?;
    Ok(PlanOutcome {
        path,
        leader_trajectory: t_l,
        follower_trajectory: t_f,
    })
}
