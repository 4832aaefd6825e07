//! Planar/3D geometric primitives shared by the planner, trackers and
//! kinematics: pose and point types, angle wrapping, and polyline
//! projection utilities.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::Error;

/// Wrap an angle to `[-pi, pi)`.
///
/// Panics on non-finite input.
pub fn wrap_angle(a: f64) -> f64 {
    assert!(a.is_finite(), "wrap_angle: non-finite angle {a}");
    let two_pi = 2.0 * PI;
    let r = (a + PI).rem_euclid(two_pi) - PI;
    // rem_euclid may land exactly on 2*pi after rounding; fold the
    // half-open boundary back.
    if r >= PI {
        -PI
    } else {
        r
    }
}

/// 2D point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn dist2(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// 3D point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn dist(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Planar base pose `(x, y, theta)`; heading is kept in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Body-frame point expressed in the world frame.
    pub fn transform_point(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y)
    }

    /// World-frame point expressed in the body frame.
    pub fn inverse_transform_point(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Ordered 3D end-effector waypoints; consecutive waypoints must be
/// distinct. The XY projection is precomputed for the trackers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory3D {
    waypoints: Vec<Point3>,
}

impl Trajectory3D {
    pub fn new(waypoints: Vec<Point3>) -> Result<Self, Error> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidTrajectory(format!(
                "need at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidTrajectory(format!(
                    "waypoint {i} is not finite"
                )));
            }
        }
        for (i, pair) in waypoints.windows(2).enumerate() {
            if pair[0].dist(&pair[1]) <= 0.0 {
                return Err(Error::InvalidTrajectory(format!(
                    "waypoints {i} and {} coincide",
                    i + 1
                )));
            }
        }
        Ok(Self { waypoints })
    }

    pub fn waypoints(&self) -> &[Point3] {
        &self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// XY projection as a polyline.
    pub fn xy_polyline(&self) -> Vec<Point2> {
        self.waypoints.iter().map(Point3::xy).collect()
    }

    /// Total polyline length of the XY projection.
    pub fn xy_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].xy().dist(&w[1].xy()))
            .sum()
    }
}

/// Result of projecting a point onto a polyline: the nearest point, the
/// segment it lies on and the clamped segment parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylineProjection {
    pub foot: Point2,
    pub segment: usize,
    pub t: f64,
}

/// Globally nearest point of a polyline to `p`. Ties break to the lowest
/// segment index.
pub fn project_point_to_polyline(
    p: Point2,
    poly: &[Point2],
) -> Result<PolylineProjection, Error> {
    if poly.len() < 2 {
        return Err(Error::EmptyPolyline);
    }
    let mut best: Option<(f64, PolylineProjection)> = None;
    for (i, seg) in poly.windows(2).enumerate() {
        let (a, b) = (seg[0], seg[1]);
        let abx = b.x - a.x;
        let aby = b.y - a.y;
        let len2 = abx * abx + aby * aby;
        let t = if len2 > 0.0 {
            (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let foot = Point2::new(a.x + t * abx, a.y + t * aby);
        let d2 = p.dist2(&foot);
        if best.is_none_or(|(bd2, _)| d2 < bd2) {
            best = Some((d2, PolylineProjection { foot, segment: i, t }));
        }
    }
    Ok(best.expect("polyline has at least one segment").1)
}

/// Linear interpolation of the 3D waypoints at a projected parameter.
/// Endpoints are returned exactly.
pub fn lift_to_trajectory(traj: &Trajectory3D, segment: usize, t: f64) -> Result<Point3, Error> {
    let wps = traj.waypoints();
    if segment + 1 >= wps.len() {
        return Err(Error::IndexOutOfRange {
            index: segment,
            len: wps.len().saturating_sub(1),
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "segment parameter {t} outside [0, 1]"
        )));
    }
    if t == 0.0 {
        return Ok(wps[segment]);
    }
    if t == 1.0 {
        return Ok(wps[segment + 1]);
    }
    let a = wps[segment];
    let b = wps[segment + 1];
    Ok(Point3::new(
        a.x * (1.0 - t) + b.x * t,
        a.y * (1.0 - t) + b.y * t,
        a.z * (1.0 - t) + b.z * t,
    ))
}
