//! 2D world model: axis-aligned bounds and convex polygonal obstacles,
//! with the exact point/segment collision predicates the planner builds
//! on, and the world file format.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::Error;
use crate::geometry::Point2;

pub const WORLD_FORMAT_HEADER: &str = "cotrans-world v1";

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Result<Self, Error> {
        if !(min.x < max.x && min.y < max.y) {
            return Err(Error::InvalidWorld(format!(
                "degenerate bounds: ({}, {}) .. ({}, {})",
                min.x, min.y, max.x, max.y
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Inclusive segment-segment intersection test.
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self, Error> {
        if vertices.len() < 3 {
            return Err(Error::InvalidWorld(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if cross(a, b, c) <= 0.0 {
                return Err(Error::InvalidWorld(format!(
                    "polygon is not strictly convex and counter-clockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Point containment, boundary inclusive.
    pub fn contains(&self, p: Point2) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if cross(a, b, p) < 0.0 {
                return false;
            }
        }
        true
    }

    /// True iff segment `ab` touches the polygon boundary or interior.
    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        if self.contains(a) || self.contains(b) {
            return true;
        }
        let n = self.vertices.len();
        for i in 0..n {
            let v1 = self.vertices[i];
            let v2 = self.vertices[(i + 1) % n];
            if segments_intersect(a, b, v1, v2) {
                return true;
            }
        }
        false
    }

    /// Outward offset by `r` with miter joins. Conservative: the result
    /// contains the true disc-swept region.
    pub fn inflate(&self, r: f64) -> ConvexPolygon {
        assert!(r >= 0.0, "inflation radius must be >= 0");
        if r == 0.0 {
            return self.clone();
        }
        let n = self.vertices.len();
        // Offset line of each edge: point + outward normal * r.
        let mut lines = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let dx = b.x - a.x;
            let dy = b.y - a.y;
            let len = (dx * dx + dy * dy).sqrt();
            // CCW interior lies left of the edge; outward is to the right.
            let nx = dy / len;
            let ny = -dx / len;
            lines.push((
                Point2::new(a.x + r * nx, a.y + r * ny),
                Point2::new(b.x + r * nx, b.y + r * ny),
            ));
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let prev = lines[(i + n - 1) % n];
            let cur = lines[i];
            out.push(line_intersection(prev.0, prev.1, cur.0, cur.1));
        }
        ConvexPolygon { vertices: out }
    }
}

/// Intersection of two non-parallel infinite lines given by point pairs.
fn line_intersection(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> Point2 {
    let d1 = Point2::new(a2.x - a1.x, a2.y - a1.y);
    let d2 = Point2::new(b2.x - b1.x, b2.y - b1.y);
    let denom = d1.x * d2.y - d1.y * d2.x;
    if denom.abs() < 1e-15 {
        // Parallel consecutive edges cannot occur in a strictly convex
        // polygon; fall back to the shared endpoint.
        return a2;
    }
    let t = ((b1.x - a1.x) * d2.y - (b1.y - a1.y) * d2.x) / denom;
    Point2::new(a1.x + t * d1.x, a1.y + t * d1.y)
}

/// Static planar world: bounds plus convex obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World2D {
    pub bounds: Rect,
    pub obstacles: Vec<ConvexPolygon>,
}

impl World2D {
    pub fn new(bounds: Rect, obstacles: Vec<ConvexPolygon>) -> Result<Self, Error> {
        for (i, ob) in obstacles.iter().enumerate() {
            for v in ob.vertices() {
                if !bounds.contains(*v) {
                    return Err(Error::InvalidWorld(format!(
                        "obstacle {i} vertex ({}, {}) outside bounds",
                        v.x, v.y
                    )));
                }
            }
        }
        Ok(Self { bounds, obstacles })
    }

    /// Empty world over the given bounds.
    pub fn open(bounds: Rect) -> Self {
        Self {
            bounds,
            obstacles: Vec::new(),
        }
    }

    pub fn point_free(&self, p: Point2) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// World with every obstacle offset outward by `r`, used for planning
    /// with a platform footprint. Bounds are unchanged; the result is not
    /// re-validated against them.
    pub fn inflated(&self, r: f64) -> World2D {
        World2D {
            bounds: self.bounds,
            obstacles: self.obstacles.iter().map(|o| o.inflate(r)).collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let mut text = String::new();
        let _ = writeln!(text, "{WORLD_FORMAT_HEADER}");
        let _ = writeln!(
            text,
            "bounds {} {} {} {}",
            self.bounds.min.x, self.bounds.min.y, self.bounds.max.x, self.bounds.max.y
        );
        for ob in &self.obstacles {
            let _ = writeln!(text, "obstacle {}", ob.vertices().len());
            for v in ob.vertices() {
                let _ = writeln!(text, "{} {}", v.x, v.y);
            }
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidWorld(msg) => Error::parse(path, msg),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidWorld("empty world file".into()))?;
        if header != WORLD_FORMAT_HEADER {
            return Err(Error::InvalidWorld(format!(
                "unsupported header {header:?}; expected {WORLD_FORMAT_HEADER:?}"
            )));
        }
        let bounds_line = lines
            .next()
            .ok_or_else(|| Error::InvalidWorld("missing bounds line".into()))?;
        let bounds = {
            let mut it = bounds_line.split_whitespace();
            if it.next() != Some("bounds") {
                return Err(Error::InvalidWorld(format!(
                    "expected bounds line, got {bounds_line:?}"
                )));
            }
            let nums: Vec<f64> = it
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::InvalidWorld(format!("bad number {t:?} in bounds")))
                })
                .collect::<Result<_, _>>()?;
            if nums.len() != 4 {
                return Err(Error::InvalidWorld("bounds needs 4 numbers".into()));
            }
            Rect::new(Point2::new(nums[0], nums[1]), Point2::new(nums[2], nums[3]))?
        };
        let mut obstacles = Vec::new();
        while let Some(line) = lines.next() {
            let mut it = line.split_whitespace();
            if it.next() != Some("obstacle") {
                return Err(Error::InvalidWorld(format!(
                    "expected obstacle line, got {line:?}"
                )));
            }
            let count: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::InvalidWorld("obstacle needs a vertex count".into()))?;
            let mut vertices = Vec::with_capacity(count);
            for _ in 0..count {
                let vline = lines
                    .next()
                    .ok_or_else(|| Error::InvalidWorld("truncated obstacle vertex list".into()))?;
                let nums: Vec<f64> = vline
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::InvalidWorld(format!("bad vertex number {t:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                if nums.len() != 2 {
                    return Err(Error::InvalidWorld(format!(
                        "vertex line needs 2 numbers, got {vline:?}"
                    )));
                }
                vertices.push(Point2::new(nums[0], nums[1]));
            }
            obstacles.push(ConvexPolygon::new(vertices)?);
        }
        World2D::new(bounds, obstacles)
    }
}
