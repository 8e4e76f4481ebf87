//! Task description: patrol paths, sensor footprints, robots, and the
//! interest points where the field accumulates.
//!
//! Path position is parameterized by a normalized coordinate `theta` in
//! [0, 1) that runs once around the closed path; all internal speeds are in
//! theta-units (physical speed divided by path length). Conversion from m/s
//! happens here, once, when a task is assembled.

use crate::geom::Point2;
use crate::{Error, Result};

/// A closed polyline path, parameterized by normalized arc length.
#[derive(Clone, Debug)]
pub struct PathSpec {
    vertices: Vec<Point2>,
    /// Cumulative arc length per vertex; last entry is the total length.
    cum: Vec<f64>,
    length: f64,
}

impl PathSpec {
    /// Build a closed path from polyline vertices. The closing edge back to
    /// the first vertex is implied; consecutive duplicate vertices are
    /// dropped.
    pub fn closed(points: &[Point2]) -> Result<PathSpec> {
        let mut v: Vec<Point2> = Vec::with_capacity(points.len() + 1);
        for &p in points {
            if v.last().map_or(true, |&last| last.dist(p) > 0.0) {
                v.push(p);
            }
        }
        if v.len() > 1 && v[0].dist(*v.last().unwrap()) == 0.0 {
            v.pop();
        }
        if v.len() < 3 {
            return Err(Error::InvalidTask(vec![
                "path needs at least 3 distinct vertices".into(),
            ]));
        }
        let first = v[0];
        v.push(first);
        let mut cum = Vec::with_capacity(v.len());
        let mut s = 0.0;
        cum.push(0.0);
        for w in v.windows(2) {
            s += w[0].dist(w[1]);
            cum.push(s);
        }
        if s <= 0.0 {
            return Err(Error::InvalidTask(vec!["path has zero length".into()]));
        }
        Ok(PathSpec {
            vertices: v,
            cum,
            length: s,
        })
    }

    /// Total path length in meters.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Position at normalized coordinate `theta` (wrapped into [0, 1)).
    pub fn position(&self, theta: f64) -> Point2 {
        let (seg, t) = self.locate(theta);
        self.vertices[seg].lerp(self.vertices[seg + 1], t)
    }

    /// Tangent heading (radians) of the segment containing `theta`.
    pub fn heading(&self, theta: f64) -> f64 {
        let (seg, _) = self.locate(theta);
        let d = self.vertices[seg + 1].sub(self.vertices[seg]);
        d.y.atan2(d.x)
    }

    fn locate(&self, theta: f64) -> (usize, f64) {
        let t = theta.rem_euclid(1.0);
        let s = t * self.length;
        // Last segment index with cum <= s.
        let seg = match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.vertices.len() - 2),
            Err(i) => i - 1,
        };
        let span = self.cum[seg + 1] - self.cum[seg];
        (seg, if span > 0.0 { (s - self.cum[seg]) / span } else { 0.0 })
    }
}

/// Sensor footprint around the robot, in a body frame with +x along the
/// path tangent.
#[derive(Clone, Debug)]
pub enum Footprint {
    Disk { radius: f64 },
    Polygon { vertices: Vec<Point2> },
}

impl Footprint {
    /// A length scale of the footprint, used to sanity-check coverage
    /// sampling density.
    pub fn diameter_hint(&self) -> f64 {
        match self {
            Footprint::Disk { radius } => 2.0 * radius,
            Footprint::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for a in vertices {
                    for b in vertices {
                        d = d.max(a.dist(*b));
                    }
                }
                d
            }
        }
    }
}

/// One robot: its path, sensor, per-cell speed limits, and (for multi-robot
/// tasks) its per-point drain rates.
#[derive(Clone, Debug)]
pub struct RobotModel {
    pub path: PathSpec,
    pub footprint: Footprint,
    /// Number of rectangular basis cells for this robot's speed profile.
    pub n: usize,
    /// Per-cell speed limits, m/s. `v_min[j] <= v_max[j]`, both positive.
    pub v_min: Vec<f64>,
    pub v_max: Vec<f64>,
    /// Per-point drain rate while this robot covers the point. `None` means
    /// the task is single-robot and the points' own rates apply.
    pub consumption: Option<Vec<f64>>,
}

/// A field accumulation site.
#[derive(Clone, Debug)]
pub struct InterestPoint {
    pub position: Point2,
    /// Growth rate of the field while uncovered. Positive.
    pub production: f64,
    /// Drain rate while covered (single-robot tasks). Must exceed
    /// production.
    pub consumption: f64,
}

/// Field rates of one point, detached from its geometry.
#[derive(Clone, Copy, Debug)]
pub struct PointRates {
    pub production: f64,
    pub consumption: f64,
}

impl InterestPoint {
    pub fn rates(&self) -> PointRates {
        PointRates {
            production: self.production,
            consumption: self.consumption,
        }
    }
}

/// A complete monitoring task.
#[derive(Clone, Debug)]
pub struct PersistentTask {
    pub robots: Vec<RobotModel>,
    pub points: Vec<InterestPoint>,
}

impl PersistentTask {
    /// Reciprocal-speed bounds for robot `r` in theta-units: cell `j` of the
    /// profile must satisfy `lo[j] <= alpha_j <= up[j]` where
    /// `alpha = path_length / physical_speed`.
    pub fn alpha_bounds(&self, r: usize) -> (Vec<f64>, Vec<f64>) {
        let robot = &self.robots[r];
        let len = robot.path.length();
        let lo = robot.v_max.iter().map(|v| len / v).collect();
        let up = robot.v_min.iter().map(|v| len / v).collect();
        (lo, up)
    }
}

/// Check a task against the model's standing assumptions. Returns one
/// message per violation; empty means valid.
pub fn validate(task: &PersistentTask) -> Vec<String> {
    let mut out = Vec::new();
    if task.robots.is_empty() {
        out.push("task has no robots".to_string());
    }
    if task.points.is_empty() {
        out.push("task has no interest points".to_string());
    }
    let single = task.robots.len() == 1;
    for (i, p) in task.points.iter().enumerate() {
        if p.production <= 0.0 {
            out.push(format!("point {i}: production must be positive"));
        }
        if single && p.consumption <= p.production {
            out.push(format!(
                "point {i}: consumption {} must exceed production {}",
                p.consumption, p.production
            ));
        }
    }
    for (r, robot) in task.robots.iter().enumerate() {
        if robot.n == 0 {
            out.push(format!("robot {r}: basis needs at least one cell"));
        }
        if robot.v_min.len() != robot.n || robot.v_max.len() != robot.n {
            out.push(format!(
                "robot {r}: speed limit tables must have {} entries",
                robot.n
            ));
            continue;
        }
        for j in 0..robot.n {
            if robot.v_min[j] <= 0.0 || robot.v_max[j] < robot.v_min[j] {
                out.push(format!(
                    "robot {r} cell {j}: need 0 < v_min <= v_max, got [{}, {}]",
                    robot.v_min[j], robot.v_max[j]
                ));
            }
        }
        if let Footprint::Polygon { vertices } = &robot.footprint {
            if vertices.len() < 3 {
                out.push(format!("robot {r}: polygon footprint needs 3+ vertices"));
            }
        }
        if let Some(c) = &robot.consumption {
            if c.len() != task.points.len() {
                out.push(format!(
                    "robot {r}: consumption table must have {} entries",
                    task.points.len()
                ));
            } else if c.iter().any(|&v| v < 0.0) {
                out.push(format!("robot {r}: consumption rates must be nonnegative"));
            }
        } else if !single {
            out.push(format!(
                "robot {r}: multi-robot tasks need per-robot consumption rates"
            ));
        }
    }
    out
}
