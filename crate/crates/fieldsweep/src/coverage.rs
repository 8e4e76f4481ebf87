//! Coverage sets: which fractions of a robot's cycle cover an interest
//! point, represented as disjoint arcs on the unit circle of normalized
//! path positions.
//!
//! Arcs run forward from `start` to `end` and may wrap through zero; a
//! wrapped arc is stored in one piece (`start > end`), never split. Equal
//! endpoints denote the empty arc, never the full circle; the full circle
//! is a flag on the set.

use crate::geom::Point2;
use crate::task::{Footprint, PathSpec, PersistentTask};
use rayon::prelude::*;

/// Forward arc length from `a` to `b` on the unit circle; 0 when `a == b`.
pub fn arc_len(a: f64, b: f64) -> f64 {
    let d = b - a;
    if d == 0.0 {
        0.0
    } else {
        d.rem_euclid(1.0)
    }
}

/// Does the forward arc [a, b) contain `t`?
pub fn arc_contains(a: f64, b: f64, t: f64) -> bool {
    arc_len(a, t.rem_euclid(1.0)) < arc_len(a, b)
}

/// Length of the intersection of forward arcs [a, b) and [c, d).
pub fn arc_overlap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let pieces = |s: f64, e: f64| -> Vec<(f64, f64)> {
        if arc_len(s, e) == 0.0 {
            vec![]
        } else if s < e {
            vec![(s, e)]
        } else {
            vec![(s, 1.0), (0.0, e)]
        }
    };
    let mut total = 0.0;
    for (s1, e1) in pieces(a.rem_euclid(1.0), b.rem_euclid(1.0)) {
        for (s2, e2) in pieces(c.rem_euclid(1.0), d.rem_euclid(1.0)) {
            total += (e1.min(e2) - s1.max(s2)).max(0.0);
        }
    }
    total
}

/// One covered arc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn measure(&self) -> f64 {
        arc_len(self.start, self.end)
    }
}

/// Result of splitting a coverage set into ordered endpoints.
#[derive(Clone, Debug, PartialEq)]
pub enum Decomposition {
    Empty,
    FullCircle,
    /// Entry points `x[k]` and exit points `y[k]`, sorted by `x`, indexed
    /// circularly.
    Arcs { x: Vec<f64>, y: Vec<f64> },
}

/// Disjoint covered arcs of one (robot, point) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageSet {
    intervals: Vec<Interval>,
    full: bool,
}

/// Arcs shorter than this are treated as sampling artifacts and dropped.
const MIN_ARC: f64 = 1e-9;

impl CoverageSet {
    pub fn empty() -> CoverageSet {
        CoverageSet {
            intervals: Vec::new(),
            full: false,
        }
    }

    pub fn full_circle() -> CoverageSet {
        CoverageSet {
            intervals: Vec::new(),
            full: true,
        }
    }

    /// Build from (start, end) arcs; arcs are wrapped into [0, 1),
    /// overlapping or touching arcs merge, and a union that closes the
    /// whole circle becomes the full-circle set. A pair with
    /// `end - start >= 1` is taken as the full circle directly.
    pub fn from_intervals(pairs: &[(f64, f64)]) -> CoverageSet {
        if pairs.iter().any(|&(s, e)| e - s >= 1.0 - MIN_ARC) {
            return CoverageSet::full_circle();
        }
        // Unwrap to [s, s + len] with s in [0, 1), remembering the exact
        // normalized end so unmerged arcs keep their endpoints bit-for-bit.
        let mut iv: Vec<(f64, f64, f64)> = pairs
            .iter()
            .filter_map(|&(s, e)| {
                let len = arc_len(s, e);
                (len >= MIN_ARC).then(|| {
                    let s = s.rem_euclid(1.0);
                    (s, s + len, e.rem_euclid(1.0))
                })
            })
            .collect();
        if iv.is_empty() {
            return CoverageSet::empty();
        }
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(iv.len());
        for (s, e, raw) in iv {
            match merged.last_mut() {
                Some(last) if s <= last.1 + MIN_ARC => {
                    if e > last.1 {
                        last.1 = e;
                        last.2 = raw;
                    }
                }
                _ => merged.push((s, e, raw)),
            }
        }
        // The last interval may wrap past 1 and swallow leading ones.
        while merged.len() > 1 {
            let (first, last) = (merged[0], *merged.last().unwrap());
            if last.1 - 1.0 >= first.0 - MIN_ARC {
                if first.1 + 1.0 > last.1 {
                    let l = merged.last_mut().unwrap();
                    l.1 = first.1 + 1.0;
                    l.2 = first.2;
                }
                merged.remove(0);
            } else {
                break;
            }
        }
        let total: f64 = merged.iter().map(|(s, e, _)| e - s).sum();
        if total >= 1.0 - MIN_ARC {
            return CoverageSet::full_circle();
        }
        let intervals = merged
            .into_iter()
            .map(|(s, _, raw)| Interval { start: s, end: raw })
            .collect();
        CoverageSet {
            intervals,
            full: false,
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.full && self.intervals.is_empty()
    }

    pub fn is_full_circle(&self) -> bool {
        self.full
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Total covered fraction of the cycle.
    pub fn measure(&self) -> f64 {
        if self.full {
            1.0
        } else {
            self.intervals.iter().map(Interval::measure).sum()
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.full
            || self
                .intervals
                .iter()
                .any(|iv| arc_contains(iv.start, iv.end, theta))
    }

    /// Length of the overlap with basis cell `j` of `n` (the arc
    /// [j/n, (j+1)/n)).
    pub fn cell_overlap(&self, j: usize, n: usize) -> f64 {
        let (a, b) = (j as f64 / n as f64, (j + 1) as f64 / n as f64);
        if self.full {
            b - a
        } else {
            self.intervals
                .iter()
                .map(|iv| arc_overlap(iv.start, iv.end, a, b))
                .sum()
        }
    }

    /// Entry/exit endpoints in circular order.
    pub fn decompose(&self) -> Decomposition {
        if self.full {
            Decomposition::FullCircle
        } else if self.intervals.is_empty() {
            Decomposition::Empty
        } else {
            Decomposition::Arcs {
                x: self.intervals.iter().map(|iv| iv.start).collect(),
                y: self.intervals.iter().map(|iv| iv.end).collect(),
            }
        }
    }
}

/// Is `q` inside the footprint of a robot at `pos` facing `heading`?
pub fn point_in_footprint(fp: &Footprint, pos: Point2, heading: f64, q: Point2) -> bool {
    match fp {
        Footprint::Disk { radius } => q.dist(pos) <= *radius,
        Footprint::Polygon { vertices } => {
            let p = q.sub(pos).rotate(-heading);
            let mut inside = false;
            for i in 0..vertices.len() {
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                if (a.y > p.y) != (b.y > p.y) {
                    let t = (p.y - a.y) / (b.y - a.y);
                    if p.x < a.x + t * (b.x - a.x) {
                        inside = !inside;
                    }
                }
            }
            inside
        }
    }
}

/// Positional tolerance (in theta) for coverage boundaries.
const BOUNDARY_TOL: f64 = 1e-6;

/// Coverage arcs of point `q` under `fp` carried along `path`, found by
/// uniform sampling plus bisection refinement of each membership change.
/// `samples` must be dense enough that no covered stretch falls between
/// consecutive samples; 10x the basis size is the usual choice.
pub fn compute_coverage_set(
    path: &PathSpec,
    fp: &Footprint,
    q: Point2,
    samples: usize,
) -> CoverageSet {
    assert!(samples >= 2, "need at least 2 samples");
    let inside = |theta: f64| -> bool {
        let t = theta.rem_euclid(1.0);
        point_in_footprint(fp, path.position(t), path.heading(t), q)
    };
    let member: Vec<bool> = (0..samples)
        .map(|i| inside(i as f64 / samples as f64))
        .collect();
    if member.iter().all(|&m| m) {
        return CoverageSet::full_circle();
    }
    if member.iter().all(|&m| !m) {
        return CoverageSet::empty();
    }
    // Refine each transition between adjacent samples.
    let mut events: Vec<(f64, bool)> = Vec::new(); // (theta, entering)
    for i in 0..samples {
        let j = (i + 1) % samples;
        if member[i] != member[j] {
            let mut lo = i as f64 / samples as f64;
            let mut hi = lo + 1.0 / samples as f64;
            let lo_state = member[i];
            while hi - lo > BOUNDARY_TOL {
                let mid = 0.5 * (lo + hi);
                if inside(mid) == lo_state {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            events.push(((0.5 * (lo + hi)).rem_euclid(1.0), member[j]));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Transitions alternate; rotate so the list starts with an entry.
    let first_enter = events.iter().position(|&(_, e)| e).unwrap();
    events.rotate_left(first_enter);
    let pairs: Vec<(f64, f64)> = events
        .chunks(2)
        .map(|ch| (ch[0].0, ch[1].0))
        .collect();
    CoverageSet::from_intervals(&pairs)
}

/// Coverage sets for every robot/point pair of a task.
/// `samples` overrides the per-robot default of `10 * n`.
pub fn coverage_map(task: &PersistentTask, samples: Option<usize>) -> Vec<Vec<CoverageSet>> {
    task.robots
        .iter()
        .map(|robot| {
            let s = samples.unwrap_or(10 * robot.n).max(16);
            task.points
                .par_iter()
                .map(|p| compute_coverage_set(&robot.path, &robot.footprint, p.position, s))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn arc_basics() {
        assert!((arc_len(0.2, 0.7) - 0.5).abs() < 1e-15);
        assert!((arc_len(0.7, 0.2) - 0.5).abs() < 1e-15);
        assert_eq!(arc_len(0.3, 0.3), 0.0);
        assert!(arc_contains(0.9, 0.1, 0.95));
        assert!(arc_contains(0.9, 0.1, 0.05));
        assert!(!arc_contains(0.9, 0.1, 0.5));
        assert!((arc_overlap(0.9, 0.2, 0.1, 0.3) - 0.1).abs() < 1e-15);
        assert!((arc_overlap(0.9, 0.2, 0.95, 0.05) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn from_intervals_merges_and_wraps() {
        let c = CoverageSet::from_intervals(&[(0.1, 0.3), (0.25, 0.4), (0.8, 0.05)]);
        assert_eq!(c.intervals().len(), 2);
        assert!((c.measure() - (0.3 + 0.25)).abs() < 1e-12);
        assert!(c.contains(0.9));
        assert!(c.contains(0.02));
        assert!(!c.contains(0.5));

        // Union covering the circle collapses to the full flag.
        let f = CoverageSet::from_intervals(&[(0.0, 0.6), (0.5, 0.05)]);
        assert!(f.is_full_circle());
        assert_eq!(f.measure(), 1.0);

        let e = CoverageSet::from_intervals(&[]);
        assert!(e.is_empty());
        assert_eq!(e.measure(), 0.0);
    }

    #[test]
    fn decompose_orders_endpoints() {
        let c = CoverageSet::from_intervals(&[(0.9, 0.1), (0.3, 0.5)]);
        match c.decompose() {
            Decomposition::Arcs { x, y } => {
                assert_eq!(x, vec![0.3, 0.9]);
                assert_eq!(y, vec![0.5, 0.1]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(CoverageSet::empty().decompose(), Decomposition::Empty);
        assert_eq!(
            CoverageSet::full_circle().decompose(),
            Decomposition::FullCircle
        );
    }

    #[test]
    fn cell_overlap_examples() {
        let c = CoverageSet::from_intervals(&[(0.2, 0.3), (0.6, 0.7)]);
        // Cell [0.2, 0.3) of n = 10 is fully covered.
        assert!((c.cell_overlap(2, 10) - 0.1).abs() < 1e-15);
        // Cell [0.5, 0.75) of n = 4 catches [0.6, 0.7).
        assert!((c.cell_overlap(2, 4) - 0.1).abs() < 1e-12);
        assert_eq!(c.cell_overlap(0, 10), 0.0);
        assert!((CoverageSet::full_circle().cell_overlap(3, 8) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn measure_preserved_and_rotation_invariant_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
        for _ in 0..200 {
            // Generate disjoint arcs by splitting the circle at sorted cuts.
            let k = rng.random_range(1..=4usize);
            let mut cuts: Vec<f64> = (0..2 * k).map(|_| rng.random::<f64>()).collect();
            cuts.sort_by(f64::total_cmp);
            let pairs: Vec<(f64, f64)> = (0..k).map(|i| (cuts[2 * i], cuts[2 * i + 1])).collect();
            let total: f64 = pairs.iter().map(|&(s, e)| e - s).sum();
            if total < 1e-6 || total > 1.0 - 1e-6 {
                continue;
            }
            let c = CoverageSet::from_intervals(&pairs);
            assert!((c.measure() - total).abs() < 1e-9);

            let shift = rng.random::<f64>();
            let shifted: Vec<(f64, f64)> =
                pairs.iter().map(|&(s, e)| (s + shift, e + shift)).collect();
            let cs = CoverageSet::from_intervals(&shifted);
            assert!((cs.measure() - total).abs() < 1e-9);
            for _ in 0..16 {
                let t = rng.random::<f64>();
                assert_eq!(c.contains(t), cs.contains((t + shift).rem_euclid(1.0)));
            }
        }
    }

    #[test]
    fn footprint_membership() {
        let disk = Footprint::Disk { radius: 12.0 };
        let at = Point2::new(0.0, 0.0);
        assert!(point_in_footprint(&disk, at, 0.0, Point2::new(11.9, 0.0)));
        assert!(!point_in_footprint(&disk, at, 0.0, Point2::new(12.1, 0.0)));

        // Unit-half-width square footprint, rotated a quarter turn: a point
        // ahead of the robot in world +y is inside.
        let square = Footprint::Polygon {
            vertices: vec![
                Point2::new(-1.0, -1.0),
                Point2::new(1.0, -1.0),
                Point2::new(1.0, 1.0),
                Point2::new(-1.0, 1.0),
            ],
        };
        let heading = std::f64::consts::FRAC_PI_2;
        assert!(point_in_footprint(&square, at, heading, Point2::new(0.5, 0.5)));
        assert!(!point_in_footprint(&square, at, heading, Point2::new(1.5, 0.0)));
    }

    #[test]
    fn polygon_membership_matches_dense_grid_oracle() {
        // An asymmetric quadrilateral; compare the area implied by membership
        // sampling against the shoelace area.
        let quad = vec![
            Point2::new(-1.0, -0.5),
            Point2::new(2.0, -1.0),
            Point2::new(1.5, 1.0),
            Point2::new(-0.5, 1.5),
        ];
        let shoelace = 0.5
            * (0..quad.len())
                .map(|i| {
                    let a = quad[i];
                    let b = quad[(i + 1) % quad.len()];
                    a.x * b.y - b.x * a.y
                })
                .sum::<f64>()
                .abs();
        let fp = Footprint::Polygon {
            vertices: quad.clone(),
        };
        let n = 1000;
        let mut hits = 0usize;
        for i in 0..n {
            for j in 0..n {
                let p = Point2::new(
                    -2.0 + 5.0 * (i as f64 + 0.5) / n as f64,
                    -2.0 + 5.0 * (j as f64 + 0.5) / n as f64,
                );
                if point_in_footprint(&fp, Point2::new(0.0, 0.0), 0.0, p) {
                    hits += 1;
                }
            }
        }
        let sampled = hits as f64 / (n * n) as f64 * 25.0;
        assert!(
            (sampled - shoelace).abs() < 25.0 * 2e-3,
            "sampled {sampled} vs shoelace {shoelace}"
        );
    }

    fn ngon(r: f64, sides: usize) -> PathSpec {
        let pts: Vec<Point2> = (0..sides)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / sides as f64;
                Point2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        PathSpec::closed(&pts).unwrap()
    }

    /// Dense-sampling oracle: covered fraction out of one million thetas.
    fn brute_fraction(path: &PathSpec, fp: &Footprint, q: Point2) -> f64 {
        let n = 1_000_000usize;
        let hits = (0..n)
            .filter(|&i| {
                let t = i as f64 / n as f64;
                point_in_footprint(fp, path.position(t), path.heading(t), q)
            })
            .count();
        hits as f64 / n as f64
    }

    #[test]
    fn coverage_measure_matches_dense_sampling() {
        let path = ngon(10.0, 64);
        let fp = Footprint::Disk { radius: 5.0 };
        let q = Point2::new(10.0, 0.0);
        let c = compute_coverage_set(&path, &fp, q, 512);
        let frac = brute_fraction(&path, &fp, q);
        assert!(
            (c.measure() - frac).abs() < 1e-4,
            "measure {} vs brute {frac}",
            c.measure()
        );
        // One dip into range, wrapped around theta = 0 since the path
        // starts at the closest approach.
        assert_eq!(c.intervals().len(), 1);
        let iv = c.intervals()[0];
        assert!(iv.start > iv.end, "expected wrap, got {iv:?}");
    }

    #[test]
    fn coverage_two_arcs_and_extremes() {
        let path = ngon(10.0, 64);
        let fp = Footprint::Disk { radius: 3.0 };
        // Inside the loop, closer to the right side: two crossings of range.
        let q = Point2::new(6.0, 0.0);
        let c = compute_coverage_set(&path, &fp, q, 512);
        let frac = brute_fraction(&path, &fp, q);
        assert!((c.measure() - frac).abs() < 1e-4);

        // A footprint that swallows the whole loop.
        let big = Footprint::Disk { radius: 50.0 };
        assert!(compute_coverage_set(&path, &big, q, 64).is_full_circle());

        // A point far outside sensing range.
        let far = Point2::new(100.0, 100.0);
        assert!(compute_coverage_set(&path, &fp, far, 64).is_empty());
    }

    #[test]
    fn coverage_boundaries_refined_to_tolerance() {
        // Square path of perimeter 40; disk of radius 2 around a point on
        // the first side gives one arc of exactly 4/40 = 0.1 centered at
        // theta = 0.125.
        let path = PathSpec::closed(&[
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 10.0),
            Point2::new(0.0, 10.0),
        ])
        .unwrap();
        let fp = Footprint::Disk { radius: 2.0 };
        let q = Point2::new(5.0, 0.0);
        let c = compute_coverage_set(&path, &fp, q, 200);
        assert_eq!(c.intervals().len(), 1);
        let iv = c.intervals()[0];
        assert!((iv.start - 0.075).abs() < 2e-6, "start {}", iv.start);
        assert!((iv.end - 0.175).abs() < 2e-6, "end {}", iv.end);
    }
}
