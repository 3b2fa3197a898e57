use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::lanelet::{LaneletMap, RouteGraph};
use crate::road::{normalize_angle, sample_stations, Vec2};

/// Costs closer than this are ties, broken by the lanelet id sequence.
pub const COST_TIE: f64 = 1e-9;
pub const PATH_DS: f64 = 0.5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PlanError {
    #[error("lanelet {0} is not in the map")]
    UnknownLanelet(u64),
    #[error("lanelet {target} is unreachable from {start}")]
    Unreachable { start: u64, target: u64 },
    #[error("{0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Label {
    cost: f64,
    seq: Vec<u64>,
}

impl Label {
    /// Strictly better: cheaper beyond the tie band, or tied and
    /// lexicographically smaller.
    fn better_than(&self, other: &Label) -> bool {
        if self.cost < other.cost - COST_TIE {
            return true;
        }
        (self.cost - other.cost).abs() <= COST_TIE && self.seq < other.seq
    }
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, seq)
        other.cost.total_cmp(&self.cost).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cheapest lanelet sequence from `start` to `target` (Dijkstra over edge
/// weights). Equal-cost alternatives resolve to the lexicographically
/// smallest id sequence.
pub fn shortest_sequence(graph: &RouteGraph, start: u64, target: u64) -> Result<(Vec<u64>, f64), PlanError> {
    for id in [start, target] {
        if graph.vertices.binary_search(&id).is_err() {
            return Err(PlanError::UnknownLanelet(id));
        }
    }
    let mut best: BTreeMap<u64, Label> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    let first = Label { cost: 0.0, seq: vec![start] };
    best.insert(start, first.clone());
    heap.push(first);
    while let Some(label) = heap.pop() {
        let v = *label.seq.last().unwrap();
        if best.get(&v) != Some(&label) {
            continue;
        }
        if v == target {
            return Ok((label.seq, label.cost));
        }
        for e in graph.successors(v) {
            if label.seq.contains(&e.to) {
                continue;
            }
            let mut seq = label.seq.clone();
            seq.push(e.to);
            let next = Label { cost: label.cost + e.weight, seq };
            if best.get(&e.to).is_none_or(|b| next.better_than(b)) {
                best.insert(e.to, next.clone());
                heap.push(next);
            }
        }
    }
    Err(PlanError::Unreachable { start, target })
}

/// Reference path for the controller, sampled every [`PATH_DS`] meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub lanelets: Vec<u64>,
    pub s: Vec<f64>,
    pub points: Vec<Vec2>,
    pub heading: Vec<f64>,
    pub curvature: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        *self.s.last().unwrap_or(&0.0)
    }

    /// Index `i` and fraction such that `s` lies on segment i → i+1.
    fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.len();
        if n < 2 || s <= 0.0 {
            return (0, 0.0);
        }
        if s >= self.length() {
            return (n - 2, 1.0);
        }
        let i = (self.s.partition_point(|&x| x <= s) - 1).min(n - 2);
        let span = self.s[i + 1] - self.s[i];
        (i, if span > 0.0 { (s - self.s[i]) / span } else { 0.0 })
    }

    /// Point at arc length `s`; beyond either end the path continues
    /// straight along its end heading.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let n = self.len();
        if s < 0.0 {
            return self.points[0] + Vec2::from_angle(self.heading[0]) * s;
        }
        if s > self.length() {
            return self.points[n - 1] + Vec2::from_angle(self.heading[n - 1]) * (s - self.length());
        }
        let (i, f) = self.locate(s);
        self.points[i].lerp(self.points[i + 1], f)
    }

    fn interp(&self, values: &[f64], s: f64) -> f64 {
        let (i, f) = self.locate(s);
        if self.len() < 2 {
            return values[0];
        }
        values[i] + (values[i + 1] - values[i]) * f
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        self.interp(&self.curvature, s)
    }

    pub fn half_width_at(&self, s: f64) -> f64 {
        self.interp(&self.half_width, s)
    }

    /// Closest point on the polyline among segments `lo..hi`: returns arc
    /// length and signed lateral offset (left positive).
    pub fn project_range(&self, p: Vec2, lo: usize, hi: usize) -> (f64, f64) {
        let n = self.len();
        if n < 2 {
            return (0.0, (p - self.points[0]).norm());
        }
        let hi = hi.min(n - 1);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in lo.min(hi.saturating_sub(1))..hi {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let ab = b - a;
            let len2 = ab.dot(ab);
            let mut t = if len2 > 0.0 { (p - a).dot(ab) / len2 } else { 0.0 };
            // extend the first and last segments so overshoot is measured
            // against the straight continuation
            if i > 0 {
                t = t.max(0.0);
            }
            if i + 2 < n {
                t = t.min(1.0);
            }
            let q = a + ab * t;
            let d = (p - q).norm();
            if d < best.0 {
                let side = ab.cross(p - q).signum();
                best = (d, self.s[i] + t * (self.s[i + 1] - self.s[i]), side * d);
            }
        }
        (best.1, best.2)
    }

    pub fn project(&self, p: Vec2) -> (f64, f64) {
        self.project_range(p, 0, self.len())
    }
}

/// Polyline centerline of the lanelet sequence plus per-vertex half width.
fn stitch(map: &LaneletMap, seq: &[u64]) -> (Vec<Vec2>, Vec<f64>, Vec<usize>) {
    let mut pts: Vec<Vec2> = Vec::new();
    let mut half: Vec<f64> = Vec::new();
    let mut starts = Vec::new();
    for &id in seq {
        starts.push(pts.len().saturating_sub(1));
        let left = map.left_points(id);
        let right = map.right_points(id);
        for (l, r) in left.into_iter().zip(right) {
            let c = l.lerp(r, 0.5);
            if pts.last().is_some_and(|&q| q.distance(c) < 1e-6) {
                continue;
            }
            pts.push(c);
            half.push(0.5 * l.distance(r));
        }
    }
    starts.push(pts.len().saturating_sub(1));
    (pts, half, starts)
}

fn cumulative(pts: &[Vec2]) -> Vec<f64> {
    let mut s = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            acc += p.distance(pts[i - 1]);
        }
        s.push(acc);
    }
    s
}

/// Turning angle over mean chord at every vertex; the ends copy their
/// neighbors.
fn vertex_curvature(pts: &[Vec2]) -> Vec<f64> {
    let n = pts.len();
    let mut k = vec![0.0; n];
    for i in 1..n.saturating_sub(1) {
        let (a, b) = (pts[i] - pts[i - 1], pts[i + 1] - pts[i]);
        let turn = normalize_angle(b.angle() - a.angle());
        k[i] = turn / (0.5 * (a.norm() + b.norm()));
    }
    if n >= 3 {
        k[0] = k[1];
        k[n - 1] = k[n - 2];
    }
    k
}

/// Plans the lanelet sequence and builds the path between the projections
/// of `start` and `target`.
pub fn plan_route(
    graph: &RouteGraph,
    map: &LaneletMap,
    start: (u64, Vec2),
    target: (u64, Vec2),
) -> Result<Path, PlanError> {
    let (seq, _) = shortest_sequence(graph, start.0, target.0)?;
    let (pts, half, starts) = stitch(map, &seq);
    if pts.len() < 2 {
        return Err(PlanError::Degenerate("route centerline has fewer than two points".into()));
    }
    let raw = Path {
        lanelets: seq.clone(),
        s: cumulative(&pts),
        heading: vec![0.0; pts.len()],
        curvature: vertex_curvature(&pts),
        half_width: half,
        points: pts,
    };
    let (s0, _) = raw.project_range(start.1, starts[0], starts[1] + 1);
    let (s1, _) = raw.project_range(target.1, starts[starts.len() - 2], starts[starts.len() - 1] + 1);
    if s1 - s0 < PATH_DS {
        return Err(PlanError::Degenerate(format!("target lies {:.3} m from start along the route", s1 - s0)));
    }
    let stations = sample_stations(s1 - s0, PATH_DS);
    let points: Vec<Vec2> = stations.iter().map(|&d| raw.point_at(s0 + d)).collect();
    let curvature = stations.iter().map(|&d| raw.curvature_at(s0 + d)).collect();
    let half_width = stations.iter().map(|&d| raw.half_width_at(s0 + d)).collect();
    let mut heading: Vec<f64> = points.windows(2).map(|w| (w[1] - w[0]).angle()).collect();
    heading.push(*heading.last().unwrap());
    Ok(Path { lanelets: seq, s: stations, points, heading, curvature, half_width })
}
