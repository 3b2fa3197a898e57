//! Lanelet maps: boundary line strings over shared nodes, the OSM-XML
//! encoding, and the lane-level routing graph.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::format_g;
use crate::road::{check_offset, sample_stations, ContactPoint, ElementType, RoadError, RoadNetwork, Vec2};
use crate::xmlutil::{children, escape, position};

/// Meters per degree of latitude in the local equirectangular projection.
pub const METERS_PER_DEGREE: f64 = 111_320.0;
pub const DEFAULT_ORIGIN: GeoOrigin = GeoOrigin { lat: 49.0, lon: 8.0 };
pub const ROAD_DS: f64 = 1.0;
pub const CONNECTOR_DS: f64 = 0.5;

#[derive(Debug, Error)]
pub enum LaneletError {
    #[error("road {road}: {source}")]
    Degenerate { road: String, source: RoadError },
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("{line}:{column}: {message}")]
    Structure { line: u32, column: u32, message: String },
    #[error("inconsistent map: {0}")]
    Inconsistent(String),
}

fn structure(node: Node<'_, '_>, message: impl Into<String>) -> LaneletError {
    let (line, column) = position(node);
    LaneletError::Structure { line, column, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoOrigin {
    pub lat: f64,
    pub lon: f64,
}

impl Default for GeoOrigin {
    fn default() -> Self {
        DEFAULT_ORIGIN
    }
}

impl GeoOrigin {
    /// Local meters to (lat, lon) degrees.
    pub fn to_geo(&self, p: Vec2) -> (f64, f64) {
        let lat = self.lat + p.y / METERS_PER_DEGREE;
        let lon = self.lon + p.x / (METERS_PER_DEGREE * self.lat.to_radians().cos());
        (lat, lon)
    }

    pub fn to_local(&self, lat: f64, lon: f64) -> Vec2 {
        Vec2::new((lon - self.lon) * METERS_PER_DEGREE * self.lat.to_radians().cos(), (lat - self.lat) * METERS_PER_DEGREE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineString {
    pub nodes: Vec<u64>,
    /// `solid` for road edges, `dashed` for the center line.
    pub subtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lanelet {
    pub left: u64,
    pub right: u64,
    pub road_id: Option<String>,
    pub lane_id: Option<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LaneletMap {
    pub nodes: BTreeMap<u64, Vec2>,
    pub linestrings: BTreeMap<u64, LineString>,
    pub lanelets: BTreeMap<u64, Lanelet>,
}

impl LaneletMap {
    fn points(&self, ls: u64) -> Vec<Vec2> {
        self.linestrings[&ls].nodes.iter().map(|n| self.nodes[n]).collect()
    }

    pub fn left_points(&self, id: u64) -> Vec<Vec2> {
        self.points(self.lanelets[&id].left)
    }

    pub fn right_points(&self, id: u64) -> Vec<Vec2> {
        self.points(self.lanelets[&id].right)
    }

    /// Midpoints of paired left/right boundary samples.
    pub fn centerline(&self, id: u64) -> Vec<Vec2> {
        self.left_points(id).into_iter().zip(self.right_points(id)).map(|(l, r)| l.lerp(r, 0.5)).collect()
    }

    pub fn centerline_length(&self, id: u64) -> f64 {
        self.centerline(id).windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Lanelet carrying the given road and lane tags.
    pub fn find(&self, road: &str, lane: i32) -> Option<u64> {
        self.lanelets.iter().find(|(_, l)| l.road_id.as_deref() == Some(road) && l.lane_id == Some(lane)).map(|(id, _)| *id)
    }

    /// Dangling references and unequal boundary lengths.
    pub fn check(&self) -> Result<(), LaneletError> {
        for (id, ls) in &self.linestrings {
            if ls.nodes.len() < 2 {
                return Err(LaneletError::Inconsistent(format!("line string {id} has fewer than two nodes")));
            }
            if let Some(n) = ls.nodes.iter().find(|n| !self.nodes.contains_key(n)) {
                return Err(LaneletError::Inconsistent(format!("line string {id} references missing node {n}")));
            }
        }
        for (id, l) in &self.lanelets {
            let (Some(left), Some(right)) = (self.linestrings.get(&l.left), self.linestrings.get(&l.right)) else {
                return Err(LaneletError::Inconsistent(format!("lanelet {id} references a missing line string")));
            };
            if left.nodes.len() != right.nodes.len() {
                return Err(LaneletError::Inconsistent(format!(
                    "lanelet {id}: left boundary has {} points, right has {}",
                    left.nodes.len(),
                    right.nodes.len()
                )));
            }
        }
        Ok(())
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Key of an end node: road index, road end, lateral offset in lane widths.
fn end_key(road: usize, contact: ContactPoint, offset: i32) -> usize {
    road * 6 + if contact == ContactPoint::Start { 0 } else { 3 } + (offset + 1) as usize
}

/// Converts a road network into a lanelet map with one lanelet per road
/// and driving direction. Road ends that meet share their boundary nodes,
/// so connectivity is exact. Junction connectors use the finer step.
pub fn to_lanelets(net: &RoadNetwork, ds: f64, connector_ds: f64) -> Result<LaneletMap, LaneletError> {
    let index: HashMap<&str, usize> = net.roads.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let mut uf = UnionFind((0..net.roads.len() * 6).collect());
    for (i, road) in net.roads.iter().enumerate() {
        for offset in [road.lane_width, -road.lane_width] {
            check_offset(road, offset).map_err(|source| LaneletError::Degenerate { road: road.id.clone(), source })?;
        }
        for (own, link) in [(ContactPoint::Start, &road.predecessor), (ContactPoint::End, &road.successor)] {
            let Some(link) = link else { continue };
            if link.element_type != ElementType::Road {
                continue;
            }
            let (Some(&j), Some(other)) = (index.get(link.element_id.as_str()), link.contact_point) else { continue };
            // meeting ends of equal kind face each other: lateral sides swap
            let sign = if own == other { -1 } else { 1 };
            for o in -1..=1 {
                uf.union(end_key(i, own, o), end_key(j, other, sign * o));
            }
        }
    }

    let mut map = LaneletMap::default();
    let mut end_nodes: HashMap<usize, u64> = HashMap::new();
    let mut next_node = 1u64;
    let mut next_way = 1u64;
    let mut next_lanelet = 1u64;
    for (i, road) in net.roads.iter().enumerate() {
        let step = if road.junction.is_some() { connector_ds } else { ds };
        let stations = sample_stations(road.length(), step);
        let poses: Vec<_> = stations.iter().map(|&s| road.pose_at(s)).collect();
        let mut lines: BTreeMap<i32, Vec<u64>> = BTreeMap::new();
        for o in -1..=1 {
            let mut ids = Vec::with_capacity(stations.len());
            for (k, pose) in poses.iter().enumerate() {
                let p = pose.lateral(o as f64 * road.lane_width);
                let end = if k == 0 {
                    Some(ContactPoint::Start)
                } else if k + 1 == poses.len() {
                    Some(ContactPoint::End)
                } else {
                    None
                };
                let id = match end {
                    Some(c) => {
                        let root = uf.find(end_key(i, c, o));
                        *end_nodes.entry(root).or_insert_with(|| {
                            map.nodes.insert(next_node, p);
                            next_node += 1;
                            next_node - 1
                        })
                    }
                    None => {
                        map.nodes.insert(next_node, p);
                        next_node += 1;
                        next_node - 1
                    }
                };
                ids.push(id);
            }
            lines.insert(o, ids);
        }
        let forward = road.rule.forward_lane();
        for lane in [-1, 1] {
            let outer = lines[&lane].clone();
            let center = lines[&0].clone();
            let (mut left, mut right) = if lane > 0 { (outer, center) } else { (center, outer) };
            let (mut left_sub, mut right_sub) = if lane > 0 { ("solid", "dashed") } else { ("dashed", "solid") };
            if lane != forward {
                std::mem::swap(&mut left, &mut right);
                std::mem::swap(&mut left_sub, &mut right_sub);
                left.reverse();
                right.reverse();
            }
            let l_id = next_way;
            map.linestrings.insert(l_id, LineString { nodes: left, subtype: left_sub.into() });
            map.linestrings.insert(l_id + 1, LineString { nodes: right, subtype: right_sub.into() });
            next_way += 2;
            map.lanelets.insert(next_lanelet, Lanelet { left: l_id, right: l_id + 1, road_id: Some(road.id.clone()), lane_id: Some(lane) });
            next_lanelet += 1;
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteEdge {
    pub from: u64,
    pub to: u64,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RouteGraph {
    pub vertices: Vec<u64>,
    /// Sorted by (from, to).
    pub edges: Vec<RouteEdge>,
}

impl RouteGraph {
    pub fn successors(&self, id: u64) -> impl Iterator<Item = &RouteEdge> {
        let lo = self.edges.partition_point(|e| e.from < id);
        self.edges[lo..].iter().take_while(move |e| e.from == id)
    }
}

/// p → q whenever p ends on the node pair q starts on; weighted by the
/// length of p's centerline.
pub fn build_route_graph(map: &LaneletMap) -> RouteGraph {
    let ends = |id: u64, last: bool| {
        let l = &map.lanelets[&id];
        let pick = |ls: u64| {
            let nodes = &map.linestrings[&ls].nodes;
            if last {
                *nodes.last().unwrap()
            } else {
                nodes[0]
            }
        };
        (pick(l.left), pick(l.right))
    };
    let mut by_start: HashMap<(u64, u64), Vec<u64>> = HashMap::new();
    for &id in map.lanelets.keys() {
        by_start.entry(ends(id, false)).or_default().push(id);
    }
    let mut edges = Vec::new();
    for &id in map.lanelets.keys() {
        if let Some(next) = by_start.get(&ends(id, true)) {
            let weight = map.centerline_length(id);
            edges.extend(next.iter().filter(|&&q| q != id).map(|&q| RouteEdge { from: id, to: q, weight }));
        }
    }
    edges.sort_by_key(|e| (e.from, e.to));
    RouteGraph { vertices: map.lanelets.keys().copied().collect(), edges }
}

const LAT_LON_DIGITS: usize = 17;

pub fn emit_osm(map: &LaneletMap, origin: GeoOrigin) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"roadtest\">\n");
    for (id, p) in &map.nodes {
        let (lat, lon) = origin.to_geo(*p);
        let _ = writeln!(
            out,
            "  <node id=\"{id}\" visible=\"true\" version=\"1\" lat=\"{}\" lon=\"{}\"/>",
            format_g(lat, LAT_LON_DIGITS),
            format_g(lon, LAT_LON_DIGITS)
        );
    }
    for (id, ls) in &map.linestrings {
        let _ = writeln!(out, "  <way id=\"{id}\" visible=\"true\" version=\"1\">");
        for n in &ls.nodes {
            let _ = writeln!(out, "    <nd ref=\"{n}\"/>");
        }
        out.push_str("    <tag k=\"type\" v=\"line_thin\"/>\n");
        let _ = writeln!(out, "    <tag k=\"subtype\" v=\"{}\"/>", escape(&ls.subtype));
        out.push_str("  </way>\n");
    }
    for (id, l) in &map.lanelets {
        let _ = writeln!(out, "  <relation id=\"{id}\" visible=\"true\" version=\"1\">");
        let _ = writeln!(out, "    <member type=\"way\" role=\"left\" ref=\"{}\"/>", l.left);
        let _ = writeln!(out, "    <member type=\"way\" role=\"right\" ref=\"{}\"/>", l.right);
        out.push_str("    <tag k=\"type\" v=\"lanelet\"/>\n    <tag k=\"subtype\" v=\"road\"/>\n    <tag k=\"one_way\" v=\"yes\"/>\n");
        if let Some(r) = &l.road_id {
            let _ = writeln!(out, "    <tag k=\"road_id\" v=\"{}\"/>", escape(r));
        }
        if let Some(lane) = l.lane_id {
            let _ = writeln!(out, "    <tag k=\"lane_id\" v=\"{lane}\"/>");
        }
        out.push_str("  </relation>\n");
    }
    out.push_str("</osm>\n");
    out
}

fn id_attr(node: Node<'_, '_>, name: &str) -> Result<u64, LaneletError> {
    let raw = node.attribute(name).ok_or_else(|| structure(node, format!("missing attribute '{name}'")))?;
    raw.parse().map_err(|_| structure(node, format!("'{name}' is not an id: '{raw}'")))
}

fn f64_attr(node: Node<'_, '_>, name: &str) -> Result<f64, LaneletError> {
    let raw = node.attribute(name).ok_or_else(|| structure(node, format!("missing attribute '{name}'")))?;
    raw.trim().parse().map_err(|_| structure(node, format!("'{name}' is not a number: '{raw}'")))
}

fn tags<'a>(node: Node<'a, '_>) -> BTreeMap<&'a str, &'a str> {
    children(node, "tag").filter_map(|t| Some((t.attribute("k")?, t.attribute("v")?))).collect()
}

/// Reads the lanelet subset of an OSM document. Relations that are not
/// lanelets are ignored.
pub fn parse_osm(text: &str, origin: GeoOrigin) -> Result<LaneletMap, LaneletError> {
    let doc = Document::parse(text)?;
    let root = doc.root_element();
    if !root.has_tag_name("osm") {
        return Err(structure(root, "root element is not <osm>"));
    }
    let mut map = LaneletMap::default();
    for node in children(root, "node") {
        map.nodes.insert(id_attr(node, "id")?, origin.to_local(f64_attr(node, "lat")?, f64_attr(node, "lon")?));
    }
    for way in children(root, "way") {
        let nodes = children(way, "nd").map(|n| id_attr(n, "ref")).collect::<Result<Vec<_>, _>>()?;
        let subtype = tags(way).get("subtype").copied().unwrap_or("").to_string();
        map.linestrings.insert(id_attr(way, "id")?, LineString { nodes, subtype });
    }
    for rel in children(root, "relation") {
        let t = tags(rel);
        if t.get("type") != Some(&"lanelet") {
            continue;
        }
        let member = |role: &str| -> Result<u64, LaneletError> {
            let m = children(rel, "member")
                .find(|m| m.attribute("role") == Some(role))
                .ok_or_else(|| structure(rel, format!("lanelet relation lacks a '{role}' member")))?;
            id_attr(m, "ref")
        };
        let lanelet = Lanelet {
            left: member("left")?,
            right: member("right")?,
            road_id: t.get("road_id").map(|s| s.to_string()),
            lane_id: t.get("lane_id").and_then(|s| s.parse().ok()),
        };
        map.lanelets.insert(id_attr(rel, "id")?, lanelet);
    }
    map.check()?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::{Pose2D, Road};
    use crate::roadgen::{gen_curved_road, CurvedRoadParams};
    use approx::assert_abs_diff_eq;

    fn straight() -> RoadNetwork {
        let road = Road::from_pieces("1", Pose2D::default(), &[(100.0, 0.0)], 3.5).unwrap();
        RoadNetwork { roads: vec![road], junctions: vec![] }
    }

    #[test]
    fn straight_road_lanelets() {
        let map = to_lanelets(&straight(), 1.0, 0.5).unwrap();
        assert_eq!(map.lanelets.len(), 2);
        let fwd = map.find("1", -1).unwrap();
        let right = map.right_points(fwd);
        assert_eq!(right.len(), 101);
        assert_eq!(map.left_points(fwd).len(), 101);
        assert!(right.iter().all(|p| (p.y + 3.5).abs() < 1e-12));
        // the opposite lanelet runs from x = 100 back to 0
        let back = map.find("1", 1).unwrap();
        assert_eq!(map.left_points(back)[0], Vec2::new(100.0, 0.0));
        assert_abs_diff_eq!(map.right_points(back)[0].y, 3.5);
    }

    #[test]
    fn single_road_graph_has_no_edges() {
        let map = to_lanelets(&gen_curved_road(&CurvedRoadParams::default()).unwrap(), 1.0, 0.5).unwrap();
        let g = build_route_graph(&map);
        assert_eq!(g.vertices.len(), 2);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn chained_roads_share_nodes() {
        let mut a = Road::from_pieces("1", Pose2D::default(), &[(10.0, 0.0)], 3.5).unwrap();
        let mut b = Road::from_pieces("2", Pose2D::new(10.0, 0.0, 0.0), &[(10.0, 0.01)], 3.5).unwrap();
        a.successor = Some(crate::road::RoadLink::road("2", ContactPoint::Start));
        b.predecessor = Some(crate::road::RoadLink::road("1", ContactPoint::End));
        let map = to_lanelets(&RoadNetwork { roads: vec![a, b], junctions: vec![] }, 1.0, 0.5).unwrap();
        let g = build_route_graph(&map);
        let (a_fwd, b_fwd) = (map.find("1", -1).unwrap(), map.find("2", -1).unwrap());
        let (a_back, b_back) = (map.find("1", 1).unwrap(), map.find("2", 1).unwrap());
        assert_eq!(g.edges.len(), 2);
        assert_eq!((g.edges[0].from, g.edges[0].to), (a_fwd, b_fwd));
        assert_eq!((g.edges[1].from, g.edges[1].to), (b_back, a_back));
        assert_abs_diff_eq!(g.edges[0].weight, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn tight_arc_is_rejected() {
        let road = Road::from_pieces("7", Pose2D::default(), &[(3.0, 1.0 / 3.0)], 4.0).unwrap();
        let err = to_lanelets(&RoadNetwork { roads: vec![road], junctions: vec![] }, 1.0, 0.5).unwrap_err();
        assert!(err.to_string().contains("road 7"));
    }

    #[test]
    fn projection_examples() {
        let o = GeoOrigin { lat: 49.0, lon: 8.0 };
        assert_eq!(o.to_geo(Vec2::new(0.0, 0.0)), (49.0, 8.0));
        let (lat, _) = o.to_geo(Vec2::new(0.0, 111_320.0));
        assert_abs_diff_eq!(lat, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn osm_round_trip_and_errors() {
        let map = to_lanelets(&gen_curved_road(&CurvedRoadParams::default()).unwrap(), 1.0, 0.5).unwrap();
        let text = emit_osm(&map, DEFAULT_ORIGIN);
        let back = parse_osm(&text, DEFAULT_ORIGIN).unwrap();
        assert_eq!(back.lanelets, map.lanelets);
        assert_eq!(back.linestrings, map.linestrings);
        for (id, p) in &map.nodes {
            assert!(back.nodes[id].distance(*p) < 1e-6);
        }
        let broken = text.replacen("role=\"right\"", "role=\"middle\"", 1);
        assert!(matches!(parse_osm(&broken, DEFAULT_ORIGIN), Err(LaneletError::Structure { .. })));
        assert_eq!(parse_osm("<osm/>", DEFAULT_ORIGIN).unwrap(), LaneletMap::default());
    }
}
