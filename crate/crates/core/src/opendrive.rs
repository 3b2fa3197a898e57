//! OpenDRIVE 1.6 subset: line/arc plan views, a single lane section with one
//! constant-width driving lane per side, and junction connections.

use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::numfmt::format_g;
use crate::road::{
    validate_network_with, ContactPoint, ElementType, GeomSegment, Junction, JunctionConnection, LaneLink, Pose2D, Road, RoadError,
    RoadLink, RoadNetwork, TrafficRule, ValidationReport, PARSED_TOLERANCE,
};
use crate::xmlutil::{child, children, escape, position};

const DIGITS: usize = 17;
const HEADER_DATE: &str = "2024-01-01T00:00:00";

#[derive(Debug, Error)]
pub enum OpenDriveError {
    #[error("refusing to emit an invalid network:\n{0}")]
    InvalidNetwork(ValidationReport),
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("{line}:{column}: {message}")]
    Structure { line: u32, column: u32, message: String },
    #[error("{line}:{column}: unsupported element <{element}>")]
    Unsupported { line: u32, column: u32, element: String },
}

fn structure(node: Node<'_, '_>, message: impl Into<String>) -> OpenDriveError {
    let (line, column) = position(node);
    OpenDriveError::Structure { line, column, message: message.into() }
}

fn num(v: f64) -> String {
    format_g(v, DIGITS)
}

fn rule_str(rule: TrafficRule) -> &'static str {
    match rule {
        TrafficRule::RightHand => "RHT",
        TrafficRule::LeftHand => "LHT",
    }
}

/// Serializes a network. Networks that fail validation at the parsed-file
/// tolerance are rejected, so parsed maps can be re-emitted.
pub fn emit_opendrive(net: &RoadNetwork, name: &str) -> Result<String, OpenDriveError> {
    let report = validate_network_with(net, PARSED_TOLERANCE);
    if !report.is_valid() {
        return Err(OpenDriveError::InvalidNetwork(report));
    }
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<OpenDRIVE>\n");
    let _ = writeln!(
        out,
        "  <header revMajor=\"1\" revMinor=\"6\" name=\"{}\" version=\"1.00\" date=\"{HEADER_DATE}\" north=\"0\" south=\"0\" east=\"0\" west=\"0\">",
        escape(name)
    );
    out.push_str("    <geoReference><![CDATA[]]></geoReference>\n  </header>\n");
    for road in &net.roads {
        emit_road(&mut out, road);
    }
    for junction in &net.junctions {
        emit_junction(&mut out, junction);
    }
    out.push_str("</OpenDRIVE>\n");
    Ok(out)
}

fn link_element(out: &mut String, tag: &str, link: &RoadLink) {
    match link.element_type {
        ElementType::Road => {
            let cp = link.contact_point.unwrap_or(ContactPoint::Start);
            let _ = writeln!(out, "      <{tag} elementType=\"road\" elementId=\"{}\" contactPoint=\"{}\"/>", escape(&link.element_id), cp.as_str());
        }
        ElementType::Junction => {
            let _ = writeln!(out, "      <{tag} elementType=\"junction\" elementId=\"{}\"/>", escape(&link.element_id));
        }
    }
}

/// Lane id reached on the linked road, or none for junction links.
fn linked_lane(lane: i32, own_end: ContactPoint, link: Option<&RoadLink>) -> Option<i32> {
    let link = link?;
    let other = link.contact_point.filter(|_| link.element_type == ElementType::Road)?;
    Some(if own_end == other { -lane } else { lane })
}

fn emit_lane(out: &mut String, road: &Road, id: i32) {
    let _ = writeln!(out, "          <lane id=\"{id}\" type=\"driving\" level=\"false\">");
    let pred = linked_lane(id, ContactPoint::Start, road.predecessor.as_ref());
    let succ = linked_lane(id, ContactPoint::End, road.successor.as_ref());
    if pred.is_some() || succ.is_some() {
        out.push_str("            <link>\n");
        if let Some(p) = pred {
            let _ = writeln!(out, "              <predecessor id=\"{p}\"/>");
        }
        if let Some(s) = succ {
            let _ = writeln!(out, "              <successor id=\"{s}\"/>");
        }
        out.push_str("            </link>\n");
    }
    let _ = writeln!(out, "            <width sOffset=\"0\" a=\"{}\" b=\"0\" c=\"0\" d=\"0\"/>", num(road.lane_width));
    out.push_str("          </lane>\n");
}

fn emit_road(out: &mut String, road: &Road) {
    let junction = road.junction.as_deref().unwrap_or("-1");
    let _ = writeln!(
        out,
        "  <road name=\"\" length=\"{}\" id=\"{}\" junction=\"{}\" rule=\"{}\">",
        num(road.length()),
        escape(&road.id),
        escape(junction),
        rule_str(road.rule)
    );
    if road.predecessor.is_some() || road.successor.is_some() {
        out.push_str("    <link>\n");
        if let Some(p) = &road.predecessor {
            link_element(out, "predecessor", p);
        }
        if let Some(s) = &road.successor {
            link_element(out, "successor", s);
        }
        out.push_str("    </link>\n");
    }
    out.push_str("    <planView>\n");
    let mut s = 0.0;
    for seg in &road.segments {
        let p = seg.start();
        let _ = write!(
            out,
            "      <geometry s=\"{}\" x=\"{}\" y=\"{}\" hdg=\"{}\" length=\"{}\">",
            num(s),
            num(p.x),
            num(p.y),
            num(p.heading),
            num(seg.length())
        );
        if seg.curvature() == 0.0 {
            out.push_str("<line/>");
        } else {
            let _ = write!(out, "<arc curvature=\"{}\"/>", num(seg.curvature()));
        }
        out.push_str("</geometry>\n");
        s += seg.length();
    }
    out.push_str("    </planView>\n    <lanes>\n      <laneSection s=\"0\">\n        <left>\n");
    emit_lane(out, road, 1);
    out.push_str("        </left>\n        <center>\n          <lane id=\"0\" type=\"none\" level=\"false\"/>\n        </center>\n        <right>\n");
    emit_lane(out, road, -1);
    out.push_str("        </right>\n      </laneSection>\n    </lanes>\n  </road>\n");
}

fn emit_junction(out: &mut String, junction: &Junction) {
    let _ = writeln!(out, "  <junction id=\"{}\" name=\"\">", escape(&junction.id));
    for c in &junction.connections {
        let _ = writeln!(
            out,
            "    <connection id=\"{}\" incomingRoad=\"{}\" connectingRoad=\"{}\" contactPoint=\"{}\">",
            escape(&c.id),
            escape(&c.incoming_road),
            escape(&c.connecting_road),
            c.contact_point.as_str()
        );
        let _ = writeln!(out, "      <laneLink from=\"{}\" to=\"{}\"/>", c.lane_link.from, c.lane_link.to);
        out.push_str("    </connection>\n");
    }
    out.push_str("  </junction>\n");
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Treat unknown plan-view geometry as an error instead of skipping it.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedOpenDrive {
    pub name: String,
    pub network: RoadNetwork,
    pub warnings: Vec<String>,
}

pub fn parse_opendrive(text: &str) -> Result<ParsedOpenDrive, OpenDriveError> {
    parse_opendrive_with(text, ParseOptions::default())
}

pub fn parse_opendrive_with(text: &str, opts: ParseOptions) -> Result<ParsedOpenDrive, OpenDriveError> {
    let doc = Document::parse(text)?;
    let root = doc.root_element();
    if !root.has_tag_name("OpenDRIVE") {
        return Err(structure(root, format!("root element is <{}>, expected <OpenDRIVE>", root.tag_name().name())));
    }
    let mut p = Parser { opts, warnings: Vec::new() };
    let mut name = String::new();
    let mut net = RoadNetwork::default();
    let mut junction_nodes = Vec::new();
    for node in root.children().filter(Node::is_element) {
        match node.tag_name().name() {
            "header" => name = node.attribute("name").unwrap_or("").to_string(),
            "road" => net.roads.push(p.road(node)?),
            "junction" => junction_nodes.push(node),
            other => p.skip(node, other),
        }
    }
    for node in junction_nodes {
        let j = p.junction(node, &net)?;
        net.junctions.push(j);
    }
    Ok(ParsedOpenDrive { name, network: net, warnings: p.warnings })
}

struct Parser {
    opts: ParseOptions,
    warnings: Vec<String>,
}

fn attr<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, OpenDriveError> {
    node.attribute(name).ok_or_else(|| structure(node, format!("<{}> lacks attribute '{name}'", node.tag_name().name())))
}

fn attr_f64(node: Node<'_, '_>, name: &str) -> Result<f64, OpenDriveError> {
    let raw = attr(node, name)?;
    raw.trim().parse::<f64>().map_err(|_| structure(node, format!("attribute '{name}' is not a number: '{raw}'")))
}

fn attr_i32(node: Node<'_, '_>, name: &str) -> Result<i32, OpenDriveError> {
    let raw = attr(node, name)?;
    raw.trim().parse::<i32>().map_err(|_| structure(node, format!("attribute '{name}' is not an integer: '{raw}'")))
}

fn contact(node: Node<'_, '_>) -> Result<ContactPoint, OpenDriveError> {
    match attr(node, "contactPoint")? {
        "start" => Ok(ContactPoint::Start),
        "end" => Ok(ContactPoint::End),
        other => Err(structure(node, format!("unknown contactPoint '{other}'"))),
    }
}

impl Parser {
    fn skip(&mut self, node: Node<'_, '_>, what: &str) {
        let (line, col) = position(node);
        self.warnings.push(format!("{line}:{col}: <{what}> is not supported and was skipped"));
    }

    fn link(&mut self, node: Node<'_, '_>) -> Result<RoadLink, OpenDriveError> {
        let id = attr(node, "elementId")?;
        match attr(node, "elementType")? {
            "road" => Ok(RoadLink::road(id, contact(node)?)),
            "junction" => Ok(RoadLink::junction(id)),
            other => Err(structure(node, format!("unknown elementType '{other}'"))),
        }
    }

    fn road(&mut self, node: Node<'_, '_>) -> Result<Road, OpenDriveError> {
        let id = attr(node, "id")?.to_string();
        let junction = match node.attribute("junction") {
            None | Some("-1") => None,
            Some(j) => Some(j.to_string()),
        };
        let rule = match node.attribute("rule") {
            None | Some("RHT") => TrafficRule::RightHand,
            Some("LHT") => TrafficRule::LeftHand,
            Some(other) => return Err(structure(node, format!("unknown traffic rule '{other}'"))),
        };
        let mut road = Road { id, segments: vec![], lane_width: 0.0, predecessor: None, successor: None, junction, rule };
        let mut have_plan = false;
        let mut have_lanes = false;
        for c in node.children().filter(Node::is_element) {
            match c.tag_name().name() {
                "link" => {
                    if let Some(l) = child(c, "predecessor") {
                        road.predecessor = Some(self.link(l)?);
                    }
                    if let Some(l) = child(c, "successor") {
                        road.successor = Some(self.link(l)?);
                    }
                }
                "planView" => {
                    have_plan = true;
                    self.plan_view(c, &mut road)?;
                }
                "lanes" => {
                    have_lanes = true;
                    road.lane_width = self.lanes(c, &road.id)?;
                }
                other => self.skip(c, other),
            }
        }
        if !have_plan {
            return Err(structure(node, format!("road {} has no <planView>", road.id)));
        }
        if !have_lanes {
            return Err(structure(node, format!("road {} has no <lanes>", road.id)));
        }
        if let Some(len) = node.attribute("length").and_then(|l| l.trim().parse::<f64>().ok()) {
            if (len - road.length()).abs() > PARSED_TOLERANCE {
                self.warnings.push(format!("road {}: length attribute {len} differs from geometry sum {}", road.id, road.length()));
            }
        }
        Ok(road)
    }

    fn plan_view(&mut self, node: Node<'_, '_>, road: &mut Road) -> Result<(), OpenDriveError> {
        for g in children(node, "geometry") {
            let start = Pose2D::new(attr_f64(g, "x")?, attr_f64(g, "y")?, attr_f64(g, "hdg")?);
            let length = attr_f64(g, "length")?;
            let Some(kind) = g.children().find(Node::is_element) else {
                return Err(structure(g, "geometry record without a primitive"));
            };
            let seg: Result<GeomSegment, RoadError> = match kind.tag_name().name() {
                "line" => GeomSegment::line(start, length),
                "arc" => GeomSegment::arc(start, length, attr_f64(kind, "curvature")?),
                other => {
                    if self.opts.strict {
                        let (line, column) = position(kind);
                        return Err(OpenDriveError::Unsupported { line, column, element: other.to_string() });
                    }
                    self.skip(kind, other);
                    continue;
                }
            };
            road.segments.push(seg.map_err(|e| structure(g, e.to_string()))?);
        }
        Ok(())
    }

    /// Returns the lane width.
    fn lanes(&mut self, node: Node<'_, '_>, road: &str) -> Result<f64, OpenDriveError> {
        let mut sections = children(node, "laneSection");
        let section = sections.next().ok_or_else(|| structure(node, format!("road {road} has no <laneSection>")))?;
        if sections.next().is_some() {
            self.warnings.push(format!("road {road}: only the first laneSection is used"));
        }
        let mut widths = Vec::new();
        for side in ["left", "right"] {
            let Some(side_node) = child(section, side) else { continue };
            for lane in children(side_node, "lane") {
                let id = attr_i32(lane, "id")?;
                if id.abs() != 1 {
                    self.warnings.push(format!("road {road}: lane {id} skipped"));
                    continue;
                }
                let w = child(lane, "width").ok_or_else(|| structure(lane, format!("road {road} lane {id} has no <width>")))?;
                for coeff in ["b", "c", "d"] {
                    if w.attribute(coeff).and_then(|v| v.trim().parse::<f64>().ok()).is_some_and(|v| v != 0.0) {
                        self.warnings.push(format!("road {road} lane {id}: non-constant width reduced to its constant term"));
                        break;
                    }
                }
                widths.push((id, attr_f64(w, "a")?));
            }
        }
        let width = widths
            .iter()
            .find(|w| w.0 == -1)
            .or(widths.first())
            .map(|w| w.1)
            .ok_or_else(|| structure(section, format!("road {road} has no driving lane")))?;
        if widths.iter().any(|w| (w.1 - width).abs() > PARSED_TOLERANCE) {
            self.warnings.push(format!("road {road}: lane widths differ, using {width}"));
        }
        Ok(width)
    }

    fn junction(&mut self, node: Node<'_, '_>, net: &RoadNetwork) -> Result<Junction, OpenDriveError> {
        let id = attr(node, "id")?.to_string();
        let mut j = Junction { id, incoming_road_ids: vec![], connections: vec![] };
        for c in node.children().filter(Node::is_element) {
            if !c.has_tag_name("connection") {
                self.skip(c, c.tag_name().name());
                continue;
            }
            let incoming = attr(c, "incomingRoad")?.to_string();
            let connecting = attr(c, "connectingRoad")?.to_string();
            let contact_point = contact(c)?;
            let mut links = children(c, "laneLink");
            let ll = links.next().ok_or_else(|| structure(c, "connection without <laneLink>"))?;
            if links.next().is_some() {
                self.warnings.push(format!("junction {} connection {}: extra lane links ignored", j.id, attr(c, "id")?));
            }
            let lane_link = LaneLink { from: attr_i32(ll, "from")?, to: attr_i32(ll, "to")? };
            let conn_road = net.road(&connecting);
            let far = conn_road.and_then(|r| match contact_point {
                ContactPoint::Start => r.successor.as_ref(),
                ContactPoint::End => r.predecessor.as_ref(),
            });
            let outgoing = far.map(|l| l.element_id.clone()).unwrap_or_default();
            if !j.incoming_road_ids.contains(&incoming) {
                j.incoming_road_ids.push(incoming.clone());
            }
            j.connections.push(JunctionConnection {
                id: attr(c, "id")?.to_string(),
                incoming_road: incoming,
                connecting_road: connecting,
                outgoing_road: outgoing,
                contact_point,
                lane_link,
            });
        }
        Ok(j)
    }
}

/// Structural checks on an OpenDRIVE document: required attributes and the
/// lane id range of the subset. Returns the problems found.
pub fn check_schema(text: &str) -> Vec<String> {
    let doc = match Document::parse(text) {
        Ok(d) => d,
        Err(e) => return vec![e.to_string()],
    };
    let required: &[(&str, &[&str])] = &[
        ("header", &["revMajor", "revMinor"]),
        ("road", &["id", "length", "junction"]),
        ("geometry", &["s", "x", "y", "hdg", "length"]),
        ("arc", &["curvature"]),
        ("laneSection", &["s"]),
        ("lane", &["id", "type"]),
        ("width", &["sOffset", "a", "b", "c", "d"]),
        ("junction", &["id"]),
        ("connection", &["id", "incomingRoad", "connectingRoad", "contactPoint"]),
        ("laneLink", &["from", "to"]),
    ];
    let mut problems = Vec::new();
    for node in doc.descendants().filter(Node::is_element) {
        let tag = node.tag_name().name();
        let (line, col) = position(node);
        if let Some((_, attrs)) = required.iter().find(|(t, _)| *t == tag) {
            for a in *attrs {
                if node.attribute(*a).is_none() {
                    problems.push(format!("{line}:{col}: <{tag}> lacks '{a}'"));
                }
            }
        }
        if tag == "lane" && !node.attribute("id").is_some_and(|id| matches!(id, "-1" | "0" | "1")) {
            problems.push(format!("{line}:{col}: lane id outside {{-1, 0, 1}}"));
        }
        if tag == "road" && (child(node, "planView").is_none() || child(node, "lanes").is_none()) {
            problems.push(format!("{line}:{col}: road lacks planView or lanes"));
        }
    }
    problems
}
