use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::geometry::{normalize_angle, SegmentKind};
use super::network::{ContactPoint, ElementType, Road, RoadLink, RoadNetwork};

/// Generated networks chain segments analytically.
pub const GENERATED_TOLERANCE: f64 = 1e-9;
/// Parsed networks come from rounded text.
pub const PARSED_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    DuplicateId,
    EmptyRoad,
    SegmentInvariant,
    LaneWidth,
    G0Continuity,
    G1Continuity,
    DanglingReference,
    AsymmetricLink,
    LinkGeometry,
    ConnectionMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `road <id>` or `junction <id>`.
    pub element: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.element, self.rule, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, element: String, rule: Rule, detail: String) {
        self.violations.push(Violation { element, rule, detail });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_network(net: &RoadNetwork) -> ValidationReport {
    validate_network_with(net, GENERATED_TOLERANCE)
}

pub fn validate_network_with(net: &RoadNetwork, tol: f64) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen = BTreeSet::new();
    for road in &net.roads {
        if !seen.insert(road.id.as_str()) {
            report.push(format!("road {}", road.id), Rule::DuplicateId, "road id is not unique".into());
        }
    }
    let mut seen = BTreeSet::new();
    for j in &net.junctions {
        if !seen.insert(j.id.as_str()) {
            report.push(format!("junction {}", j.id), Rule::DuplicateId, "junction id is not unique".into());
        }
    }

    for road in &net.roads {
        check_road_shape(road, tol, &mut report);
    }
    for road in &net.roads {
        if road.segments.is_empty() {
            continue;
        }
        for (link, here) in [(&road.predecessor, ContactPoint::Start), (&road.successor, ContactPoint::End)] {
            if let Some(link) = link {
                check_link(net, road, here, link, tol, &mut report);
            }
        }
        if let Some(jid) = &road.junction {
            if net.junction(jid).is_none() {
                report.push(format!("road {}", road.id), Rule::DanglingReference, format!("junction {jid} does not exist"));
            }
        }
    }
    check_junctions(net, tol, &mut report);
    report
}

fn check_road_shape(road: &Road, tol: f64, report: &mut ValidationReport) {
    let element = format!("road {}", road.id);
    if road.segments.is_empty() {
        report.push(element.clone(), Rule::EmptyRoad, "road has no geometry".into());
    }
    if !(road.lane_width.is_finite() && road.lane_width > 0.0) {
        report.push(element.clone(), Rule::LaneWidth, format!("lane width {} is not positive", road.lane_width));
    }
    for (i, seg) in road.segments.iter().enumerate() {
        let ok = seg.length() > 0.0
            && match seg.kind() {
                SegmentKind::Line => seg.curvature() == 0.0,
                SegmentKind::Arc => seg.curvature() != 0.0 && seg.curvature().is_finite(),
            };
        if !ok {
            report.push(element.clone(), Rule::SegmentInvariant, format!("segment {i} violates kind/length invariants"));
        }
    }
    for (i, pair) in road.segments.windows(2).enumerate() {
        let end = pair[0].end_pose();
        let next = pair[1].start();
        let gap = end.position().distance(next.position());
        if gap > tol {
            report.push(element.clone(), Rule::G0Continuity, format!("gap of {gap:.3e} m between segments {i} and {}", i + 1));
        }
        let kink = normalize_angle(next.heading - end.heading).abs();
        if kink > tol {
            report.push(element.clone(), Rule::G1Continuity, format!("heading jump of {kink:.3e} rad between segments {i} and {}", i + 1));
        }
    }
}

fn opposite(c: ContactPoint) -> ContactPoint {
    match c {
        ContactPoint::Start => ContactPoint::End,
        ContactPoint::End => ContactPoint::Start,
    }
}

fn link_at(road: &Road, contact: ContactPoint) -> Option<&RoadLink> {
    match contact {
        ContactPoint::Start => road.predecessor.as_ref(),
        ContactPoint::End => road.successor.as_ref(),
    }
}

fn check_link(net: &RoadNetwork, road: &Road, here: ContactPoint, link: &RoadLink, tol: f64, report: &mut ValidationReport) {
    let element = format!("road {}", road.id);
    match link.element_type {
        ElementType::Junction => {
            let Some(j) = net.junction(&link.element_id) else {
                report.push(element, Rule::DanglingReference, format!("junction {} does not exist", link.element_id));
                return;
            };
            let listed = j.incoming_road_ids.contains(&road.id) || j.connections.iter().any(|c| c.connecting_road == road.id);
            if !listed {
                report.push(element, Rule::AsymmetricLink, format!("junction {} does not list this road", j.id));
            }
        }
        ElementType::Road => {
            let Some(other) = net.road(&link.element_id) else {
                report.push(element, Rule::DanglingReference, format!("road {} does not exist", link.element_id));
                return;
            };
            let Some(there) = link.contact_point else {
                report.push(element, Rule::DanglingReference, format!("link to road {} lacks a contact point", other.id));
                return;
            };
            if other.segments.is_empty() {
                return;
            }
            // the far side must point back, either directly or through our junction
            let back_ok = match link_at(other, there) {
                Some(back) => match back.element_type {
                    ElementType::Road => back.element_id == road.id && back.contact_point == Some(here),
                    ElementType::Junction => {
                        road.junction.as_deref() == Some(back.element_id.as_str())
                            || other.junction.as_deref() == Some(back.element_id.as_str())
                    }
                },
                None => false,
            };
            if !back_ok {
                report.push(element.clone(), Rule::AsymmetricLink, format!("road {} does not link back at its {}", other.id, there.as_str()));
            }
            let a = road.contact_pose(here);
            let b = other.contact_pose(there);
            let gap = a.position().distance(b.position());
            // End→Start keeps direction; Start→Start and End→End reverse it
            let expected = if here == opposite(there) { 0.0 } else { std::f64::consts::PI };
            let kink = normalize_angle(b.heading - a.heading - expected).abs();
            if gap > tol || kink > tol {
                report.push(
                    element,
                    Rule::LinkGeometry,
                    format!("contact with road {} off by {gap:.3e} m / {kink:.3e} rad", other.id),
                );
            }
        }
    }
}

fn check_junctions(net: &RoadNetwork, tol: f64, report: &mut ValidationReport) {
    for j in &net.junctions {
        let element = format!("junction {}", j.id);
        for id in &j.incoming_road_ids {
            if net.road(id).is_none() {
                report.push(element.clone(), Rule::DanglingReference, format!("incoming road {id} does not exist"));
            }
        }
        for c in &j.connections {
            let roads = [&c.incoming_road, &c.connecting_road, &c.outgoing_road];
            let missing: Vec<&String> = roads.iter().copied().filter(|id| net.road(id).is_none()).collect();
            if !missing.is_empty() {
                for id in missing {
                    report.push(element.clone(), Rule::DanglingReference, format!("connection {} references missing road {id}", c.id));
                }
                continue;
            }
            let conn = net.road(&c.connecting_road).unwrap();
            if conn.junction.as_deref() != Some(j.id.as_str()) {
                report.push(element.clone(), Rule::ConnectionMismatch, format!("connecting road {} is not marked as part of this junction", conn.id));
            }
            if conn.segments.is_empty() {
                continue;
            }
            let linked = |contact: ContactPoint, road_id: &str| {
                link_at(conn, contact).is_some_and(|l| l.element_type == ElementType::Road && l.element_id == road_id)
            };
            let entry = c.contact_point;
            if !linked(entry, &c.incoming_road) || !linked(opposite(entry), &c.outgoing_road) {
                report.push(
                    element.clone(),
                    Rule::ConnectionMismatch,
                    format!("connection {}: road {} is not linked {} → {}", c.id, conn.id, c.incoming_road, c.outgoing_road),
                );
                continue;
            }
            for (contact, arm_id) in [(entry, &c.incoming_road), (opposite(entry), &c.outgoing_road)] {
                let arm = net.road(arm_id).unwrap();
                let Some(arm_contact) = link_at(conn, contact).and_then(|l| l.contact_point) else { continue };
                if arm.segments.is_empty() {
                    continue;
                }
                let gap = conn.contact_pose(contact).position().distance(arm.contact_pose(arm_contact).position());
                if gap > tol.max(PARSED_TOLERANCE) {
                    report.push(
                        element.clone(),
                        Rule::ConnectionMismatch,
                        format!("connection {}: road {} misses arm {arm_id} by {gap:.3e} m", c.id, conn.id),
                    );
                }
            }
            if c.lane_link.from.abs() != 1 || c.lane_link.to.abs() != 1 {
                report.push(element.clone(), Rule::ConnectionMismatch, format!("connection {}: lane link must use lanes ±1", c.id));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::{Junction, JunctionConnection, LaneLink, Pose2D};

    fn two_road_chain() -> RoadNetwork {
        let mut a = Road::from_pieces("1", Pose2D::default(), &[(10.0, 0.0), (5.0, 0.05)], 3.5).unwrap();
        let mut b = Road::from_pieces("2", a.end_pose(), &[(10.0, 0.0)], 3.5).unwrap();
        a.successor = Some(RoadLink::road("2", ContactPoint::Start));
        b.predecessor = Some(RoadLink::road("1", ContactPoint::End));
        RoadNetwork { roads: vec![a, b], junctions: vec![] }
    }

    #[test]
    fn consistent_chain_is_valid() {
        let report = validate_network(&two_road_chain());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn millimetre_gap_is_reported() {
        let mut net = two_road_chain();
        let seg0 = net.roads[0].segments[0];
        let end = seg0.end_pose();
        let shifted = Pose2D::new(end.x + 1e-3, end.y, end.heading);
        net.roads[0].segments[1] = crate::road::GeomSegment::arc(shifted, 5.0, 0.05).unwrap();
        let report = validate_network(&net);
        assert!(report.has_rule(Rule::G0Continuity), "{report}");
        assert!(report.violations.iter().any(|v| v.element == "road 1"));
    }

    #[test]
    fn dangling_junction_reference() {
        let mut net = two_road_chain();
        net.junctions.push(Junction {
            id: "9".into(),
            incoming_road_ids: vec!["1".into(), "42".into()],
            connections: vec![JunctionConnection {
                id: "0".into(),
                incoming_road: "1".into(),
                connecting_road: "77".into(),
                outgoing_road: "2".into(),
                contact_point: ContactPoint::Start,
                lane_link: LaneLink { from: -1, to: -1 },
            }],
        });
        let report = validate_network(&net);
        let dangling: Vec<_> = report.violations.iter().filter(|v| v.rule == Rule::DanglingReference).collect();
        assert_eq!(dangling.len(), 2, "{report}");
        assert!(dangling.iter().all(|v| v.element == "junction 9"));
    }

    #[test]
    fn one_sided_link_is_asymmetric() {
        let mut net = two_road_chain();
        net.roads[1].predecessor = None;
        assert!(validate_network(&net).has_rule(Rule::AsymmetricLink));
    }

    #[test]
    fn validation_is_idempotent() {
        let mut net = two_road_chain();
        net.roads[0].lane_width = -1.0;
        let before = net.clone();
        let a = validate_network(&net);
        let b = validate_network(&net);
        assert_eq!(a, b);
        assert_eq!(net, before);
        assert!(a.has_rule(Rule::LaneWidth));
    }
}
