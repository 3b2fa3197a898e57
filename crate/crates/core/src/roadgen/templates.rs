use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::road::{
    check_offset, normalize_angle, ContactPoint, Junction, JunctionConnection, LaneLink, Pose2D, Road, RoadError, RoadLink, RoadNetwork,
    TrafficRule,
};

/// Id of the only junction in T-junction and complex networks.
pub const JUNCTION_ID: &str = "1000";

/// Intersection angles outside this span were never part of the studied range.
pub const STUDIED_ANGLE_RANGE: (f64, f64) = (35.0, 135.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    Left,
    Right,
}

impl Turn {
    pub fn sign(self) -> f64 {
        match self {
            Turn::Left => 1.0,
            Turn::Right => -1.0,
        }
    }
}

/// A generated network plus non-fatal remarks about its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub network: RoadNetwork,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvedRoadParams {
    pub lane_width: f64,
    pub radius: f64,
    pub direction: Turn,
    pub entry_length: f64,
    pub exit_length: f64,
    /// Radians.
    pub arc_angle: f64,
}

impl Default for CurvedRoadParams {
    fn default() -> Self {
        Self { lane_width: 3.5, radius: 150.0, direction: Turn::Left, entry_length: 50.0, exit_length: 50.0, arc_angle: PI / 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TJunctionParams {
    pub lane_width: f64,
    /// Degrees between the minor arm and the east half of the through road.
    pub angle: f64,
    /// Distance from the virtual crossing point to each arm end.
    pub gap: f64,
    pub minor_arm: Turn,
    pub arm_length: f64,
    pub minor_arm_length: f64,
}

impl Default for TJunctionParams {
    fn default() -> Self {
        Self { lane_width: 3.5, angle: 90.0, gap: 20.0, minor_arm: Turn::Left, arm_length: 100.0, minor_arm_length: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexParams {
    pub junction: TJunctionParams,
    pub curve_radius: f64,
    pub curve_direction: Turn,
    pub entry_length: f64,
    pub exit_length: f64,
    pub arc_angle: f64,
}

impl Default for ComplexParams {
    fn default() -> Self {
        Self {
            junction: TJunctionParams { minor_arm_length: 50.0, ..TJunctionParams::default() },
            curve_radius: 150.0,
            curve_direction: Turn::Right,
            entry_length: 50.0,
            exit_length: 50.0,
            arc_angle: PI / 2.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), RoadError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(RoadError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn curve_road(id: &str, start: Pose2D, p: &CurvedRoadParams) -> Result<Road, RoadError> {
    positive("lane width", p.lane_width)?;
    positive("radius", p.radius)?;
    positive("entry length", p.entry_length)?;
    positive("exit length", p.exit_length)?;
    if !(p.arc_angle > 0.0 && p.arc_angle <= PI) {
        return Err(RoadError::InvalidParameter(format!("arc angle must lie in (0, π], got {}", p.arc_angle)));
    }
    if p.radius <= p.lane_width {
        return Err(RoadError::DegenerateGeometry(format!("curve radius {} m does not exceed lane width {} m", p.radius, p.lane_width)));
    }
    let curvature = p.direction.sign() / p.radius;
    Road::from_pieces(id, start, &[(p.entry_length, 0.0), (p.radius * p.arc_angle, curvature), (p.exit_length, 0.0)], p.lane_width)
}

/// Single road: entry tangent, circular arc, exit tangent. Starts at the
/// origin heading along +x.
pub fn gen_curved_road(p: &CurvedRoadParams) -> Result<RoadNetwork, RoadError> {
    let road = curve_road("1", Pose2D::default(), p)?;
    Ok(RoadNetwork { roads: vec![road], junctions: vec![] })
}

struct Arm {
    id: &'static str,
    /// Direction from the crossing point out along the arm.
    outward: f64,
}

/// Three approach roads meeting at a virtual crossing point at the origin.
/// Arm "1" comes from the west, arm "2" from the east, arm "3" is the minor
/// arm. Every arm's reference line points toward the junction and ends
/// `gap` meters before the crossing point; connecting roads are fillet arcs
/// tangent to both arm centerlines.
pub fn gen_t_junction(p: &TJunctionParams) -> Result<Generated, RoadError> {
    positive("lane width", p.lane_width)?;
    positive("gap", p.gap)?;
    positive("arm length", p.arm_length)?;
    positive("minor arm length", p.minor_arm_length)?;
    if !(p.angle.is_finite() && p.angle > 0.0 && p.angle <= 180.0) {
        return Err(RoadError::InvalidParameter(format!("intersection angle must lie in (0, 180]°, got {}", p.angle)));
    }
    let mut warnings = Vec::new();
    if p.angle < STUDIED_ANGLE_RANGE.0 || p.angle > STUDIED_ANGLE_RANGE.1 {
        warnings.push(format!(
            "intersection angle {}° lies outside {}–{}°",
            p.angle, STUDIED_ANGLE_RANGE.0, STUDIED_ANGLE_RANGE.1
        ));
    }

    let arms = [
        Arm { id: "1", outward: PI },
        Arm { id: "2", outward: 0.0 },
        Arm { id: "3", outward: normalize_angle(p.minor_arm.sign() * p.angle.to_radians()) },
    ];
    let mut roads = Vec::new();
    for (arm, len) in arms.iter().zip([p.arm_length, p.arm_length, p.minor_arm_length]) {
        let (s, c) = arm.outward.sin_cos();
        let reach = p.gap + len;
        let start = Pose2D::new(reach * c, reach * s, arm.outward + PI);
        let mut road = Road::from_pieces(arm.id, start, &[(len, 0.0)], p.lane_width)?;
        road.successor = Some(RoadLink::junction(JUNCTION_ID));
        roads.push(road);
    }

    let mut junction = Junction { id: JUNCTION_ID.into(), incoming_road_ids: arms.iter().map(|a| a.id.to_string()).collect(), connections: vec![] };
    let rule = TrafficRule::RightHand;
    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let conn_id = format!("{}", 100 + k);
        let interior = normalize_angle(arms[a].outward - arms[b].outward).abs();
        if interior < 1e-9 {
            warnings.push(format!("arms {} and {} coincide; no connecting road generated", arms[a].id, arms[b].id));
            continue;
        }
        let start = roads[a].end_pose();
        let deflection = normalize_angle(arms[b].outward - start.heading);
        let mut road = if deflection.abs() < 1e-12 {
            let end = roads[b].end_pose();
            Road::from_pieces(conn_id.clone(), start, &[(start.position().distance(end.position()), 0.0)], p.lane_width)?
        } else {
            let radius = p.gap * (0.5 * interior).tan();
            let conn = Road::from_pieces(
                conn_id.clone(),
                start,
                &[(radius * deflection.abs(), deflection.signum() / radius)],
                p.lane_width,
            )?;
            check_offset(&conn, p.lane_width)?;
            check_offset(&conn, -p.lane_width)?;
            conn
        };
        road.predecessor = Some(RoadLink::road(arms[a].id, ContactPoint::End));
        road.successor = Some(RoadLink::road(arms[b].id, ContactPoint::End));
        road.junction = Some(JUNCTION_ID.into());

        let forward = rule.forward_lane();
        for (incoming, outgoing, contact) in [(a, b, ContactPoint::Start), (b, a, ContactPoint::End)] {
            let to = if contact == ContactPoint::Start { forward } else { -forward };
            junction.connections.push(JunctionConnection {
                id: junction.connections.len().to_string(),
                incoming_road: arms[incoming].id.into(),
                connecting_road: conn_id.clone(),
                outgoing_road: arms[outgoing].id.into(),
                contact_point: contact,
                lane_link: LaneLink { from: forward, to },
            });
        }
        roads.push(road);
    }
    Ok(Generated { network: RoadNetwork { roads, junctions: vec![junction] }, warnings })
}

/// T-junction whose minor arm continues, at its far end, into a curved
/// section (road "4"). Road "4" starts where the minor arm starts and leads
/// away from the junction.
pub fn gen_complex(p: &ComplexParams) -> Result<Generated, RoadError> {
    let curve = CurvedRoadParams {
        lane_width: p.junction.lane_width,
        radius: p.curve_radius,
        direction: p.curve_direction,
        entry_length: p.entry_length,
        exit_length: p.exit_length,
        arc_angle: p.arc_angle,
    };
    let Generated { mut network, warnings } = gen_t_junction(&p.junction)?;
    let minor = network.road("3").expect("T-junction has a minor arm");
    let far = minor.start_pose();
    let mut road = curve_road("4", Pose2D::new(far.x, far.y, far.heading + PI), &curve)?;
    road.predecessor = Some(RoadLink::road("3", ContactPoint::Start));
    network.roads.iter_mut().find(|r| r.id == "3").unwrap().predecessor = Some(RoadLink::road("4", ContactPoint::Start));
    network.roads.push(road);
    Ok(Generated { network, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::{validate_network, Vec2};
    use approx::assert_abs_diff_eq;

    #[test]
    fn curved_road_length_and_validity() {
        let net = gen_curved_road(&CurvedRoadParams::default()).unwrap();
        assert!(validate_network(&net).is_valid());
        assert_eq!(net.roads[0].segments.len(), 3);
        assert_abs_diff_eq!(net.total_length(), 100.0 + 150.0 * PI / 2.0, epsilon = 1e-9);

        let p = CurvedRoadParams { radius: 100.0, ..Default::default() };
        assert_abs_diff_eq!(gen_curved_road(&p).unwrap().total_length(), 257.07963267948966, epsilon = 1e-9);
    }

    #[test]
    fn curved_road_tight_radius_is_still_geometry() {
        let p = CurvedRoadParams { lane_width: 4.0, radius: 86.0, ..Default::default() };
        assert!(validate_network(&gen_curved_road(&p).unwrap()).is_valid());
        let p = CurvedRoadParams { lane_width: 3.0, radius: 2.0, ..Default::default() };
        assert!(matches!(gen_curved_road(&p), Err(RoadError::DegenerateGeometry(_))));
    }

    #[test]
    fn left_and_right_curves_mirror() {
        let left = gen_curved_road(&CurvedRoadParams::default()).unwrap();
        let right = gen_curved_road(&CurvedRoadParams { direction: Turn::Right, ..Default::default() }).unwrap();
        let mirrored = left.reflected();
        for (a, b) in mirrored.roads[0].segments.iter().zip(&right.roads[0].segments) {
            assert_abs_diff_eq!(a.start().x, b.start().x, epsilon = 1e-9);
            assert_abs_diff_eq!(a.start().y, b.start().y, epsilon = 1e-9);
            assert_abs_diff_eq!(a.start().heading, b.start().heading, epsilon = 1e-9);
            assert_eq!(a.curvature(), b.curvature());
        }
    }

    #[test]
    fn right_angle_junction_fillets() {
        let p = TJunctionParams { lane_width: 3.5, gap: 10.0, angle: 90.0, ..Default::default() };
        let g = gen_t_junction(&p).unwrap();
        assert!(g.warnings.is_empty());
        let net = &g.network;
        assert!(validate_network(net).is_valid(), "{}", validate_network(net));
        for id in ["1", "2", "3"] {
            assert_abs_diff_eq!(net.road(id).unwrap().end_pose().position().norm(), 10.0, epsilon = 1e-9);
        }
        assert_eq!(net.junctions[0].connections.len(), 6);

        // connector 101 joins the west arm and the (left) minor arm: a left
        // turn for traffic from the west, a right turn for traffic from the
        // minor arm, whose right lane is on the inside of the fillet
        let conn = net.road("101").unwrap();
        let radius = 1.0 / conn.segments[0].curvature().abs();
        assert_abs_diff_eq!(radius, 10.0, epsilon = 1e-9);
        let center = Vec2::new(-10.0, 10.0);
        let inner_lane = conn.pose_at(conn.length() * 0.3).lateral(0.5 * 3.5);
        assert_abs_diff_eq!(inner_lane.distance(center), 10.0 - 3.5 / 2.0, epsilon = 1e-9);

        // tangency checked numerically at both ends
        let a = net.road("1").unwrap().end_pose();
        let b = net.road("3").unwrap().end_pose();
        let (s, e) = (conn.start_pose(), conn.end_pose());
        assert_abs_diff_eq!(s.position().distance(a.position()), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(normalize_angle(s.heading - a.heading), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.position().distance(b.position()), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(normalize_angle(e.heading - b.heading - PI), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn acute_small_gap_is_degenerate() {
        let p = TJunctionParams { angle: 35.0, gap: 5.0, lane_width: 3.5, ..Default::default() };
        // fillet between the east arm and the minor arm: 5·tan(17.5°) < 3.5
        assert!(matches!(gen_t_junction(&p), Err(RoadError::DegenerateGeometry(_))));
        let p = TJunctionParams { angle: 35.0, gap: 20.0, lane_width: 3.5, ..Default::default() };
        assert!(validate_network(&gen_t_junction(&p).unwrap().network).is_valid());
    }

    #[test]
    fn straight_angle_warns_and_uses_lines() {
        let g = gen_t_junction(&TJunctionParams { angle: 180.0, ..Default::default() }).unwrap();
        assert!(!g.warnings.is_empty());
        let conns: Vec<_> = g.network.roads.iter().filter(|r| r.junction.is_some()).collect();
        assert!(!conns.is_empty());
        for c in conns {
            assert!(c.segments.iter().all(|s| s.curvature() == 0.0));
        }
        assert!(validate_network(&g.network).is_valid());
    }

    #[test]
    fn complex_network_composition() {
        let p = ComplexParams::default();
        let g = gen_complex(&p).unwrap();
        let net = &g.network;
        assert!(validate_network(net).is_valid(), "{}", validate_network(net));
        assert!(net.roads.len() >= 4);
        assert_eq!(net.junctions.len(), 1);

        let t = gen_t_junction(&p.junction).unwrap().network;
        let curve = 50.0 + 50.0 + 150.0 * PI / 2.0;
        assert_abs_diff_eq!(net.total_length(), t.total_length() + curve, epsilon = 1e-9);

        let tight = ComplexParams { curve_radius: 2.0, ..Default::default() };
        assert!(matches!(gen_complex(&tight), Err(RoadError::DegenerateGeometry(_))));
        let wide = ComplexParams { curve_radius: 500.0, junction: TJunctionParams { lane_width: 4.0, ..p.junction }, ..p };
        assert!(validate_network(&gen_complex(&wide).unwrap().network).is_valid());
    }
}
