//! OpenSCENARIO 1.x subset: instantiating the scenario template and reading
//! back the fields the simulator needs.

use std::collections::BTreeMap;

use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road::RoadNetwork;
use crate::roadgen::{ConcreteScenario, LanePosition};
use crate::xmlutil::{child, escape, position};

pub const DEFAULT_TEMPLATE: &str = include_str!("../templates/scenario.xosc");
pub const DEFAULT_TOLERANCE: f64 = 2.0;
pub const DEFAULT_VEHICLE: &str = "vehicle.roadtest.reference";

const ATTEMPT_PARAM: &str = "RoadTest_AttemptLimit";
const TIMEOUT_PARAM: &str = "RoadTest_Timeout";

const SLOTS: &[&str] = &[
    "scenario_name",
    "attempt_limit",
    "timeout",
    "map_file",
    "vehicle",
    "start_road",
    "start_lane",
    "start_s",
    "initial_speed",
    "tolerance",
    "target_road",
    "target_lane",
    "target_s",
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("template: unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("template: unterminated placeholder at byte {0}")]
    Unterminated(usize),
    #[error("route: {0}")]
    Route(String),
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("{line}:{column}: {message}")]
    Structure { line: u32, column: u32, message: String },
}

fn structure(node: Node<'_, '_>, message: impl Into<String>) -> ScenarioError {
    let (line, column) = position(node);
    ScenarioError::Structure { line, column, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoStart {
    pub position: LanePosition,
    pub initial_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario_name: String,
    pub map_file: String,
    pub ego: EgoStart,
    pub target: LanePosition,
    pub vehicle_ref: String,
    pub attempt_limit: u32,
    pub timeout: f64,
    /// Radius of the reach-position stop trigger.
    pub arrival_tolerance: f64,
}

impl ScenarioConfig {
    pub fn for_scenario(cs: &ConcreteScenario, map_file: &str, attempt_limit: u32, timeout: f64) -> Self {
        ScenarioConfig {
            scenario_name: cs.id.clone(),
            map_file: map_file.into(),
            ego: EgoStart { position: cs.route.start.clone(), initial_speed: 0.0 },
            target: cs.route.target.clone(),
            vehicle_ref: DEFAULT_VEHICLE.into(),
            attempt_limit,
            timeout,
            arrival_tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn check(&self) -> Result<(), ScenarioError> {
        let invalid = |m: &str| Err(ScenarioError::InvalidConfig(m.into()));
        if self.ego.position == self.target {
            return invalid("start and target coincide");
        }
        if !(self.ego.initial_speed >= 0.0) {
            return invalid("initial speed must be non-negative");
        }
        if self.attempt_limit < 1 {
            return invalid("attempt limit must be at least 1");
        }
        if !(self.timeout > 0.0) || !(self.arrival_tolerance > 0.0) {
            return invalid("timeout and arrival tolerance must be positive");
        }
        Ok(())
    }
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

/// Scenario document with `{name}` slots. Everything outside the slots is
/// copied verbatim.
#[derive(Debug, Clone)]
pub struct XoscTemplate {
    text: String,
}

impl XoscTemplate {
    pub fn new(text: impl Into<String>) -> Result<Self, ScenarioError> {
        let t = XoscTemplate { text: text.into() };
        for piece in t.pieces()? {
            if let Piece::Slot(name) = piece {
                if !SLOTS.contains(&name) {
                    return Err(ScenarioError::UnknownPlaceholder(name.into()));
                }
            }
        }
        Ok(t)
    }

    pub fn builtin() -> Self {
        XoscTemplate::new(DEFAULT_TEMPLATE).expect("built-in template is well formed")
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    fn pieces(&self) -> Result<Vec<Piece<'_>>, ScenarioError> {
        let mut out = Vec::new();
        let mut rest = self.text.as_str();
        let mut offset = 0;
        while let Some(open) = rest.find('{') {
            let close = rest[open..].find('}').ok_or(ScenarioError::Unterminated(offset + open))? + open;
            out.push(Piece::Text(&rest[..open]));
            out.push(Piece::Slot(&rest[open + 1..close]));
            offset += close + 1;
            rest = &rest[close + 1..];
        }
        out.push(Piece::Text(rest));
        Ok(out)
    }

    pub fn fill(&self, values: &BTreeMap<&str, String>) -> Result<String, ScenarioError> {
        let mut out = String::with_capacity(self.text.len());
        for piece in self.pieces()? {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => {
                    let v = values.get(name).ok_or_else(|| ScenarioError::UnknownPlaceholder(name.into()))?;
                    out.push_str(&escape(v));
                }
            }
        }
        Ok(out)
    }
}

fn check_position(net: &RoadNetwork, p: &LanePosition, what: &str) -> Result<(), ScenarioError> {
    let road = net.road(&p.road).ok_or_else(|| ScenarioError::Route(format!("{what} road {} does not exist", p.road)))?;
    if p.lane.abs() != 1 || !(0.0..=road.length()).contains(&p.s) {
        return Err(ScenarioError::Route(format!("{what} lane {} at s = {} is not on road {}", p.lane, p.s, p.road)));
    }
    Ok(())
}

/// Fills the template for one scenario. Numbers are written in their
/// shortest exact decimal form, so parsing recovers them bit for bit.
pub fn instantiate_xosc(template: &XoscTemplate, cfg: &ScenarioConfig, net: &RoadNetwork) -> Result<String, ScenarioError> {
    cfg.check()?;
    check_position(net, &cfg.ego.position, "start")?;
    check_position(net, &cfg.target, "target")?;
    let values: BTreeMap<&str, String> = [
        ("scenario_name", cfg.scenario_name.clone()),
        ("attempt_limit", cfg.attempt_limit.to_string()),
        ("timeout", cfg.timeout.to_string()),
        ("map_file", cfg.map_file.clone()),
        ("vehicle", cfg.vehicle_ref.clone()),
        ("start_road", cfg.ego.position.road.clone()),
        ("start_lane", cfg.ego.position.lane.to_string()),
        ("start_s", cfg.ego.position.s.to_string()),
        ("initial_speed", cfg.ego.initial_speed.to_string()),
        ("tolerance", cfg.arrival_tolerance.to_string()),
        ("target_road", cfg.target.road.clone()),
        ("target_lane", cfg.target.lane.to_string()),
        ("target_s", cfg.target.s.to_string()),
    ]
    .into_iter()
    .collect();
    template.fill(&values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedXosc {
    pub config: ScenarioConfig,
    pub warnings: Vec<String>,
}

fn find<'a, 'i>(node: Node<'a, 'i>, path: &[&str]) -> Option<Node<'a, 'i>> {
    path.iter().try_fold(node, |n, name| child(n, name))
}

fn attr<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, ScenarioError> {
    node.attribute(name).ok_or_else(|| structure(node, format!("<{}> lacks attribute '{name}'", node.tag_name().name())))
}

fn parse_attr<T: std::str::FromStr>(node: Node<'_, '_>, name: &str) -> Result<T, ScenarioError> {
    let raw = attr(node, name)?;
    raw.trim().parse().map_err(|_| structure(node, format!("attribute '{name}' has invalid value '{raw}'")))
}

fn lane_position(node: Node<'_, '_>) -> Result<LanePosition, ScenarioError> {
    Ok(LanePosition { road: attr(node, "roadId")?.to_string(), lane: parse_attr(node, "laneId")?, s: parse_attr(node, "s")? })
}

pub fn parse_xosc(text: &str) -> Result<ParsedXosc, ScenarioError> {
    let doc = Document::parse(text)?;
    let root = doc.root_element();
    if !root.has_tag_name("OpenSCENARIO") {
        return Err(structure(root, "root element is not <OpenSCENARIO>"));
    }
    let mut warnings = Vec::new();
    let scenario_name =
        child(root, "FileHeader").and_then(|h| h.attribute("description")).unwrap_or_default().to_string();

    let mut attempt_limit = 1;
    let mut timeout = f64::INFINITY;
    if let Some(decls) = child(root, "ParameterDeclarations") {
        for d in decls.children().filter(|c| c.has_tag_name("ParameterDeclaration")) {
            match d.attribute("name") {
                Some(ATTEMPT_PARAM) => attempt_limit = parse_attr(d, "value")?,
                Some(TIMEOUT_PARAM) => timeout = parse_attr(d, "value")?,
                _ => {}
            }
        }
    }

    let logic = find(root, &["RoadNetwork", "LogicFile"]).ok_or_else(|| structure(root, "missing RoadNetwork/LogicFile"))?;
    let map_file = attr(logic, "filepath")?.to_string();

    let entities = child(root, "Entities").ok_or_else(|| structure(root, "missing Entities"))?;
    let ego = child(entities, "ScenarioObject").ok_or_else(|| structure(entities, "no ScenarioObject"))?;
    let ego_name = attr(ego, "name")?;
    let vehicle_ref = match child(ego, "CatalogReference") {
        Some(r) => attr(r, "entryName")?.to_string(),
        None => {
            warnings.push("ego entity has no catalog reference".into());
            String::new()
        }
    };

    let storyboard = child(root, "Storyboard").ok_or_else(|| structure(root, "missing Storyboard"))?;
    let private = find(storyboard, &["Init", "Actions"])
        .and_then(|a| a.children().find(|p| p.has_tag_name("Private") && p.attribute("entityRef") == Some(ego_name)))
        .ok_or_else(|| structure(storyboard, format!("no Init actions for entity '{ego_name}'")))?;
    let mut start = None;
    let mut initial_speed = 0.0;
    for action in private.children().filter(|c| c.has_tag_name("PrivateAction")) {
        if let Some(lp) = find(action, &["TeleportAction", "Position", "LanePosition"]) {
            start = Some(lane_position(lp)?);
        } else if let Some(sp) = find(action, &["LongitudinalAction", "SpeedAction", "SpeedActionTarget", "AbsoluteTargetSpeed"]) {
            initial_speed = parse_attr(sp, "value")?;
        } else {
            let (line, col) = position(action);
            warnings.push(format!("{line}:{col}: unrecognized init action ignored"));
        }
    }
    let start = start.ok_or_else(|| structure(private, "ego has no TeleportAction to a LanePosition"))?;

    let reach = storyboard
        .descendants()
        .filter(|n| n.has_tag_name("StopTrigger"))
        .flat_map(|t| t.descendants())
        .find(|n| n.has_tag_name("ReachPositionCondition"))
        .ok_or_else(|| structure(storyboard, "no ReachPositionCondition stop trigger"))?;
    let target_node = find(reach, &["Position", "LanePosition"]).ok_or_else(|| structure(reach, "target is not a LanePosition"))?;
    let target = lane_position(target_node)?;
    let arrival_tolerance = parse_attr(reach, "tolerance")?;

    for story in storyboard.children().filter(|c| c.has_tag_name("Story")) {
        let (line, col) = position(story);
        warnings.push(format!("{line}:{col}: story content ignored"));
    }

    Ok(ParsedXosc {
        config: ScenarioConfig {
            scenario_name,
            map_file,
            ego: EgoStart { position: start, initial_speed },
            target,
            vehicle_ref,
            attempt_limit,
            timeout,
            arrival_tolerance,
        },
        warnings,
    })
}
