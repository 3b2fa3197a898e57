//! Parametric road-network templates and expansion of logical scenarios
//! (value ranges) into concrete scenarios (one value per parameter).

mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road::{RoadError, RoadNetwork};

pub use templates::{
    gen_complex, gen_curved_road, gen_t_junction, ComplexParams, CurvedRoadParams, Generated, TJunctionParams, Turn, JUNCTION_ID,
    STUDIED_ANGLE_RANGE,
};

#[derive(Debug, Error)]
pub enum RoadgenError {
    #[error("variant count must be at least 1")]
    InvalidCount,
    #[error("invalid range for {name}: min {min} > max {max}")]
    InvalidRange { name: String, min: f64, max: f64 },
    #[error("unknown parameter '{name}' for template {template}")]
    UnknownParameter { name: String, template: Template },
    #[error("parameter '{name}' is measured in {expected}, not {given}")]
    UnitMismatch { name: String, expected: Unit, given: Unit },
    #[error("parameter '{0}' is both varied and fixed")]
    VariedAndFixed(String),
    #[error("{0}")]
    Definition(String),
    #[error("route: {0}")]
    Route(String),
    #[error(transparent)]
    Road(#[from] RoadError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: Box<RoadgenError> },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    CurvedLeft,
    CurvedRight,
    TJunctionLeft,
    TJunctionRight,
    Complex,
}

impl Template {
    pub const ALL: [Template; 5] =
        [Template::CurvedLeft, Template::CurvedRight, Template::TJunctionLeft, Template::TJunctionRight, Template::Complex];

    pub fn as_str(self) -> &'static str {
        match self {
            Template::CurvedLeft => "curved_left",
            Template::CurvedRight => "curved_right",
            Template::TJunctionLeft => "t_junction_left",
            Template::TJunctionRight => "t_junction_right",
            Template::Complex => "complex",
        }
    }

    /// Left and right variants of a template belong to the same family.
    pub fn family(self) -> Family {
        match self {
            Template::CurvedLeft | Template::CurvedRight => Family::Curved,
            Template::TJunctionLeft | Template::TJunctionRight => Family::TJunction,
            Template::Complex => Family::Complex,
        }
    }

    /// Parameter names with units and default values, in a fixed order.
    pub fn parameters(self) -> &'static [(&'static str, Unit, f64)] {
        const CURVED: &[(&str, Unit, f64)] = &[
            ("lane_width", Unit::M, 3.5),
            ("radius", Unit::M, 150.0),
            ("entry_length", Unit::M, 50.0),
            ("exit_length", Unit::M, 50.0),
            ("arc_angle", Unit::Deg, 90.0),
        ];
        const JUNCTION: &[(&str, Unit, f64)] = &[
            ("lane_width", Unit::M, 3.5),
            ("angle", Unit::Deg, 90.0),
            ("gap", Unit::M, 20.0),
            ("arm_length", Unit::M, 100.0),
            ("minor_arm_length", Unit::M, 100.0),
        ];
        const COMPLEX: &[(&str, Unit, f64)] = &[
            ("lane_width", Unit::M, 3.5),
            ("angle", Unit::Deg, 90.0),
            ("gap", Unit::M, 20.0),
            ("arm_length", Unit::M, 100.0),
            ("minor_arm_length", Unit::M, 50.0),
            ("radius", Unit::M, 150.0),
            ("entry_length", Unit::M, 50.0),
            ("exit_length", Unit::M, 50.0),
            ("arc_angle", Unit::Deg, 90.0),
        ];
        match self.family() {
            Family::Curved => CURVED,
            Family::TJunction => JUNCTION,
            Family::Complex => COMPLEX,
        }
    }

    pub fn unit_of(self, name: &str) -> Option<Unit> {
        self.parameters().iter().find(|p| p.0 == name).map(|p| p.1)
    }

    pub fn default_params(self) -> BTreeMap<String, f64> {
        self.parameters().iter().map(|&(n, _, v)| (n.to_string(), v)).collect()
    }

    pub fn default_route(self) -> RouteSpec {
        let at = |road: &str, lane: i32, s: Station| RoutePoint { road: road.into(), lane, station: s };
        match self.family() {
            Family::Curved => {
                RouteSpec { start: at("1", -1, Station::FromStart(5.0)), target: at("1", -1, Station::FromEnd(10.0)) }
            }
            Family::TJunction => {
                RouteSpec { start: at("1", -1, Station::FromStart(5.0)), target: at("3", 1, Station::FromStart(10.0)) }
            }
            Family::Complex => {
                RouteSpec { start: at("1", -1, Station::FromStart(5.0)), target: at("4", -1, Station::FromEnd(10.0)) }
            }
        }
    }

    /// Builds the network for a complete parameter map.
    pub fn build(self, params: &BTreeMap<String, f64>) -> Result<Generated, RoadError> {
        let get = |name: &str| params.get(name).copied().unwrap_or_else(|| self.default_params()[name]);
        let curve = |direction| CurvedRoadParams {
            lane_width: get("lane_width"),
            radius: get("radius"),
            direction,
            entry_length: get("entry_length"),
            exit_length: get("exit_length"),
            arc_angle: get("arc_angle").to_radians(),
        };
        let junction = |minor_arm| TJunctionParams {
            lane_width: get("lane_width"),
            angle: get("angle"),
            gap: get("gap"),
            minor_arm,
            arm_length: get("arm_length"),
            minor_arm_length: get("minor_arm_length"),
        };
        match self {
            Template::CurvedLeft => Ok(Generated { network: gen_curved_road(&curve(Turn::Left))?, warnings: vec![] }),
            Template::CurvedRight => Ok(Generated { network: gen_curved_road(&curve(Turn::Right))?, warnings: vec![] }),
            Template::TJunctionLeft => gen_t_junction(&junction(Turn::Left)),
            Template::TJunctionRight => gen_t_junction(&junction(Turn::Right)),
            Template::Complex => {
                let c = curve(Turn::Right);
                gen_complex(&ComplexParams {
                    junction: junction(Turn::Left),
                    curve_radius: c.radius,
                    curve_direction: c.direction,
                    entry_length: c.entry_length,
                    exit_length: c.exit_length,
                    arc_angle: c.arc_angle,
                })
            }
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    Curved,
    TJunction,
    Complex,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Curved, Family::TJunction, Family::Complex];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Curved => "curved",
            Family::TJunction => "t_junction",
            Family::Complex => "complex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    M,
    Deg,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::M => "m",
            Unit::Deg => "deg",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub unit: Unit,
}

impl ParamRange {
    pub fn new(name: impl Into<String>, min: f64, max: f64, unit: Unit) -> Self {
        ParamRange { name: name.into(), min, max, unit }
    }

    fn check(&self) -> Result<(), RoadgenError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(RoadgenError::InvalidRange { name: self.name.clone(), min: self.min, max: self.max });
        }
        Ok(())
    }
}

/// `n` evenly spaced values over the range; the midpoint when `n` is 1.
pub fn linspace_variants(range: &ParamRange, n: usize) -> Result<Vec<f64>, RoadgenError> {
    range.check()?;
    match n {
        0 => Err(RoadgenError::InvalidCount),
        1 => Ok(vec![0.5 * (range.min + range.max)]),
        _ => {
            let step = (range.max - range.min) / (n - 1) as f64;
            Ok((0..n).map(|i| if i == n - 1 { range.max } else { range.min + step * i as f64 }).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Station {
    FromStart(f64),
    FromEnd(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutePoint {
    pub road: String,
    pub lane: i32,
    pub station: Station,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteSpec {
    pub start: RoutePoint,
    pub target: RoutePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanePosition {
    pub road: String,
    pub lane: i32,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRoute {
    pub start: LanePosition,
    pub target: LanePosition,
}

impl RoutePoint {
    fn resolve(&self, net: &RoadNetwork) -> Result<LanePosition, RoadgenError> {
        let road = net.road(&self.road).ok_or_else(|| RoadgenError::Route(format!("road {} does not exist", self.road)))?;
        if self.lane != 1 && self.lane != -1 {
            return Err(RoadgenError::Route(format!("lane {} is not a driving lane", self.lane)));
        }
        let len = road.length();
        let s = match self.station {
            Station::FromStart(s) => s,
            Station::FromEnd(d) => len - d,
        };
        if !(0.0..=len).contains(&s) {
            return Err(RoadgenError::Route(format!("s = {s} lies outside road {} (length {len})", self.road)));
        }
        Ok(LanePosition { road: self.road.clone(), lane: self.lane, s })
    }
}

impl RouteSpec {
    pub fn resolve(&self, net: &RoadNetwork) -> Result<ResolvedRoute, RoadgenError> {
        Ok(ResolvedRoute { start: self.start.resolve(net)?, target: self.target.resolve(net)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub range: ParamRange,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicalScenario {
    pub name: String,
    pub template: Template,
    pub varied: ParamRange,
    pub fixed: BTreeMap<String, f64>,
    pub variant_count: usize,
    pub route: RouteSpec,
    /// Further axes combined with `varied` as a cartesian product. Empty for
    /// ordinary one-at-a-time sweeps.
    pub extra_axes: Vec<Axis>,
}

impl LogicalScenario {
    pub fn new(name: impl Into<String>, template: Template, varied: ParamRange, variant_count: usize) -> Self {
        LogicalScenario {
            name: name.into(),
            template,
            varied,
            fixed: BTreeMap::new(),
            variant_count,
            route: template.default_route(),
            extra_axes: vec![],
        }
    }

    pub fn with_fixed(mut self, name: &str, value: f64) -> Self {
        self.fixed.insert(name.into(), value);
        self
    }

    pub fn validate(&self) -> Result<(), RoadgenError> {
        if self.variant_count == 0 {
            return Err(RoadgenError::InvalidCount);
        }
        let axes = std::iter::once(&self.varied).chain(self.extra_axes.iter().map(|a| &a.range));
        let mut seen = Vec::new();
        for range in axes {
            range.check()?;
            let expected = self
                .template
                .unit_of(&range.name)
                .ok_or_else(|| RoadgenError::UnknownParameter { name: range.name.clone(), template: self.template })?;
            if expected != range.unit {
                return Err(RoadgenError::UnitMismatch { name: range.name.clone(), expected, given: range.unit });
            }
            if self.fixed.contains_key(&range.name) || seen.contains(&&range.name) {
                return Err(RoadgenError::VariedAndFixed(range.name.clone()));
            }
            seen.push(&range.name);
        }
        if self.extra_axes.iter().any(|a| a.count == 0) {
            return Err(RoadgenError::InvalidCount);
        }
        for name in self.fixed.keys() {
            if self.template.unit_of(name).is_none() {
                return Err(RoadgenError::UnknownParameter { name: name.clone(), template: self.template });
            }
        }
        Ok(())
    }

    /// Number of concrete scenarios this logical scenario expands to.
    pub fn total_variants(&self) -> usize {
        self.extra_axes.iter().fold(self.variant_count, |n, a| n * a.count)
    }

    /// Parameter maps of all variants in expansion order.
    pub fn variant_params(&self) -> Result<Vec<BTreeMap<String, f64>>, RoadgenError> {
        self.validate()?;
        let mut base = self.template.default_params();
        base.extend(self.fixed.iter().map(|(k, v)| (k.clone(), *v)));
        let mut out: Vec<BTreeMap<String, f64>> = linspace_variants(&self.varied, self.variant_count)?
            .into_iter()
            .map(|v| {
                let mut p = base.clone();
                p.insert(self.varied.name.clone(), v);
                p
            })
            .collect();
        for axis in &self.extra_axes {
            let values = linspace_variants(&axis.range, axis.count)?;
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.insert(axis.range.name.clone(), v);
                        q
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteScenario {
    pub id: String,
    pub logical: String,
    pub template: Template,
    pub params: BTreeMap<String, f64>,
    pub network: RoadNetwork,
    pub route: ResolvedRoute,
    pub warnings: Vec<String>,
}

/// One expansion slot: the parameters always, the scenario unless its
/// generation failed.
#[derive(Debug)]
pub struct Variant {
    pub id: String,
    pub params: BTreeMap<String, f64>,
    pub outcome: Result<ConcreteScenario, RoadgenError>,
}

pub fn variant_id(logical: &str, index: usize) -> String {
    format!("{logical}-{index:04}")
}

/// Builds one concrete scenario from a complete parameter map.
pub fn instantiate(
    id: &str,
    logical: &str,
    template: Template,
    params: &BTreeMap<String, f64>,
    route: &RouteSpec,
) -> Result<ConcreteScenario, RoadgenError> {
    let Generated { network, warnings } = template.build(params)?;
    let route = route.resolve(&network)?;
    Ok(ConcreteScenario {
        id: id.into(),
        logical: logical.into(),
        template,
        params: params.clone(),
        network,
        route,
        warnings,
    })
}

impl Template {
    /// Template whose networks are the mirror images of this one's.
    pub fn mirrored(self) -> Template {
        match self {
            Template::CurvedLeft => Template::CurvedRight,
            Template::CurvedRight => Template::CurvedLeft,
            Template::TJunctionLeft => Template::TJunctionRight,
            Template::TJunctionRight => Template::TJunctionLeft,
            Template::Complex => Template::Complex,
        }
    }
}

/// Mirror image across the x-axis. Traffic switches sides, so the ego keeps
/// driving in the same direction along each road on the lane with the
/// opposite id.
pub fn mirror_scenario(cs: &ConcreteScenario) -> ConcreteScenario {
    let rule = cs.network.roads.first().map(|r| r.rule).unwrap_or_default().flipped();
    let flip = |p: &LanePosition| LanePosition { lane: -p.lane, ..p.clone() };
    ConcreteScenario {
        id: format!("{}-mirror", cs.id),
        logical: cs.logical.clone(),
        template: cs.template.mirrored(),
        params: cs.params.clone(),
        network: cs.network.reflected().with_traffic_rule(rule),
        route: ResolvedRoute { start: flip(&cs.route.start), target: flip(&cs.route.target) },
        warnings: cs.warnings.clone(),
    }
}

/// Expands every variant. A variant whose generation fails carries the
/// error; the others are unaffected.
pub fn expand_logical(ls: &LogicalScenario) -> Result<Vec<Variant>, RoadgenError> {
    let params = ls.variant_params()?;
    Ok(params
        .into_par_iter()
        .enumerate()
        .map(|(i, p)| {
            let id = variant_id(&ls.name, i);
            let outcome = instantiate(&id, &ls.name, ls.template, &p, &ls.route);
            Variant { id, params: p, outcome }
        })
        .collect())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DefinitionFile {
    name: String,
    template: Template,
    variants: usize,
    varied: ParamRange,
    #[serde(default)]
    fixed: BTreeMap<String, f64>,
    route: Option<RouteFile>,
    #[serde(default)]
    cartesian: bool,
    #[serde(default)]
    extra_axes: Vec<AxisFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteFile {
    start: PointFile,
    target: PointFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointFile {
    road: String,
    lane: i32,
    s: Option<f64>,
    s_from_end: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisFile {
    name: String,
    min: f64,
    max: f64,
    unit: Unit,
    variants: usize,
}

impl PointFile {
    fn into_point(self) -> Result<RoutePoint, RoadgenError> {
        let station = match (self.s, self.s_from_end) {
            (Some(s), None) => Station::FromStart(s),
            (None, Some(d)) => Station::FromEnd(d),
            _ => return Err(RoadgenError::Definition(format!("route point on road {} needs exactly one of s, s_from_end", self.road))),
        };
        Ok(RoutePoint { road: self.road, lane: self.lane, station })
    }
}

/// Parses one logical-scenario definition (TOML).
pub fn parse_definition(text: &str) -> Result<LogicalScenario, RoadgenError> {
    let file: DefinitionFile = toml::from_str(text).map_err(|e| RoadgenError::Definition(e.to_string()))?;
    if !file.cartesian && !file.extra_axes.is_empty() {
        return Err(RoadgenError::Definition("extra_axes requires cartesian = true".into()));
    }
    let route = match file.route {
        Some(r) => RouteSpec { start: r.start.into_point()?, target: r.target.into_point()? },
        None => file.template.default_route(),
    };
    let ls = LogicalScenario {
        name: file.name,
        template: file.template,
        varied: file.varied,
        fixed: file.fixed,
        variant_count: file.variants,
        route,
        extra_axes: file
            .extra_axes
            .into_iter()
            .map(|a| Axis { range: ParamRange::new(a.name, a.min, a.max, a.unit), count: a.variants })
            .collect(),
    };
    ls.validate()?;
    Ok(ls)
}

/// Reads every `*.toml` definition in `dir`, sorted by file name. Names must
/// be unique across files.
pub fn load_definitions(dir: &Path) -> Result<Vec<LogicalScenario>, RoadgenError> {
    let pattern = dir.join("*.toml");
    let paths = glob::glob(&pattern.to_string_lossy()).map_err(|e| RoadgenError::Definition(e.to_string()))?;
    let mut paths: Vec<PathBuf> = paths.filter_map(Result::ok).collect();
    paths.sort();
    let mut out: Vec<LogicalScenario> = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|source| RoadgenError::Io { path: path.clone(), source })?;
        let ls = parse_definition(&text).map_err(|e| RoadgenError::File { path: path.clone(), source: Box::new(e) })?;
        if out.iter().any(|o| o.name == ls.name) {
            return Err(RoadgenError::File {
                path,
                source: Box::new(RoadgenError::Definition(format!("duplicate logical scenario name '{}'", ls.name))),
            });
        }
        out.push(ls);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::validate_network;

    #[test]
    fn linspace_examples() {
        let r = ParamRange::new("lane_width", 3.0, 4.0, Unit::M);
        assert_eq!(linspace_variants(&r, 5).unwrap(), vec![3.0, 3.25, 3.5, 3.75, 4.0]);
        let r = ParamRange::new("angle", 35.0, 135.0, Unit::Deg);
        assert_eq!(linspace_variants(&r, 3).unwrap(), vec![35.0, 85.0, 135.0]);
        assert_eq!(linspace_variants(&r, 1).unwrap(), vec![85.0]);
        let r = ParamRange::new("gap", 5.0, 5.0, Unit::M);
        assert_eq!(linspace_variants(&r, 4).unwrap(), vec![5.0; 4]);
        assert!(matches!(linspace_variants(&r, 0), Err(RoadgenError::InvalidCount)));
        let bad = ParamRange::new("gap", 6.0, 5.0, Unit::M);
        assert!(linspace_variants(&bad, 2).is_err());
    }

    #[test]
    fn expands_lane_width_sweep() {
        let ls = LogicalScenario::new("cl-w", Template::CurvedLeft, ParamRange::new("lane_width", 3.4, 4.5, Unit::M), 12)
            .with_fixed("radius", 150.0);
        let vs = expand_logical(&ls).unwrap();
        assert_eq!(vs.len(), 12);
        assert_eq!(vs[0].id, "cl-w-0000");
        assert_eq!(vs[11].id, "cl-w-0011");
        for v in &vs {
            let cs = v.outcome.as_ref().unwrap();
            assert_eq!(cs.params["radius"], 150.0);
            assert!((3.4..=4.5).contains(&cs.params["lane_width"]));
            assert!(validate_network(&cs.network).is_valid());
        }
    }

    #[test]
    fn gap_sweep_values() {
        let ls = LogicalScenario::new("tj-gap", Template::TJunctionLeft, ParamRange::new("gap", 5.0, 30.0, Unit::M), 6);
        let gaps: Vec<f64> = expand_logical(&ls).unwrap().iter().map(|v| v.params["gap"]).collect();
        assert_eq!(gaps, vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
    }

    #[test]
    fn failed_variant_does_not_abort() {
        let ls = LogicalScenario::new("cl-r", Template::CurvedLeft, ParamRange::new("radius", 2.0, 102.0, Unit::M), 3);
        let vs = expand_logical(&ls).unwrap();
        assert!(matches!(vs[0].outcome, Err(RoadgenError::Road(RoadError::DegenerateGeometry(_)))));
        assert!(vs[1].outcome.is_ok() && vs[2].outcome.is_ok());
    }

    #[test]
    fn rejects_bad_definitions() {
        let base = LogicalScenario::new("x", Template::CurvedLeft, ParamRange::new("radius", 50.0, 500.0, Unit::M), 3);
        assert!(matches!(base.clone().with_fixed("radius", 1.0).validate(), Err(RoadgenError::VariedAndFixed(_))));
        assert!(matches!(base.clone().with_fixed("gap", 1.0).validate(), Err(RoadgenError::UnknownParameter { .. })));
        let mut wrong_unit = base.clone();
        wrong_unit.varied.unit = Unit::Deg;
        assert!(matches!(wrong_unit.validate(), Err(RoadgenError::UnitMismatch { .. })));
    }

    #[test]
    fn parses_definition_file() {
        let text = r#"
name = "curved-left-radius"
template = "curved_left"
variants = 4

[varied]
name = "radius"
min = 50.0
max = 500.0
unit = "m"

[fixed]
lane_width = 3.75

[route.start]
road = "1"
lane = -1
s = 5.0

[route.target]
road = "1"
lane = -1
s_from_end = 10.0
"#;
        let ls = parse_definition(text).unwrap();
        assert_eq!(ls.template, Template::CurvedLeft);
        assert_eq!(ls.fixed["lane_width"], 3.75);
        assert_eq!(ls.route, Template::CurvedLeft.default_route());
        let vs = expand_logical(&ls).unwrap();
        let cs = vs[0].outcome.as_ref().unwrap();
        assert_eq!(cs.route.start.s, 5.0);
        assert!((cs.route.target.s - (cs.network.roads[0].length() - 10.0)).abs() < 1e-12);

        assert!(parse_definition(&text.replace("variants = 4", "variants = 4\nbogus = 1")).is_err());
        assert!(parse_definition(&text.replace("s = 5.0", "s = 5.0\ns_from_end = 1.0")).is_err());
    }

    #[test]
    fn cartesian_axes_multiply() {
        let mut ls = LogicalScenario::new("grid", Template::CurvedLeft, ParamRange::new("radius", 50.0, 500.0, Unit::M), 3);
        ls.extra_axes.push(Axis { range: ParamRange::new("lane_width", 3.5, 4.0, Unit::M), count: 2 });
        let ps = ls.variant_params().unwrap();
        assert_eq!(ps.len(), 6);
        assert_eq!((ps[1]["radius"], ps[1]["lane_width"]), (50.0, 4.0));
        assert_eq!(ls.total_variants(), 6);
    }

    #[test]
    fn default_routes_resolve_on_every_template() {
        for t in [Template::CurvedLeft, Template::CurvedRight, Template::TJunctionLeft, Template::TJunctionRight, Template::Complex] {
            let g = t.build(&t.default_params()).unwrap();
            t.default_route().resolve(&g.network).unwrap();
        }
    }
}
