//! Deterministic closed-loop simulation of the reference driving function:
//! lane-level route planning, a curvature-aware speed profile, pure-pursuit
//! steering and a kinematic bicycle model.

mod csv;
mod planner;
mod profile;
mod vehicle;

use serde::{Deserialize, Serialize};

use crate::lanelet::{build_route_graph, to_lanelets, LaneletError, LaneletMap, RouteGraph, CONNECTOR_DS, ROAD_DS};
use crate::openscenario::ScenarioConfig;
use crate::road::{RoadNetwork, Vec2};

pub use csv::{export_csv, parse_csv, CsvError, CSV_HEADER};
pub use planner::{plan_route, shortest_sequence, Path, PlanError, COST_TIE, PATH_DS};
pub use profile::speed_profile;
pub use vehicle::{lookahead, pure_pursuit_steer, step_vehicle, steer_to, VehicleParams, VehicleState};

pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdfParams {
    pub cruise_speed: f64,
    /// Lateral acceleration the speed profile plans curves for.
    pub lat_accel_limit: f64,
    /// Seconds of travel used as pure-pursuit lookahead.
    pub lookahead_gain: f64,
    pub lookahead_min: f64,
    pub lookahead_max: f64,
    pub stop_speed_eps: f64,
    pub arrival_tol: f64,
    pub comfort_accel: f64,
    pub comfort_decel: f64,
    /// Slew limit on the acceleration command (m/s³).
    pub comfort_jerk: f64,
    /// Proportional gain of the speed controller (1/s).
    pub speed_gain: f64,
    /// The speed target is read this many seconds ahead on the profile.
    pub speed_preview_time: f64,
    pub speed_preview_min: f64,
    pub offroad_margin: f64,
    pub stall_window: f64,
    pub stall_distance: f64,
}

impl Default for AdfParams {
    fn default() -> Self {
        AdfParams {
            cruise_speed: 13.89,
            lat_accel_limit: 2.5,
            lookahead_gain: 1.8,
            lookahead_min: 4.0,
            lookahead_max: 15.0,
            stop_speed_eps: 0.1,
            arrival_tol: 2.0,
            comfort_accel: 1.0,
            comfort_decel: 2.0,
            comfort_jerk: 2.5,
            speed_gain: 1.0,
            speed_preview_time: 1.0,
            speed_preview_min: 0.5,
            offroad_margin: 0.2,
            stall_window: 10.0,
            stall_distance: 0.1,
        }
    }
}

impl AdfParams {
    pub fn check(&self) -> Result<(), String> {
        let positive = [
            self.cruise_speed,
            self.lat_accel_limit,
            self.lookahead_gain,
            self.lookahead_min,
            self.lookahead_max,
            self.stop_speed_eps,
            self.arrival_tol,
            self.comfort_accel,
            self.comfort_decel,
            self.comfort_jerk,
            self.speed_gain,
            self.stall_window,
            self.stall_distance,
        ];
        if !positive.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err("driving-function parameters must be positive and finite".into());
        }
        if !(self.speed_preview_time >= 0.0 && self.speed_preview_min >= 0.0 && self.offroad_margin.is_finite()) {
            return Err("speed preview must be non-negative".into());
        }
        if self.lookahead_min > self.lookahead_max {
            return Err("lookahead_min exceeds lookahead_max".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SimStatus {
    Success,
    OffRoad,
    Timeout,
    Stalled,
    PlanningFailed,
}

impl SimStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SimStatus::Success => "Success",
            SimStatus::OffRoad => "OffRoad",
            SimStatus::Timeout => "Timeout",
            SimStatus::Stalled => "Stalled",
            SimStatus::PlanningFailed => "PlanningFailed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub a_long: f64,
    /// v²·κ of the path the vehicle is actually driving (from its steering
    /// angle).
    pub a_lat: f64,
    pub steer: f64,
    pub s: f64,
    pub lane_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub status: SimStatus,
    pub trajectory: Vec<TrajectorySample>,
    pub attempts_used: u32,
    pub failure_detail: Option<String>,
    pub target_point: Option<Vec2>,
}

impl SimResult {
    pub fn final_distance(&self) -> Option<f64> {
        let last = self.trajectory.last()?;
        Some(self.target_point?.distance(Vec2::new(last.x, last.y)))
    }
}

/// Map data a simulation runs on.
#[derive(Debug, Clone)]
pub struct SimWorld {
    pub network: RoadNetwork,
    pub map: LaneletMap,
    pub graph: RouteGraph,
}

impl SimWorld {
    pub fn new(network: RoadNetwork, map: LaneletMap) -> Self {
        let graph = build_route_graph(&map);
        SimWorld { network, map, graph }
    }

    pub fn from_network(network: RoadNetwork) -> Result<Self, LaneletError> {
        let map = to_lanelets(&network, ROAD_DS, CONNECTOR_DS)?;
        Ok(SimWorld::new(network, map))
    }
}

struct Endpoints {
    start: (u64, Vec2),
    target: (u64, Vec2),
}

fn endpoints(world: &SimWorld, cfg: &ScenarioConfig) -> Result<Endpoints, String> {
    let resolve = |p: &crate::roadgen::LanePosition, what: &str| -> Result<(u64, Vec2), String> {
        let road = world.network.road(&p.road).ok_or_else(|| format!("{what} road {} is not in the map", p.road))?;
        let lanelet = world.map.find(&p.road, p.lane).ok_or_else(|| format!("no lanelet for {what} road {} lane {}", p.road, p.lane))?;
        Ok((lanelet, road.lane_center(p.lane, p.s)))
    };
    Ok(Endpoints { start: resolve(&cfg.ego.position, "start")?, target: resolve(&cfg.target, "target")? })
}

/// Plans once, then drives up to `attempt_limit` attempts. Attempt k
/// (from 0) scales the lookahead gain by 1 + 0.1·k. The trajectory of the
/// last attempt is returned.
pub fn run_simulation(world: &SimWorld, cfg: &ScenarioConfig, vp: &VehicleParams, adf: &AdfParams, dt: f64) -> SimResult {
    let planning_failed = |detail: String| SimResult {
        status: SimStatus::PlanningFailed,
        trajectory: vec![],
        attempts_used: 1,
        failure_detail: Some(detail),
        target_point: None,
    };
    let ends = match endpoints(world, cfg) {
        Ok(e) => e,
        Err(d) => return planning_failed(d),
    };
    let path = match plan_route(&world.graph, &world.map, ends.start, ends.target) {
        Ok(p) => p,
        Err(e) => return planning_failed(e.to_string()),
    };
    let profile = speed_profile(&path.s, &path.curvature, adf, cfg.ego.initial_speed);
    let attempts = cfg.attempt_limit.max(1);
    let mut last = None;
    for k in 0..attempts {
        let tuned = AdfParams { lookahead_gain: adf.lookahead_gain * (1.0 + 0.1 * k as f64), ..*adf };
        let (status, trajectory, detail) = drive(&path, &profile, ends.start.1, ends.target.1, cfg, vp, &tuned, dt);
        let done = status == SimStatus::Success;
        last = Some(SimResult {
            status,
            trajectory,
            attempts_used: k + 1,
            failure_detail: detail,
            target_point: Some(ends.target.1),
        });
        if done {
            break;
        }
    }
    last.expect("at least one attempt")
}

fn profile_at(path: &Path, profile: &[f64], s: f64) -> f64 {
    if s >= path.length() {
        return 0.0;
    }
    let i = ((s / PATH_DS).floor().max(0.0) as usize).min(path.len() - 2);
    let f = ((s - path.s[i]) / (path.s[i + 1] - path.s[i])).clamp(0.0, 1.0);
    profile[i] + (profile[i + 1] - profile[i]) * f
}

#[allow(clippy::too_many_arguments)]
fn drive(
    path: &Path,
    profile: &[f64],
    start: Vec2,
    target: Vec2,
    cfg: &ScenarioConfig,
    vp: &VehicleParams,
    adf: &AdfParams,
    dt: f64,
) -> (SimStatus, Vec<TrajectorySample>, Option<String>) {
    let mut state = VehicleState { x: start.x, y: start.y, heading: path.heading[0], v: cfg.ego.initial_speed, ..Default::default() };
    let window = |idx: usize| (idx.saturating_sub(20), idx + 80);
    let (mut s, mut dev) = path.project(start);
    let mut idx = (s / PATH_DS) as usize;
    let mut accel_cmd = 0.0f64;
    let sample = |st: &VehicleState, s: f64, dev: f64| TrajectorySample {
        t: st.t,
        x: st.x,
        y: st.y,
        heading: st.heading,
        v: st.v,
        a_long: st.a,
        a_lat: st.v * st.v * st.steer.tan() / vp.wheelbase,
        steer: st.steer,
        s,
        lane_dev: dev,
    };
    let mut traj = vec![sample(&state, s, dev)];
    let stall_steps = (adf.stall_window / dt).round() as usize;
    let max_steps = (cfg.timeout / dt).ceil() as usize;
    for k in 1..=max_steps {
        let ld = lookahead(state.v, adf);
        let steer_cmd = pure_pursuit_steer(&state, path, s, ld, vp);
        let preview = s + (state.v * adf.speed_preview_time).max(adf.speed_preview_min);
        let v_des = profile_at(path, profile, preview);
        let wanted = adf.speed_gain * (v_des - state.v);
        let slew = adf.comfort_jerk * dt;
        accel_cmd += (wanted - accel_cmd).clamp(-slew, slew);

        state = step_vehicle(&state, steer_cmd, accel_cmd, dt, vp);
        state.t = k as f64 * dt;
        let (lo, hi) = window(idx);
        (s, dev) = path.project_range(state.position(), lo, hi);
        idx = ((s / PATH_DS).max(0.0) as usize).min(path.len() - 1);
        traj.push(sample(&state, s, dev));

        let dist = state.position().distance(target);
        if state.v <= adf.stop_speed_eps && dist <= adf.arrival_tol {
            return (SimStatus::Success, traj, None);
        }
        let allowed = path.half_width_at(s) - 0.5 * vp.width + adf.offroad_margin;
        if dev.abs() > allowed {
            let detail = format!("lane deviation {:.3} m exceeds {:.3} m at s = {:.1} m, t = {:.2} s", dev, allowed, s, state.t);
            return (SimStatus::OffRoad, traj, Some(detail));
        }
        if k >= stall_steps && s - traj[k - stall_steps].s < adf.stall_distance {
            let detail = format!("less than {} m progress in {} s at s = {:.1} m", adf.stall_distance, adf.stall_window, s);
            return (SimStatus::Stalled, traj, Some(detail));
        }
    }
    (SimStatus::Timeout, traj, Some(format!("target not reached within {} s", cfg.timeout)))
}
