use serde::{Deserialize, Serialize};

use super::planner::Path;
use super::AdfParams;
use crate::road::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub width: f64,
    pub max_steer: f64,
    pub max_steer_rate: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub jerk_bound: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams { wheelbase: 2.7, width: 1.8, max_steer: 0.61, max_steer_rate: 0.7, a_min: -3.5, a_max: 2.0, jerk_bound: 5.0 }
    }
}

impl VehicleParams {
    pub fn check(&self) -> Result<(), String> {
        let finite = [self.wheelbase, self.width, self.max_steer, self.max_steer_rate, self.a_min, self.a_max, self.jerk_bound]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err("vehicle parameters must be finite".into());
        }
        if self.wheelbase <= 0.0 || self.width <= 0.0 || self.max_steer <= 0.0 || self.max_steer_rate <= 0.0 || self.jerk_bound <= 0.0 {
            return Err("vehicle dimensions and rate limits must be positive".into());
        }
        if !(self.a_min < 0.0 && 0.0 < self.a_max) {
            return Err("acceleration bounds must satisfy a_min < 0 < a_max".into());
        }
        Ok(())
    }
}

/// Kinematic state at the rear axle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub a: f64,
    pub steer: f64,
}

impl VehicleState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

fn deriv(s: [f64; 4], a: f64, curv: f64) -> [f64; 4] {
    let [_, _, th, v] = s;
    let v_dot = if v <= 0.0 && a < 0.0 { 0.0 } else { a };
    let v = v.max(0.0);
    [v * th.cos(), v * th.sin(), v * curv, v_dot]
}

fn axpy(s: [f64; 4], k: [f64; 4], h: f64) -> [f64; 4] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]]
}

/// Applies actuator limits (steer slew and range, acceleration range and
/// jerk) and integrates the kinematic bicycle over `dt` with RK4. `t` is
/// left to the caller.
pub fn step_vehicle(state: &VehicleState, steer_cmd: f64, accel_cmd: f64, dt: f64, vp: &VehicleParams) -> VehicleState {
    let slew = vp.max_steer_rate * dt;
    let steer = (state.steer + (steer_cmd - state.steer).clamp(-slew, slew)).clamp(-vp.max_steer, vp.max_steer);
    let target_a = accel_cmd.clamp(vp.a_min, vp.a_max);
    let jerk = vp.jerk_bound * dt;
    let mut a = state.a + (target_a - state.a).clamp(-jerk, jerk);

    let curv = steer.tan() / vp.wheelbase;
    let s0 = [state.x, state.y, state.heading, state.v];
    let k1 = deriv(s0, a, curv);
    let k2 = deriv(axpy(s0, k1, 0.5 * dt), a, curv);
    let k3 = deriv(axpy(s0, k2, 0.5 * dt), a, curv);
    let k4 = deriv(axpy(s0, k3, dt), a, curv);
    let mut s = s0;
    for i in 0..4 {
        s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let mut v = s[3];
    if v <= 0.0 {
        v = 0.0;
        if a < 0.0 {
            // standing still: brake pressure no longer produces deceleration
            a = 0.0;
        }
    }
    VehicleState { t: state.t, x: s[0], y: s[1], heading: crate::road::normalize_angle(s[2]), v, a, steer }
}

/// Lookahead distance for the current speed.
pub fn lookahead(v: f64, adf: &AdfParams) -> f64 {
    (adf.lookahead_gain * v).clamp(adf.lookahead_min, adf.lookahead_max)
}

/// Pure-pursuit steering toward the path point `lookahead` meters of arc
/// length beyond `s_proj`.
pub fn pure_pursuit_steer(state: &VehicleState, path: &Path, s_proj: f64, lookahead: f64, vp: &VehicleParams) -> f64 {
    let goal = path.point_at(s_proj + lookahead);
    steer_to(state, goal, lookahead, vp)
}

/// δ = atan(2·L·sin α / L_d) toward `goal`, clamped to the steering range.
pub fn steer_to(state: &VehicleState, goal: Vec2, lookahead: f64, vp: &VehicleParams) -> f64 {
    let alpha = crate::road::normalize_angle((goal - state.position()).angle() - state.heading);
    (2.0 * vp.wheelbase * alpha.sin() / lookahead).atan().clamp(-vp.max_steer, vp.max_steer)
}
