use super::AdfParams;

/// Desired speed at every path sample: curve-speed limit, then a backward
/// pass ending at standstill under `comfort_decel`, then a forward pass
/// from `v0` under `comfort_accel`.
pub fn speed_profile(s: &[f64], curvature: &[f64], adf: &AdfParams, v0: f64) -> Vec<f64> {
    let n = s.len();
    let mut v: Vec<f64> = curvature
        .iter()
        .map(|k| {
            let k = k.abs();
            if k > 0.0 {
                adf.cruise_speed.min((adf.lat_accel_limit / k).sqrt())
            } else {
                adf.cruise_speed
            }
        })
        .collect();
    if n == 0 {
        return v;
    }
    v[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        let ds = s[i + 1] - s[i];
        v[i] = v[i].min((v[i + 1] * v[i + 1] + 2.0 * adf.comfort_decel * ds).sqrt());
    }
    v[0] = v[0].min(v0);
    for i in 0..n - 1 {
        let ds = s[i + 1] - s[i];
        v[i + 1] = v[i + 1].min((v[i] * v[i] + 2.0 * adf.comfort_accel * ds).sqrt());
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn stations(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 * 0.5).collect()
    }

    #[test]
    fn straight_cruise_with_terminal_ramp() {
        let adf = AdfParams::default();
        let s = stations(2001);
        let v = speed_profile(&s, &vec![0.0; s.len()], &adf, adf.cruise_speed);
        assert_eq!(v[0], adf.cruise_speed);
        assert_eq!(v[1000], adf.cruise_speed);
        assert_eq!(*v.last().unwrap(), 0.0);
        // braking distance v²/2a before the end
        let brake = adf.cruise_speed.powi(2) / (2.0 * adf.comfort_decel);
        let i = ((1000.0 - brake) / 0.5) as usize - 1;
        assert_eq!(v[i], adf.cruise_speed);
        assert!(v[i + 3] < adf.cruise_speed);
    }

    #[test]
    fn curve_speed_formula() {
        let adf = AdfParams { lat_accel_limit: 3.0, cruise_speed: 20.0, ..Default::default() };
        let s = stations(2001);
        let v = speed_profile(&s, &vec![0.01; s.len()], &adf, 20.0);
        assert_abs_diff_eq!(v[1000], 300f64.sqrt(), epsilon = 1e-12);
        let adf = AdfParams { lat_accel_limit: 3.0, ..Default::default() };
        let v = speed_profile(&s, &vec![0.01; s.len()], &adf, 20.0);
        assert_eq!(v[1000], adf.cruise_speed);
    }

    #[test]
    fn respects_acceleration_bound_everywhere() {
        let adf = AdfParams::default();
        let s = stations(3001);
        let k: Vec<f64> = s.iter().map(|x| 0.05 * (x / 40.0).sin().powi(3)).collect();
        let v = speed_profile(&s, &k, &adf, 0.0);
        for i in 0..s.len() - 1 {
            let ds = s[i + 1] - s[i];
            assert!(v[i + 1].powi(2) - v[i].powi(2) <= 2.0 * adf.comfort_accel * ds * (1.0 + 1e-12));
            assert!(v[i].powi(2) - v[i + 1].powi(2) <= 2.0 * adf.comfort_decel * ds * (1.0 + 1e-12));
        }
    }
}
