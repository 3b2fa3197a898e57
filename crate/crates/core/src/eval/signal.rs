use num_complex::Complex64;
use std::f64::consts::PI;

use super::EvalError;
use crate::sim::TrajectorySample;

/// Relative tolerance on sample spacing.
const SPACING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Signals {
    pub a_long: Vec<f64>,
    pub a_lat: Vec<f64>,
    pub j_long: Vec<f64>,
    pub j_lat: Vec<f64>,
}

/// Sample spacing of a trajectory, checked to be uniform.
pub fn sample_dt(traj: &[TrajectorySample]) -> Result<f64, EvalError> {
    if traj.len() < 3 {
        return Err(EvalError::InsufficientData { needed: 3, found: traj.len() });
    }
    let dt = traj[1].t - traj[0].t;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EvalError::NonUniform { index: 1 });
    }
    for (i, w) in traj.windows(2).enumerate() {
        if ((w[1].t - w[0].t) - dt).abs() > SPACING_TOL * dt {
            return Err(EvalError::NonUniform { index: i + 1 });
        }
    }
    Ok(dt)
}

/// Accelerations from the recorded channels, jerks by central differences
/// followed by a 3-point moving average.
pub fn derive_signals(traj: &[TrajectorySample], dt: f64) -> Result<Signals, EvalError> {
    if traj.len() < 3 {
        return Err(EvalError::InsufficientData { needed: 3, found: traj.len() });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EvalError::InvalidParameter(format!("sample spacing {dt}")));
    }
    let a_long: Vec<f64> = traj.iter().map(|p| p.a_long).collect();
    let a_lat: Vec<f64> = traj.iter().map(|p| p.a_lat).collect();
    let j_long = smooth3(&differentiate(&a_long, dt));
    let j_lat = smooth3(&differentiate(&a_lat, dt));
    Ok(Signals { a_long, a_lat, j_long, j_lat })
}

/// Central differences inside, one-sided at both ends. Needs n ≥ 2.
pub fn differentiate(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    d[0] = (x[1] - x[0]) / dt;
    d[n - 1] = (x[n - 1] - x[n - 2]) / dt;
    for i in 1..n - 1 {
        d[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
    }
    d
}

/// 3-point moving average; the two end samples are kept.
pub fn smooth3(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    for i in 1..x.len().saturating_sub(1) {
        out[i] = (x[i - 1] + x[i] + x[i + 1]) / 3.0;
    }
    out
}

/// Second-order section, `a[0]` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (self.a[0] + self.a[1] * z1 + self.a[2] * z2)
    }

    /// Transposed direct form II state after a long run of unit input.
    fn step_state(&self) -> [f64; 2] {
        let y = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[1] + self.a[2]);
        let z2 = self.b[2] - self.a[2] * y;
        let z1 = self.b[1] - self.a[1] * y + z2;
        [z1, z2]
    }
}

/// Band-pass made of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPass {
    pub sections: Vec<Biquad>,
    pub fs: f64,
}

pub const BAND_LO: f64 = 1.0;
pub const BAND_HI: f64 = 32.0;
/// Order of the low-pass prototype; the band-pass has twice as many poles.
const PROTOTYPE_ORDER: usize = 2;

impl BandPass {
    /// Butterworth band-pass by the bilinear transform with prewarped edges,
    /// unit gain at the geometric centre.
    pub fn butterworth(fs: f64, f_lo: f64, f_hi: f64) -> Result<Self, EvalError> {
        if !(fs.is_finite() && fs > 2.0 * f_hi) {
            return Err(EvalError::SampleRate { fs, f_hi });
        }
        if !(f_lo > 0.0 && f_lo < f_hi) {
            return Err(EvalError::InvalidParameter(format!("band {f_lo}..{f_hi} Hz")));
        }
        let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
        let (w_lo, w_hi) = (warp(f_lo), warp(f_hi));
        let bw = w_hi - w_lo;
        let w0_sq = w_lo * w_hi;
        let n = PROTOTYPE_ORDER;
        let mut sections = Vec::new();
        // prototype poles in the upper half plane; their conjugates give the
        // other halves of each section
        for k in 0..n / 2 {
            let p = Complex64::from_polar(1.0, PI * (2 * k + n + 1) as f64 / (2 * n) as f64);
            let half = p * bw / 2.0;
            let root = (half * half - w0_sq).sqrt();
            for s in [half + root, half - root] {
                let z = (2.0 * fs + s) / (2.0 * fs - s);
                sections.push(Biquad { b: [1.0, 0.0, -1.0], a: [1.0, -2.0 * z.re, z.norm_sqr()] });
            }
        }
        let omega0 = 2.0 * (w0_sq.sqrt() / (2.0 * fs)).atan();
        for sec in &mut sections {
            let g = sec.response(omega0).norm();
            for b in &mut sec.b {
                *b /= g;
            }
        }
        Ok(BandPass { sections, fs })
    }

    pub fn response(&self, f: f64) -> Complex64 {
        let omega = 2.0 * PI * f / self.fs;
        self.sections.iter().map(|s| s.response(omega)).product()
    }

    /// One causal pass; the state starts as if `x[0]` had been applied forever.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let Some(&first) = x.first() else { return y };
        let mut level = first;
        for sec in &self.sections {
            let [z1, z2] = sec.step_state();
            let (mut z1, mut z2) = (z1 * level, z2 * level);
            let dc = (sec.b[0] + sec.b[1] + sec.b[2]) / (1.0 + sec.a[1] + sec.a[2]);
            for v in y.iter_mut() {
                let inp = *v;
                let out = sec.b[0] * inp + z1;
                z1 = sec.b[1] * inp - sec.a[1] * out + z2;
                z2 = sec.b[2] * inp - sec.a[2] * out;
                *v = out;
            }
            level *= dc;
        }
        y
    }

    /// Forward-backward filtering with odd extension at both ends.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return vec![0.0; n];
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

/// Zero-phase 1–32 Hz band-pass of a signal sampled at `fs`.
pub fn bandpass(signal: &[f64], fs: f64) -> Result<Vec<f64>, EvalError> {
    Ok(BandPass::butterworth(fs, BAND_LO, BAND_HI)?.filtfilt(signal))
}

/// sqrt(∫ ã² dt / (tf − t0)) by the trapezoidal rule; sample i is at time
/// i·dt. Window ends between samples are interpolated linearly.
pub fn rms(signal: &[f64], dt: f64, t0: f64, tf: f64) -> Result<f64, EvalError> {
    let span = dt * signal.len().saturating_sub(1) as f64;
    let eps = 1e-9 * dt;
    if signal.len() < 2 || !(dt > 0.0) || !(t0 < tf) || t0 < -eps || tf > span + eps {
        return Err(EvalError::InvalidWindow { t0, tf, span });
    }
    let (t0, tf) = (t0.max(0.0), tf.min(span));
    let sq = |i: usize| signal[i] * signal[i];
    let first = (t0 / dt).floor() as usize;
    let mut area = 0.0;
    for i in first..signal.len() - 1 {
        let (a, b) = (i as f64 * dt, (i + 1) as f64 * dt);
        if a >= tf {
            break;
        }
        let (u, w) = (a.max(t0), b.min(tf));
        if w <= u {
            continue;
        }
        let at = |t: f64| sq(i) + (sq(i + 1) - sq(i)) * (t - a) / dt;
        area += 0.5 * (w - u) * (at(u) + at(w));
    }
    Ok((area / (tf - t0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derivative_of_ramp_and_constant() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        for d in smooth3(&differentiate(&x, 0.01)) {
            assert_abs_diff_eq!(d, 1.0, epsilon = 1e-9);
        }
        assert!(smooth3(&differentiate(&[2.0; 10], 0.01)).iter().all(|d| *d == 0.0));
    }

    #[test]
    fn sections_are_stable() {
        let bp = BandPass::butterworth(100.0, 1.0, 32.0).unwrap();
        assert_eq!(bp.sections.len(), 2);
        for s in &bp.sections {
            assert!(s.a[2] < 1.0 && s.a[2] > 0.0);
        }
        let warp = |f: f64| 200.0 * (PI * f / 100.0).tan();
        let f0 = 100.0 / PI * ((warp(1.0) * warp(32.0)).sqrt() / 200.0).atan();
        assert_abs_diff_eq!(bp.response(f0).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rate_must_exceed_twice_upper_edge() {
        assert!(matches!(BandPass::butterworth(64.0, 1.0, 32.0), Err(EvalError::SampleRate { .. })));
        assert!(bandpass(&[0.0; 10], 50.0).is_err());
    }

    #[test]
    fn rms_window_checks() {
        assert_eq!(rms(&[1.0; 11], 0.1, 0.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(rms(&[1.0; 11], 0.1, 0.25, 0.55).unwrap(), 1.0, epsilon = 1e-12);
        assert!(rms(&[1.0; 11], 0.1, 0.5, 0.5).is_err());
        assert!(rms(&[1.0; 11], 0.1, 0.0, 1.5).is_err());
        assert!(rms(&[1.0], 0.1, 0.0, 0.0).is_err());
    }
}
