//! KPIs over simulated trajectories, ride-comfort RMS, per-template
//! aggregates and the radius analyses of curved-road sweeps.

mod signal;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::road::Vec2;
use crate::roadgen::{Family, Template};
use crate::sim::{SimStatus, TrajectorySample};

pub use signal::{bandpass, derive_signals, differentiate, rms, sample_dt, smooth3, BandPass, Biquad, Signals, BAND_HI, BAND_LO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("need at least {needed} samples, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("samples are not evenly spaced (at index {index})")]
    NonUniform { index: usize },
    #[error("sampling rate {fs} Hz must exceed {} Hz", 2.0 * f_hi)]
    SampleRate { fs: f64, f_hi: f64 },
    #[error("window [{t0}, {tf}] s is empty or outside the signal span [0, {span}] s")]
    InvalidWindow { t0: f64, tf: f64, span: f64 },
    #[error("reference value must be positive, got {0}")]
    InvalidReference(f64),
    #[error("{0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpiRefs {
    pub a_long_ref: f64,
    pub a_decel_ref: f64,
    pub a_lat_ref: f64,
    pub jerk_long_ref: f64,
    pub jerk_lat_ref: f64,
    pub d_target_ref: f64,
    /// Half the lane width when unset.
    pub lane_dev_ref: Option<f64>,
    pub osc_rms_ref: f64,
}

impl Default for KpiRefs {
    fn default() -> Self {
        KpiRefs {
            a_long_ref: 2.0,
            a_decel_ref: 3.5,
            a_lat_ref: 3.0,
            jerk_long_ref: 5.0,
            jerk_lat_ref: 5.0,
            d_target_ref: 5.0,
            lane_dev_ref: None,
            osc_rms_ref: 0.315,
        }
    }
}

impl KpiRefs {
    pub fn check(&self) -> Result<(), EvalError> {
        let all = [self.a_long_ref, self.a_decel_ref, self.a_lat_ref, self.jerk_long_ref, self.jerk_lat_ref, self.d_target_ref, self.osc_rms_ref];
        for r in all.into_iter().chain(self.lane_dev_ref) {
            if !(r > 0.0 && r.is_finite()) {
                return Err(EvalError::InvalidReference(r));
            }
        }
        Ok(())
    }
}

/// clamp(1 − peak/ref, 0, 1)
pub fn normalize_kpi(peak: f64, reference: f64) -> Result<f64, EvalError> {
    if !(reference > 0.0 && reference.is_finite()) {
        return Err(EvalError::InvalidReference(reference));
    }
    if !(peak >= 0.0) {
        return Err(EvalError::InvalidParameter(format!("peak {peak} is negative")));
    }
    Ok((1.0 - peak / reference).clamp(0.0, 1.0))
}

/// Perception of whole-body vibration by RMS acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComfortClass {
    #[serde(rename = "not uncomfortable")]
    NotUncomfortable,
    #[serde(rename = "a little uncomfortable")]
    ALittleUncomfortable,
    #[serde(rename = "fairly uncomfortable")]
    FairlyUncomfortable,
    #[serde(rename = "uncomfortable")]
    Uncomfortable,
    #[serde(rename = "very uncomfortable")]
    VeryUncomfortable,
    #[serde(rename = "extremely uncomfortable")]
    ExtremelyUncomfortable,
}

/// (lower, upper) band in m/s² per class, best first. Bands overlap.
pub const COMFORT_BANDS: [(f64, f64, ComfortClass); 6] = [
    (0.0, 0.314, ComfortClass::NotUncomfortable),
    (0.315, 0.63, ComfortClass::ALittleUncomfortable),
    (0.5, 1.0, ComfortClass::FairlyUncomfortable),
    (0.8, 1.6, ComfortClass::Uncomfortable),
    (1.25, 2.5, ComfortClass::VeryUncomfortable),
    (2.0, f64::INFINITY, ComfortClass::ExtremelyUncomfortable),
];

impl ComfortClass {
    pub fn label(self) -> &'static str {
        match self {
            ComfortClass::NotUncomfortable => "not uncomfortable",
            ComfortClass::ALittleUncomfortable => "a little uncomfortable",
            ComfortClass::FairlyUncomfortable => "fairly uncomfortable",
            ComfortClass::Uncomfortable => "uncomfortable",
            ComfortClass::VeryUncomfortable => "very uncomfortable",
            ComfortClass::ExtremelyUncomfortable => "extremely uncomfortable",
        }
    }
}

/// Where bands overlap the worse class wins, so the class is the worst one
/// whose band has started.
pub fn comfort_class(rms_value: f64) -> Result<ComfortClass, EvalError> {
    if !(rms_value >= 0.0) {
        return Err(EvalError::InvalidParameter(format!("RMS value {rms_value} is negative")));
    }
    Ok(COMFORT_BANDS.iter().rev().find(|(lo, _, _)| rms_value >= *lo).map(|b| b.2).unwrap_or(ComfortClass::NotUncomfortable))
}

pub const KPI_AXES: [&str; 8] =
    ["long_accel", "long_decel", "lat_accel", "long_jerk", "lat_jerk", "distance_target", "lane_keeping", "oscillation"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiVector {
    pub long_accel: f64,
    pub long_decel: f64,
    pub lat_accel: f64,
    pub long_jerk: f64,
    pub lat_jerk: f64,
    pub distance_target: f64,
    pub lane_keeping: f64,
    pub oscillation: f64,
    pub comfort_rms: f64,
    pub comfort_class: ComfortClass,
}

impl KpiVector {
    /// The eight scores in `KPI_AXES` order.
    pub fn scores(&self) -> [f64; 8] {
        [
            self.long_accel,
            self.long_decel,
            self.lat_accel,
            self.long_jerk,
            self.lat_jerk,
            self.distance_target,
            self.lane_keeping,
            self.oscillation,
        ]
    }

    /// Mean of the five acceleration and jerk scores.
    pub fn dynamic_mean(&self) -> f64 {
        self.scores()[..5].iter().sum::<f64>() / 5.0
    }

    pub fn mean(&self) -> f64 {
        self.scores().iter().sum::<f64>() / 8.0
    }
}

fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn compute_kpis(traj: &[TrajectorySample], refs: &KpiRefs, target: Vec2, lane_width: f64) -> Result<KpiVector, EvalError> {
    refs.check()?;
    let dt = sample_dt(traj)?;
    let sig = derive_signals(traj, dt)?;
    let accel = sig.a_long.iter().fold(0.0f64, |m, a| m.max(*a));
    let decel = sig.a_long.iter().fold(0.0f64, |m, a| m.max(-*a));
    let last = traj[traj.len() - 1];
    let gap = target.distance(Vec2::new(last.x, last.y));
    let lane_ref = refs.lane_dev_ref.unwrap_or(0.5 * lane_width);
    let dev = traj.iter().fold(0.0f64, |m, p| m.max(p.lane_dev.abs()));
    let filtered = bandpass(&sig.a_long, 1.0 / dt)?;
    let comfort_rms = rms(&filtered, dt, 0.0, dt * (traj.len() - 1) as f64)?;
    Ok(KpiVector {
        long_accel: normalize_kpi(accel, refs.a_long_ref)?,
        long_decel: normalize_kpi(decel, refs.a_decel_ref)?,
        lat_accel: normalize_kpi(peak(&sig.a_lat), refs.a_lat_ref)?,
        long_jerk: normalize_kpi(peak(&sig.j_long), refs.jerk_long_ref)?,
        lat_jerk: normalize_kpi(peak(&sig.j_lat), refs.jerk_lat_ref)?,
        distance_target: normalize_kpi(gap, refs.d_target_ref)?,
        lane_keeping: normalize_kpi(dev, lane_ref)?,
        oscillation: normalize_kpi(comfort_rms, refs.osc_rms_ref)?,
        comfort_rms,
        comfort_class: comfort_class(comfort_rms)?,
    })
}

/// What the aggregation needs from one simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub id: String,
    pub template: Template,
    pub success: bool,
    pub kpi: Option<KpiVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateAggregate {
    pub family: Family,
    pub count: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean scores over successful runs in `KPI_AXES` order; `None` without
    /// a successful run.
    pub mean_scores: Option<[f64; 8]>,
    pub mean_comfort_rms: Option<f64>,
}

impl TemplateAggregate {
    pub fn mean_kpi(&self) -> Option<f64> {
        self.mean_scores.map(|s| s.iter().sum::<f64>() / 8.0)
    }
}

/// Groups by template family in `Family::ALL` order. Families without runs
/// are left out.
pub fn aggregate_by_template(runs: &[RunSummary]) -> Vec<TemplateAggregate> {
    let mut out = Vec::new();
    for family in Family::ALL {
        let group: Vec<&RunSummary> = runs.iter().filter(|r| r.template.family() == family).collect();
        if group.is_empty() {
            continue;
        }
        let successes = group.iter().filter(|r| r.success).count();
        // summed in id order so the means do not depend on input order
        let mut keyed: Vec<(&str, &KpiVector)> =
            group.iter().filter(|r| r.success).filter_map(|r| r.kpi.as_ref().map(|k| (r.id.as_str(), k))).collect();
        keyed.sort_by(|a, b| a.0.cmp(b.0));
        let sorted: Vec<&KpiVector> = keyed.into_iter().map(|k| k.1).collect();
        let (mean_scores, mean_comfort_rms) = if sorted.is_empty() {
            (None, None)
        } else {
            let n = sorted.len() as f64;
            let mut m = [0.0; 8];
            for k in &sorted {
                for (acc, s) in m.iter_mut().zip(k.scores()) {
                    *acc += s;
                }
            }
            for v in &mut m {
                *v /= n;
            }
            (Some(m), Some(sorted.iter().map(|k| k.comfort_rms).sum::<f64>() / n))
        };
        out.push(TemplateAggregate {
            family,
            count: group.len(),
            successes,
            success_rate: successes as f64 / group.len() as f64,
            mean_scores,
            mean_comfort_rms,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRadius {
    pub lane_width: f64,
    /// Largest failing radius with only successes above it.
    pub critical: Option<f64>,
    /// Smallest radius above `critical`, if any was run.
    pub first_success: Option<f64>,
    /// False when a success occurs below `critical`.
    pub monotone: bool,
}

/// Per lane width (ascending), the radius below which runs fail.
pub fn critical_radius(sweep: &[(f64, f64, SimStatus)]) -> Vec<CriticalRadius> {
    let mut by_width: BTreeMap<u64, (f64, Vec<(f64, bool)>)> = BTreeMap::new();
    for &(radius, width, status) in sweep {
        // order-preserving key for non-negative floats
        by_width.entry(width.to_bits()).or_insert_with(|| (width, Vec::new())).1.push((radius, status == SimStatus::Success));
    }
    let mut out: Vec<CriticalRadius> = by_width
        .into_values()
        .map(|(lane_width, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let critical = pts.iter().rev().find(|p| !p.1).map(|p| p.0);
            let (first_success, monotone) = match critical {
                None => (None, true),
                Some(c) => (pts.iter().find(|p| p.0 > c).map(|p| p.0), !pts.iter().any(|p| p.1 && p.0 < c)),
            };
            CriticalRadius { lane_width, critical, first_success, monotone }
        })
        .collect();
    out.sort_by(|a, b| a.lane_width.total_cmp(&b.lane_width));
    out
}

/// Ranks from 1, ties sharing their mean rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Rank correlation of radius against mean dynamic KPI over (radius, KPI)
/// points of successful runs.
pub fn kpi_radius_trend(points: &[(f64, f64)]) -> Result<f64, EvalError> {
    if points.len() < 5 {
        return Err(EvalError::InsufficientData { needed: 5, found: points.len() });
    }
    let (r, k): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    Ok(spearman(&r, &k))
}
