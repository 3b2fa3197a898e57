//! The campaign driver: scenario database generation, batch simulation,
//! evaluation and reporting over a file-per-scenario layout.

mod db;
mod report;
mod stages;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::KpiRefs;
use crate::lanelet::GeoOrigin;
use crate::roadgen::RoadgenError;
use crate::sim::{AdfParams, VehicleParams, DEFAULT_DT};

pub use db::{
    read_json, write_atomic, Database, KpiRecord, Manifest, ManifestEntry, ResultRecord, RunStatus, ScenarioRecord, Summary,
    TemplateCritical, TrendEntry, KPI_JSON, MANIFEST_FILE, MAP_OSM, MAP_XODR, PARAMS_JSON, RESULT_JSON, SCENARIO_XOSC, SUMMARY_FILE,
    TRAJECTORY_CSV,
};
pub use report::{render_report, render_spider, spider_point, REPORT_FILE, SPIDER_CENTER, SPIDER_FILE, SPIDER_RADIUS};
pub use stages::{evaluate, generate, report, simulate, verify, GenerateReport, IdFilter, SimulateReport};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("config {}: {message}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<default>".into()))]
    Config { path: Option<PathBuf>, message: String },
    #[error(transparent)]
    Definitions(#[from] RoadgenError),
    #[error("no logical scenarios found in {}", .0.display())]
    NoScenarios(PathBuf),
    #[error("no scenario could be generated")]
    NothingGenerated,
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid --filter pattern: {0}")]
    Filter(#[from] glob::PatternError),
    #[error("database at {} is inconsistent: {} problem(s)", root.display(), problems.len())]
    Inconsistent { root: PathBuf, problems: Vec<String> },
}

impl OrchestratorError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        OrchestratorError::Io { path: path.to_path_buf(), source }
    }

    /// Usage and configuration problems as opposed to stage failures.
    pub fn is_config(&self) -> bool {
        matches!(self, OrchestratorError::Config { .. } | OrchestratorError::Filter(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolkitConfig {
    /// Simulation step (s).
    pub dt: f64,
    pub attempt_limit: u32,
    /// Simulated seconds per attempt.
    pub timeout: f64,
    /// Worker threads; 0 means one per core.
    pub parallel: usize,
    /// Database root used when no `--db` is given.
    pub output: Option<PathBuf>,
    pub origin: GeoOrigin,
    pub vehicle: VehicleParams,
    pub adf: AdfParams,
    pub kpi: KpiRefs,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        ToolkitConfig {
            dt: DEFAULT_DT,
            attempt_limit: 3,
            timeout: 180.0,
            parallel: 0,
            output: None,
            origin: GeoOrigin::default(),
            vehicle: VehicleParams::default(),
            adf: AdfParams::default(),
            kpi: KpiRefs::default(),
        }
    }
}

impl ToolkitConfig {
    pub fn check(&self) -> Result<(), String> {
        // the comfort band-pass needs more than 64 Hz
        if !(self.dt > 0.0 && self.dt < 1.0 / (2.0 * crate::eval::BAND_HI)) {
            return Err(format!("dt = {} s; it must be positive and below {} s", self.dt, 1.0 / (2.0 * crate::eval::BAND_HI)));
        }
        if self.attempt_limit == 0 {
            return Err("attempt_limit must be at least 1".into());
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err("timeout must be positive".into());
        }
        if !(self.origin.lat.abs() < 90.0 && self.origin.lon.abs() <= 180.0) {
            return Err("origin must be a valid latitude/longitude".into());
        }
        self.vehicle.check().map_err(|e| format!("[vehicle] {e}"))?;
        self.adf.check().map_err(|e| format!("[adf] {e}"))?;
        self.kpi.check().map_err(|e| format!("[kpi] {e}"))?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, OrchestratorError> {
        let cfg: ToolkitConfig = toml::from_str(text).map_err(|e| OrchestratorError::Config { path: None, message: e.to_string() })?;
        cfg.check().map_err(|message| OrchestratorError::Config { path: None, message })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(|e| OrchestratorError::Config { path: Some(path.into()), message: e.to_string() })?;
        Self::parse(&text).map_err(|e| match e {
            OrchestratorError::Config { message, .. } => OrchestratorError::Config { path: Some(path.into()), message },
            other => other,
        })
    }

    /// Thread pool honouring `parallel`.
    pub fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(self.parallel).build().expect("thread pool")
    }
}
