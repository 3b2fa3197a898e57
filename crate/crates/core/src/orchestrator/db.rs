use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::eval::{CriticalRadius, KpiVector, TemplateAggregate};
use crate::roadgen::{ResolvedRoute, Template};
use crate::sim::SimStatus;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MAP_XODR: &str = "map.xodr";
pub const MAP_OSM: &str = "map.osm";
pub const SCENARIO_XOSC: &str = "scenario.xosc";
pub const PARAMS_JSON: &str = "params.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const RESULT_JSON: &str = "result.json";
pub const KPI_JSON: &str = "kpi.json";
pub const SCENARIO_FILES: [&str; 4] = [MAP_XODR, MAP_OSM, SCENARIO_XOSC, PARAMS_JSON];

/// Paths inside a database root.
#[derive(Debug, Clone)]
pub struct Database {
    pub root: PathBuf,
}

impl Database {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Database { root: root.into() }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.root.join(SUMMARY_FILE)
    }

    pub fn scenarios_dir(&self) -> PathBuf {
        self.root.join("scenarios")
    }

    pub fn results_dir(&self) -> PathBuf {
        self.root.join("results")
    }

    pub fn scenario_dir(&self, logical: &str, id: &str) -> PathBuf {
        self.scenarios_dir().join(logical).join(id)
    }

    pub fn result_dir(&self, id: &str) -> PathBuf {
        self.results_dir().join(id)
    }

    pub fn read_manifest(&self) -> Result<Manifest, OrchestratorError> {
        read_json(&self.manifest_path())
    }
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), OrchestratorError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| OrchestratorError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| OrchestratorError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| OrchestratorError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OrchestratorError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| OrchestratorError::Json { path: path.into(), source })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, OrchestratorError> {
    let text = fs::read_to_string(path).map_err(|e| OrchestratorError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| OrchestratorError::Json { path: path.into(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub logical: String,
    pub template: Template,
    pub generated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Every concrete scenario of the campaign in enumeration order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub scenarios: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn generated(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.scenarios.iter().filter(|e| e.generated)
    }
}

/// `params.json` of a concrete scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub id: String,
    pub logical: String,
    pub template: Template,
    pub params: BTreeMap<String, f64>,
    pub route: ResolvedRoute,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RunStatus {
    Success,
    OffRoad,
    Timeout,
    Stalled,
    PlanningFailed,
    /// The scenario files could not be loaded.
    Errored,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Errored => "Errored",
            RunStatus::Success => "Success",
            RunStatus::OffRoad => "OffRoad",
            RunStatus::Timeout => "Timeout",
            RunStatus::Stalled => "Stalled",
            RunStatus::PlanningFailed => "PlanningFailed",
        }
    }

    pub fn sim_status(self) -> Option<SimStatus> {
        Some(match self {
            RunStatus::Success => SimStatus::Success,
            RunStatus::OffRoad => SimStatus::OffRoad,
            RunStatus::Timeout => SimStatus::Timeout,
            RunStatus::Stalled => SimStatus::Stalled,
            RunStatus::PlanningFailed => SimStatus::PlanningFailed,
            RunStatus::Errored => return None,
        })
    }

    /// Whether a trajectory file accompanies the result.
    pub fn has_trajectory(self) -> bool {
        !matches!(self, RunStatus::PlanningFailed | RunStatus::Errored)
    }
}

impl From<SimStatus> for RunStatus {
    fn from(s: SimStatus) -> Self {
        match s {
            SimStatus::Success => RunStatus::Success,
            SimStatus::OffRoad => RunStatus::OffRoad,
            SimStatus::Timeout => RunStatus::Timeout,
            SimStatus::Stalled => RunStatus::Stalled,
            SimStatus::PlanningFailed => RunStatus::PlanningFailed,
        }
    }
}

/// `result.json` of one simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub status: RunStatus,
    pub attempts_used: u32,
    pub samples: usize,
    pub duration: f64,
    pub target: Option<[f64; 2]>,
    pub final_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// `kpi.json` of one evaluated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub id: String,
    pub logical: String,
    pub template: Template,
    pub params: BTreeMap<String, f64>,
    pub status: RunStatus,
    pub kpi: Option<KpiVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateCritical {
    pub template: Template,
    pub lane_widths: Vec<CriticalRadius>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendEntry {
    pub template: Template,
    pub lane_width: f64,
    pub successes: usize,
    /// Rank correlation of radius with mean dynamic KPI; `None` below five
    /// successful runs.
    pub spearman: Option<f64>,
}

/// `summary.json` of an evaluated campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub evaluated: usize,
    pub status_counts: BTreeMap<String, usize>,
    pub templates: Vec<TemplateAggregate>,
    pub critical_radius: Vec<TemplateCritical>,
    pub radius_trend: Vec<TrendEntry>,
    /// Ids without a usable result, with the reason.
    pub skipped: Vec<(String, String)>,
}
