use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use log::{info, warn};
use rayon::prelude::*;

use super::db::*;
use super::report::{render_report, render_spider, REPORT_FILE, SPIDER_FILE};
use super::{OrchestratorError, ToolkitConfig};
use crate::eval::{aggregate_by_template, compute_kpis, critical_radius, kpi_radius_trend, RunSummary};
use crate::lanelet::{emit_osm, parse_osm, to_lanelets, CONNECTOR_DS, ROAD_DS};
use crate::opendrive::{emit_opendrive, parse_opendrive};
use crate::openscenario::{instantiate_xosc, parse_xosc, ScenarioConfig, XoscTemplate};
use crate::road::Vec2;
use crate::roadgen::{expand_logical, load_definitions, ConcreteScenario, LogicalScenario, Template, Variant};
use crate::sim::{export_csv, parse_csv, run_simulation, SimWorld};

/// Glob over concrete-scenario ids; no pattern matches everything.
#[derive(Debug, Clone, Default)]
pub struct IdFilter(Option<glob::Pattern>);

impl IdFilter {
    pub fn new(pattern: Option<&str>) -> Result<Self, OrchestratorError> {
        Ok(IdFilter(pattern.map(glob::Pattern::new).transpose()?))
    }

    pub fn matches(&self, id: &str) -> bool {
        self.0.as_ref().is_none_or(|p| p.matches(id))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerateReport {
    pub generated: usize,
    pub failed: usize,
}

/// Expands every definition in `defs` and writes the scenario database.
pub fn generate(defs: &std::path::Path, db: &Database, cfg: &ToolkitConfig, filter: &IdFilter) -> Result<GenerateReport, OrchestratorError> {
    let logicals = load_definitions(defs)?;
    if logicals.is_empty() {
        return Err(OrchestratorError::NoScenarios(defs.into()));
    }
    fs::create_dir_all(&db.root).map_err(|e| OrchestratorError::io(&db.root, e))?;
    let pool = cfg.pool();
    let template = XoscTemplate::builtin();
    let mut manifest = Manifest::default();
    for ls in &logicals {
        let variants = pool.install(|| expand_logical(ls))?;
        let entries: Vec<ManifestEntry> = pool.install(|| {
            variants.into_par_iter().filter(|v| filter.matches(&v.id)).map(|v| write_scenario(db, cfg, &template, ls, v)).collect::<Result<_, _>>()
        })?;
        manifest.scenarios.extend(entries);
    }
    write_json(&db.manifest_path(), &manifest)?;
    let generated = manifest.generated().count();
    let failed = manifest.scenarios.len() - generated;
    info!("generated {generated} scenarios, {failed} failed");
    if generated == 0 {
        return Err(OrchestratorError::NothingGenerated);
    }
    Ok(GenerateReport { generated, failed })
}

fn scenario_files(cs: &ConcreteScenario, cfg: &ToolkitConfig, template: &XoscTemplate) -> Result<[String; 4], String> {
    let xodr = emit_opendrive(&cs.network, &cs.id).map_err(|e| e.to_string())?;
    let map = to_lanelets(&cs.network, ROAD_DS, CONNECTOR_DS).map_err(|e| e.to_string())?;
    let osm = emit_osm(&map, cfg.origin);
    let scfg = ScenarioConfig::for_scenario(cs, MAP_XODR, cfg.attempt_limit, cfg.timeout);
    let xosc = instantiate_xosc(template, &scfg, &cs.network).map_err(|e| e.to_string())?;
    let record = ScenarioRecord {
        id: cs.id.clone(),
        logical: cs.logical.clone(),
        template: cs.template,
        params: cs.params.clone(),
        route: cs.route.clone(),
        warnings: cs.warnings.clone(),
    };
    let params = serde_json::to_string_pretty(&record).map_err(|e| e.to_string())? + "\n";
    Ok([xodr, osm, xosc, params])
}

fn write_scenario(
    db: &Database,
    cfg: &ToolkitConfig,
    template: &XoscTemplate,
    ls: &LogicalScenario,
    v: Variant,
) -> Result<ManifestEntry, OrchestratorError> {
    let failed = |reason: String| {
        warn!("{}: {reason}", v.id);
        ManifestEntry { id: v.id.clone(), logical: ls.name.clone(), template: ls.template, generated: false, reason: Some(reason) }
    };
    let cs = match &v.outcome {
        Ok(cs) => cs,
        Err(e) => return Ok(failed(e.to_string())),
    };
    for w in &cs.warnings {
        warn!("{}: {w}", cs.id);
    }
    let files = match scenario_files(cs, cfg, template) {
        Ok(f) => f,
        Err(reason) => return Ok(failed(reason)),
    };
    let dir = db.scenario_dir(&ls.name, &cs.id);
    for (name, text) in SCENARIO_FILES.iter().zip(&files) {
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    Ok(ManifestEntry { id: cs.id.clone(), logical: ls.name.clone(), template: ls.template, generated: true, reason: None })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulateReport {
    pub ran: usize,
    /// Already had a result and were left alone.
    pub skipped: usize,
    pub counts: BTreeMap<RunStatus, usize>,
}

fn load_world(db: &Database, entry: &ManifestEntry, cfg: &ToolkitConfig) -> Result<(SimWorld, ScenarioConfig), String> {
    let dir = db.scenario_dir(&entry.logical, &entry.id);
    let read = |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    let xosc = parse_xosc(&read(SCENARIO_XOSC)?).map_err(|e| format!("{SCENARIO_XOSC}: {e}"))?;
    let xodr = parse_opendrive(&read(&xosc.config.map_file)?).map_err(|e| format!("{}: {e}", xosc.config.map_file))?;
    let map = parse_osm(&read(MAP_OSM)?, cfg.origin).map_err(|e| format!("{MAP_OSM}: {e}"))?;
    Ok((SimWorld::new(xodr.network, map), xosc.config))
}

fn simulate_one(db: &Database, cfg: &ToolkitConfig, entry: &ManifestEntry) -> Result<RunStatus, OrchestratorError> {
    let dir = db.result_dir(&entry.id);
    let record = match load_world(db, entry, cfg) {
        Err(detail) => {
            warn!("{}: {detail}", entry.id);
            ResultRecord {
                id: entry.id.clone(),
                status: RunStatus::Errored,
                attempts_used: 0,
                samples: 0,
                duration: 0.0,
                target: None,
                final_distance: None,
                detail: Some(detail),
            }
        }
        Ok((world, scfg)) => {
            let r = run_simulation(&world, &scfg, &cfg.vehicle, &cfg.adf, cfg.dt);
            let status = RunStatus::from(r.status);
            if status.has_trajectory() {
                write_atomic(&dir.join(TRAJECTORY_CSV), export_csv(&r.trajectory).as_bytes())?;
            }
            ResultRecord {
                id: entry.id.clone(),
                status,
                attempts_used: r.attempts_used,
                samples: r.trajectory.len(),
                duration: r.trajectory.last().map_or(0.0, |p| p.t),
                target: r.target_point.map(|p| [p.x, p.y]),
                final_distance: r.final_distance(),
                detail: r.failure_detail,
            }
        }
    };
    if !record.status.has_trajectory() {
        let stale = dir.join(TRAJECTORY_CSV);
        if stale.exists() {
            fs::remove_file(&stale).map_err(|e| OrchestratorError::io(&stale, e))?;
        }
    }
    // written last: its presence marks a finished scenario
    write_json(&dir.join(RESULT_JSON), &record)?;
    Ok(record.status)
}

/// Runs every generated scenario without a result (all of them with
/// `force`).
pub fn simulate(db: &Database, cfg: &ToolkitConfig, filter: &IdFilter, force: bool) -> Result<SimulateReport, OrchestratorError> {
    let manifest = db.read_manifest()?;
    let todo: Vec<&ManifestEntry> = manifest.generated().filter(|e| filter.matches(&e.id)).collect();
    let outcomes: Vec<Option<RunStatus>> = cfg.pool().install(|| {
        todo.par_iter()
            .map(|e| {
                if !force && db.result_dir(&e.id).join(RESULT_JSON).exists() {
                    return Ok(None);
                }
                simulate_one(db, cfg, e).map(Some)
            })
            .collect::<Result<_, _>>()
    })?;
    let mut report = SimulateReport::default();
    for o in outcomes {
        match o {
            Some(s) => {
                report.ran += 1;
                *report.counts.entry(s).or_default() += 1;
            }
            None => report.skipped += 1,
        }
    }
    info!("simulated {} scenarios, {} already done", report.ran, report.skipped);
    Ok(report)
}

enum Evaluated {
    Done(KpiRecord),
    Skipped(String, String),
}

fn evaluate_one(db: &Database, cfg: &ToolkitConfig, entry: &ManifestEntry) -> Result<Evaluated, OrchestratorError> {
    let rdir = db.result_dir(&entry.id);
    let skip = |why: String| {
        warn!("{}: {why}", entry.id);
        Ok(Evaluated::Skipped(entry.id.clone(), why))
    };
    let result_path = rdir.join(RESULT_JSON);
    if !result_path.exists() {
        return skip("no result".into());
    }
    let result: ResultRecord = match read_json(&result_path) {
        Ok(r) => r,
        Err(e) => return skip(e.to_string()),
    };
    let params: ScenarioRecord = match read_json(&db.scenario_dir(&entry.logical, &entry.id).join(PARAMS_JSON)) {
        Ok(p) => p,
        Err(e) => return skip(e.to_string()),
    };
    let (kpi, note) = if result.status.has_trajectory() {
        let csv = match fs::read_to_string(rdir.join(TRAJECTORY_CSV)) {
            Ok(t) => t,
            Err(e) => return skip(format!("missing trajectory: {e}")),
        };
        let traj = match parse_csv(&csv) {
            Ok(t) => t,
            Err(e) => return skip(format!("{TRAJECTORY_CSV}: {e}")),
        };
        let target = result.target.map_or(Vec2::default(), |t| Vec2::new(t[0], t[1]));
        let lane_width = params.params.get("lane_width").copied().unwrap_or(0.0);
        match compute_kpis(&traj, &cfg.kpi, target, lane_width) {
            Ok(k) => (Some(k), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some(format!("no trajectory ({})", result.status.as_str())))
    };
    let record = KpiRecord {
        id: entry.id.clone(),
        logical: entry.logical.clone(),
        template: params.template,
        params: params.params,
        status: result.status,
        kpi,
        note,
    };
    write_json(&rdir.join(KPI_JSON), &record)?;
    Ok(Evaluated::Done(record))
}

const SWEPT_TEMPLATES: [Template; 2] = [Template::CurvedLeft, Template::CurvedRight];

fn summarize(records: &[KpiRecord], skipped: Vec<(String, String)>) -> Summary {
    let mut status_counts = BTreeMap::new();
    for r in records {
        *status_counts.entry(r.status.as_str().to_string()).or_default() += 1;
    }
    let runs: Vec<RunSummary> = records
        .iter()
        .map(|r| RunSummary { id: r.id.clone(), template: r.template, success: r.status == RunStatus::Success, kpi: r.kpi })
        .collect();
    let mut critical = Vec::new();
    let mut trend = Vec::new();
    for template in SWEPT_TEMPLATES {
        let swept: Vec<&KpiRecord> = records.iter().filter(|r| r.template == template).collect();
        if swept.is_empty() {
            continue;
        }
        let point = |r: &KpiRecord| Some((*r.params.get("radius")?, *r.params.get("lane_width")?));
        let mut by_width: BTreeMap<u64, (f64, BTreeSet<u64>, Vec<(f64, f64)>)> = BTreeMap::new();
        for r in &swept {
            let Some((rad, w)) = point(r) else { continue };
            let slot = by_width.entry(w.to_bits()).or_insert_with(|| (w, BTreeSet::new(), Vec::new()));
            slot.1.insert(rad.to_bits());
            if let (RunStatus::Success, Some(k)) = (r.status, r.kpi) {
                slot.2.push((rad, k.dynamic_mean()));
            }
        }
        // a single radius per width is a lane-width sweep, not a radius sweep
        by_width.retain(|_, slot| slot.1.len() >= 2);
        let sweep: Vec<_> = swept
            .iter()
            .filter_map(|r| Some((point(r)?, r.status.sim_status()?)))
            .filter(|((_, w), _)| by_width.contains_key(&w.to_bits()))
            .map(|((rad, w), s)| (rad, w, s))
            .collect();
        if !sweep.is_empty() {
            critical.push(TemplateCritical { template, lane_widths: critical_radius(&sweep) });
        }
        for (lane_width, _, points) in by_width.into_values() {
            trend.push(TrendEntry { template, lane_width, successes: points.len(), spearman: kpi_radius_trend(&points).ok() });
        }
    }
    Summary {
        evaluated: records.len(),
        status_counts,
        templates: aggregate_by_template(&runs),
        critical_radius: critical,
        radius_trend: trend,
        skipped,
    }
}

/// KPIs for every simulated scenario, then the campaign summary.
pub fn evaluate(db: &Database, cfg: &ToolkitConfig, filter: &IdFilter) -> Result<Summary, OrchestratorError> {
    let manifest = db.read_manifest()?;
    let todo: Vec<&ManifestEntry> = manifest.generated().filter(|e| filter.matches(&e.id)).collect();
    let outcomes: Vec<Evaluated> =
        cfg.pool().install(|| todo.par_iter().map(|e| evaluate_one(db, cfg, e)).collect::<Result<_, _>>())?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Evaluated::Done(r) => records.push(r),
            Evaluated::Skipped(id, why) => skipped.push((id, why)),
        }
    }
    let summary = summarize(&records, skipped);
    write_json(&db.summary_path(), &summary)?;
    info!("evaluated {} scenarios", summary.evaluated);
    Ok(summary)
}

/// Spider chart and text report from `summary.json`.
pub fn report(db: &Database) -> Result<Summary, OrchestratorError> {
    let summary: Summary = read_json(&db.summary_path())?;
    write_atomic(&db.root.join(SPIDER_FILE), render_spider(&summary).as_bytes())?;
    write_atomic(&db.root.join(REPORT_FILE), render_report(&summary).as_bytes())?;
    Ok(summary)
}

fn list_dirs(dir: &std::path::Path) -> Result<Vec<String>, OrchestratorError> {
    if !dir.exists() {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| OrchestratorError::io(dir, e))? {
        let e = e.map_err(|e| OrchestratorError::io(dir, e))?;
        if e.path().is_dir() {
            out.push(e.file_name().to_string_lossy().into_owned());
        }
    }
    out.sort();
    Ok(out)
}

/// Checks that the manifest and the files on disk agree.
pub fn verify(db: &Database) -> Result<(), OrchestratorError> {
    let manifest = db.read_manifest()?;
    let mut problems = Vec::new();
    let mut ids = BTreeSet::new();
    for e in &manifest.scenarios {
        if !ids.insert(e.id.as_str()) {
            problems.push(format!("{}: listed twice", e.id));
        }
        if e.generated {
            let dir = db.scenario_dir(&e.logical, &e.id);
            for f in SCENARIO_FILES {
                if !dir.join(f).is_file() {
                    problems.push(format!("{}: missing {f}", e.id));
                }
            }
        } else if e.reason.is_none() {
            problems.push(format!("{}: failed without a reason", e.id));
        }
    }
    let generated: BTreeSet<&str> = manifest.generated().map(|e| e.id.as_str()).collect();
    let evaluated = db.summary_path().exists();
    let mut with_kpi = 0;
    for id in list_dirs(&db.results_dir())? {
        let dir = db.result_dir(&id);
        if !generated.contains(id.as_str()) {
            problems.push(format!("results/{id}: not a generated scenario"));
            continue;
        }
        let has_kpi = dir.join(KPI_JSON).is_file();
        with_kpi += has_kpi as usize;
        let result: ResultRecord = match read_json(&dir.join(RESULT_JSON)) {
            Ok(r) => r,
            Err(_) => {
                problems.push(format!("results/{id}: missing or unreadable {RESULT_JSON}"));
                continue;
            }
        };
        if result.status.has_trajectory() != dir.join(TRAJECTORY_CSV).is_file() {
            problems.push(format!("results/{id}: {TRAJECTORY_CSV} does not match status {}", result.status.as_str()));
        }
        if evaluated && !has_kpi {
            problems.push(format!("results/{id}: not evaluated"));
        }
    }
    for logical in list_dirs(&db.scenarios_dir())? {
        for id in list_dirs(&db.scenarios_dir().join(&logical))? {
            if !generated.contains(id.as_str()) {
                problems.push(format!("scenarios/{logical}/{id}: not in the manifest"));
            }
        }
    }
    if evaluated {
        let summary: Summary = read_json(&db.summary_path())?;
        if summary.evaluated > with_kpi {
            problems.push(format!("summary counts {} evaluated scenarios but only {with_kpi} have {KPI_JSON}", summary.evaluated));
        }
        for (id, _) in &summary.skipped {
            if !ids.contains(id.as_str()) {
                problems.push(format!("summary skips unknown id {id}"));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(OrchestratorError::Inconsistent { root: db.root.clone(), problems })
    }
}
