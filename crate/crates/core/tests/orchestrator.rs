use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use roadtest::eval::{ComfortClass, KpiVector, TemplateAggregate};
use roadtest::orchestrator::{
    evaluate, generate, read_json, render_spider, report, simulate, verify, Database, IdFilter, KpiRecord, Manifest, OrchestratorError, RunStatus,
    Summary, ToolkitConfig, KPI_JSON, MAP_OSM, RESULT_JSON, SCENARIO_XOSC, SPIDER_CENTER, SPIDER_FILE, SPIDER_RADIUS, SUMMARY_FILE, TRAJECTORY_CSV,
};
use roadtest::roadgen::Family;

/// A few variants of three stock definitions, one per template family.
fn small_definitions(dir: &Path) {
    let stock = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../definitions");
    fs::create_dir_all(dir).unwrap();
    for (file, n) in [("curved-left-radius.toml", 4), ("t-junction-angle.toml", 3), ("complex-lane-width.toml", 2)] {
        let text = fs::read_to_string(stock.join(file)).unwrap();
        let line = text.lines().find(|l| l.starts_with("variants")).unwrap();
        fs::write(dir.join(file), text.replace(line, &format!("variants = {n}"))).unwrap();
    }
}

fn config(parallel: usize) -> ToolkitConfig {
    ToolkitConfig { parallel, ..ToolkitConfig::default() }
}

fn campaign(root: &Path, parallel: usize) -> (Database, Summary) {
    let defs = root.join("defs");
    small_definitions(&defs);
    let db = Database::new(root.join("db"));
    let cfg = config(parallel);
    let all = IdFilter::default();
    let g = generate(&defs, &db, &cfg, &all).unwrap();
    assert_eq!((g.generated, g.failed), (9, 0));
    let s = simulate(&db, &cfg, &all, false).unwrap();
    assert_eq!((s.ran, s.skipped), (9, 0));
    evaluate(&db, &cfg, &all).unwrap();
    let summary = report(&db).unwrap();
    (db, summary)
}

/// Every file under `dir` with its bytes, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn polygons(svg: &str, class: &str) -> Vec<Vec<(f64, f64)>> {
    let doc = roxmltree::Document::parse(svg).unwrap();
    doc.descendants()
        .filter(|n| n.has_tag_name("polygon") && n.attribute("class") == Some(class))
        .map(|n| {
            n.attribute("points")
                .unwrap()
                .split_whitespace()
                .map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

#[test]
fn small_campaign_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let (db, summary) = campaign(tmp.path(), 2);
    verify(&db).unwrap();

    assert_eq!(summary.evaluated, 9);
    assert!(summary.skipped.is_empty());
    let families: Vec<Family> = summary.templates.iter().map(|a| a.family).collect();
    assert_eq!(families.len(), 3, "{families:?}");
    assert_eq!(summary.templates.iter().map(|a| a.count).sum::<usize>(), 9);

    // recompute the family means from the kpi files on disk
    let manifest: Manifest = db.read_manifest().unwrap();
    let mut sums: BTreeMap<String, (usize, [f64; 8])> = BTreeMap::new();
    for e in manifest.generated() {
        let rec: KpiRecord = read_json(&db.result_dir(&e.id).join(KPI_JSON)).unwrap();
        if rec.status == RunStatus::Success {
            let slot = sums.entry(rec.template.family().as_str().to_string()).or_insert((0, [0.0; 8]));
            slot.0 += 1;
            for (acc, s) in slot.1.iter_mut().zip(rec.kpi.unwrap().scores()) {
                *acc += s;
            }
        }
    }
    for agg in &summary.templates {
        match sums.get(agg.family.as_str()) {
            Some((n, total)) => {
                assert_eq!(agg.successes, *n);
                let mean = agg.mean_scores.unwrap();
                for (m, t) in mean.iter().zip(total) {
                    assert!((m - t / *n as f64).abs() < 1e-12);
                }
            }
            None => assert_eq!(agg.mean_scores, None),
        }
    }

    let svg = fs::read_to_string(db.root.join(SPIDER_FILE)).unwrap();
    let drawn = polygons(&svg, "template");
    let expected: Vec<&TemplateAggregate> = summary.templates.iter().filter(|a| a.mean_scores.is_some()).collect();
    assert_eq!(drawn.len(), expected.len());
    assert!(drawn.len() >= 2);
    for (poly, agg) in drawn.iter().zip(expected) {
        assert_eq!(poly.len(), 8);
        for (i, ((x, y), s)) in poly.iter().zip(agg.mean_scores.unwrap()).enumerate() {
            let (dx, dy) = (x - SPIDER_CENTER.0, y - SPIDER_CENTER.1);
            assert!(((dx * dx + dy * dy).sqrt() - s * SPIDER_RADIUS).abs() < 0.01, "axis {i}");
        }
    }
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("axis")).count(), 8);
}

fn aggregate(family: Family, score: Option<f64>) -> TemplateAggregate {
    TemplateAggregate {
        family,
        count: 4,
        successes: if score.is_some() { 4 } else { 0 },
        success_rate: if score.is_some() { 1.0 } else { 0.0 },
        mean_scores: score.map(|s| [s; 8]),
        mean_comfort_rms: score.map(|_| 0.2),
    }
}

#[test]
fn spider_geometry() {
    let summary = Summary {
        evaluated: 12,
        status_counts: BTreeMap::new(),
        templates: vec![aggregate(Family::Curved, Some(1.0)), aggregate(Family::TJunction, Some(0.5)), aggregate(Family::Complex, None)],
        critical_radius: vec![],
        radius_trend: vec![],
        skipped: vec![],
    };
    let svg = render_spider(&summary);
    let rings = polygons(&svg, "ring");
    let drawn = polygons(&svg, "template");
    assert_eq!(rings.len(), 4);
    assert_eq!(drawn.len(), 2);
    // a perfect template sits on the outer ring
    assert_eq!(drawn[0], rings[3]);
    for (i, (x, y)) in drawn[1].iter().enumerate() {
        let a = -std::f64::consts::FRAC_PI_2 + std::f64::consts::TAU * i as f64 / 8.0;
        let (mx, my) = (SPIDER_CENTER.0 + 0.5 * SPIDER_RADIUS * a.cos(), SPIDER_CENTER.1 + 0.5 * SPIDER_RADIUS * a.sin());
        assert!((x - mx).abs() <= 1.0 && (y - my).abs() <= 1.0, "axis {i}: ({x}, {y})");
    }
    assert!(svg.contains("no successful runs of 4"));
}

#[test]
fn simulate_resumes_and_reruns_what_is_missing() {
    let tmp = tempfile::tempdir().unwrap();
    let defs = tmp.path().join("defs");
    small_definitions(&defs);
    let db = Database::new(tmp.path().join("db"));
    let cfg = config(2);
    let all = IdFilter::default();
    generate(&defs, &db, &cfg, &all).unwrap();
    simulate(&db, &cfg, &all, false).unwrap();
    let before = snapshot(&db.results_dir());

    let again = simulate(&db, &cfg, &all, false).unwrap();
    assert_eq!((again.ran, again.skipped), (0, 9));
    assert_eq!(snapshot(&db.results_dir()), before);

    let manifest = db.read_manifest().unwrap();
    let victim = &manifest.scenarios[4].id;
    fs::remove_file(db.result_dir(victim).join(RESULT_JSON)).unwrap();
    let partial = simulate(&db, &cfg, &all, false).unwrap();
    assert_eq!((partial.ran, partial.skipped), (1, 8));
    assert_eq!(snapshot(&db.results_dir()), before);

    let forced = simulate(&db, &cfg, &all, true).unwrap();
    assert_eq!((forced.ran, forced.skipped), (9, 0));
    assert_eq!(snapshot(&db.results_dir()), before);
}

#[test]
fn results_do_not_depend_on_parallelism() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, _) = campaign(&tmp.path().join("a"), 1);
    let (b, _) = campaign(&tmp.path().join("b"), 4);
    assert_eq!(snapshot(&a.root), snapshot(&b.root));
    assert_eq!(fs::read(a.root.join(SUMMARY_FILE)).unwrap(), fs::read(b.root.join(SUMMARY_FILE)).unwrap());
}

#[test]
fn regeneration_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let defs = tmp.path().join("defs");
    small_definitions(&defs);
    let db = Database::new(tmp.path().join("db"));
    generate(&defs, &db, &config(3), &IdFilter::default()).unwrap();
    let first = snapshot(&db.root);
    generate(&defs, &db, &config(1), &IdFilter::default()).unwrap();
    assert_eq!(snapshot(&db.root), first);
}

#[test]
fn filter_limits_generation() {
    let tmp = tempfile::tempdir().unwrap();
    let defs = tmp.path().join("defs");
    small_definitions(&defs);
    let db = Database::new(tmp.path().join("db"));
    let g = generate(&defs, &db, &config(1), &IdFilter::new(Some("t-junction-*")).unwrap()).unwrap();
    assert_eq!(g.generated, 3);
    assert!(db.read_manifest().unwrap().scenarios.iter().all(|e| e.id.starts_with("t-junction-angle-")));
    assert!(IdFilter::new(Some("[")).unwrap_err().is_config());
}

#[test]
fn verify_finds_missing_and_stray_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (db, _) = campaign(tmp.path(), 2);
    let manifest = db.read_manifest().unwrap();
    let e = &manifest.scenarios[0];
    fs::remove_file(db.scenario_dir(&e.logical, &e.id).join(MAP_OSM)).unwrap();
    let success = manifest.generated().find(|e| {
        let r: roadtest::orchestrator::ResultRecord = read_json(&db.result_dir(&e.id).join(RESULT_JSON)).unwrap();
        r.status == RunStatus::Success
    });
    let s = success.unwrap();
    fs::remove_file(db.result_dir(&s.id).join(TRAJECTORY_CSV)).unwrap();
    fs::create_dir_all(db.result_dir("nobody-0001")).unwrap();
    match verify(&db).unwrap_err() {
        OrchestratorError::Inconsistent { problems, .. } => {
            assert!(problems.iter().any(|p| p.contains(&e.id) && p.contains("missing map.osm")), "{problems:?}");
            assert!(problems.iter().any(|p| p.contains(&s.id) && p.contains(TRAJECTORY_CSV)), "{problems:?}");
            assert!(problems.iter().any(|p| p.contains("nobody-0001")), "{problems:?}");
        }
        other => panic!("{other}"),
    }
}

#[test]
fn empty_definitions_are_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let db = Database::new(tmp.path().join("db"));
    let e = generate(tmp.path(), &db, &config(1), &IdFilter::default()).unwrap_err();
    assert!(matches!(e, OrchestratorError::NoScenarios(_)), "{e}");
    assert!(e.to_string().contains("no logical scenarios found"));
    assert!(!e.is_config());
}

#[test]
fn corrupt_scenario_does_not_stop_the_campaign() {
    let tmp = tempfile::tempdir().unwrap();
    let defs = tmp.path().join("defs");
    small_definitions(&defs);
    let db = Database::new(tmp.path().join("db"));
    let cfg = config(2);
    let all = IdFilter::default();
    generate(&defs, &db, &cfg, &all).unwrap();
    let manifest = db.read_manifest().unwrap();
    let bad = &manifest.scenarios[1];
    fs::write(db.scenario_dir(&bad.logical, &bad.id).join(SCENARIO_XOSC), "<OpenSCENARIO>").unwrap();

    let s = simulate(&db, &cfg, &all, false).unwrap();
    assert_eq!(s.ran, 9);
    assert_eq!(s.counts.get(&RunStatus::Errored), Some(&1));
    let summary = evaluate(&db, &cfg, &all).unwrap();
    assert_eq!(summary.evaluated, 9);
    assert_eq!(summary.status_counts.get("Errored"), Some(&1));
    let rec: KpiRecord = read_json(&db.result_dir(&bad.id).join(KPI_JSON)).unwrap();
    assert_eq!((rec.status, rec.kpi), (RunStatus::Errored, None));
    verify(&db).unwrap();
}

#[test]
fn kpi_vector_round_trips_through_json() {
    let k = KpiVector {
        long_accel: 0.1,
        long_decel: 0.2,
        lat_accel: 1.0 / 3.0,
        long_jerk: 0.4,
        lat_jerk: 0.5,
        distance_target: 0.6,
        lane_keeping: 0.7,
        oscillation: 0.8,
        comfort_rms: 0.412,
        comfort_class: ComfortClass::ALittleUncomfortable,
    };
    let text = serde_json::to_string(&k).unwrap();
    assert_eq!(serde_json::from_str::<KpiVector>(&text).unwrap(), k);
}
