use std::f64::consts::PI;
use std::fmt::Write;

use super::db::Summary;
use crate::eval::KPI_AXES;
use crate::numfmt::format_g;
use crate::roadgen::Family;

pub const SPIDER_FILE: &str = "spider.svg";
pub const REPORT_FILE: &str = "report.txt";

pub const SPIDER_CENTER: (f64, f64) = (320.0, 300.0);
pub const SPIDER_RADIUS: f64 = 220.0;

fn color(f: Family) -> &'static str {
    match f {
        Family::Curved => "#1f77b4",
        Family::TJunction => "#2ca02c",
        Family::Complex => "#d62728",
    }
}

/// Screen position of `score` on axis `i`; axis 0 points up, the rest
/// follow clockwise.
pub fn spider_point(i: usize, score: f64) -> (f64, f64) {
    let a = -PI / 2.0 + 2.0 * PI * i as f64 / KPI_AXES.len() as f64;
    (SPIDER_CENTER.0 + SPIDER_RADIUS * score * a.cos(), SPIDER_CENTER.1 + SPIDER_RADIUS * score * a.sin())
}

fn points(values: impl Iterator<Item = f64>) -> String {
    values.enumerate().map(|(i, v)| spider_point(i, v)).map(|(x, y)| format!("{x:.3},{y:.3}")).collect::<Vec<_>>().join(" ")
}

/// Radar chart with one polygon per template family that has successful
/// runs.
pub fn render_spider(summary: &Summary) -> String {
    let mut s = String::new();
    s.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" viewBox=\"0 0 640 640\">\n");
    s.push_str("  <rect width=\"640\" height=\"640\" fill=\"white\"/>\n");
    for ring in [0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(s, "  <polygon class=\"ring\" points=\"{}\" fill=\"none\" stroke=\"#cccccc\"/>", points(std::iter::repeat_n(ring, KPI_AXES.len())));
    }
    for (i, name) in KPI_AXES.iter().enumerate() {
        let (x, y) = spider_point(i, 1.0);
        let _ = writeln!(
            s,
            "  <line class=\"axis\" x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{x:.3}\" y2=\"{y:.3}\" stroke=\"#999999\"/>",
            SPIDER_CENTER.0, SPIDER_CENTER.1
        );
        let (lx, ly) = spider_point(i, 1.12);
        let anchor = if (lx - SPIDER_CENTER.0).abs() < 1.0 {
            "middle"
        } else if lx > SPIDER_CENTER.0 {
            "start"
        } else {
            "end"
        };
        let _ = writeln!(s, "  <text x=\"{lx:.3}\" y=\"{:.3}\" font-size=\"13\" text-anchor=\"{anchor}\">{name}</text>", ly + 4.0);
    }
    let mut legend_y = 560.0;
    for agg in &summary.templates {
        let family = agg.family.as_str();
        let c = color(agg.family);
        let label = match (agg.mean_scores, agg.mean_kpi()) {
            (Some(scores), Some(mean)) => {
                let _ = writeln!(
                    s,
                    "  <polygon class=\"template\" data-template=\"{family}\" points=\"{}\" fill=\"{c}\" fill-opacity=\"0.15\" stroke=\"{c}\" stroke-width=\"2\"/>",
                    points(scores.into_iter())
                );
                format!("{family}: mean {mean:.3}, {} of {} succeeded", agg.successes, agg.count)
            }
            _ => format!("{family}: no successful runs of {}", agg.count),
        };
        let _ = writeln!(s, "  <rect x=\"40\" y=\"{:.1}\" width=\"14\" height=\"14\" fill=\"{c}\"/>", legend_y - 11.0);
        let _ = writeln!(s, "  <text x=\"62\" y=\"{legend_y:.1}\" font-size=\"13\">{label}</text>");
        legend_y += 22.0;
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_report(summary: &Summary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Evaluated scenarios: {}", summary.evaluated);
    let counts: Vec<String> = summary.status_counts.iter().map(|(k, v)| format!("{k} {v}")).collect();
    let _ = writeln!(s, "Outcomes: {}", counts.join(", "));
    if !summary.skipped.is_empty() {
        let _ = writeln!(s, "Skipped: {}", summary.skipped.len());
    }
    let _ = writeln!(s);
    let _ = write!(s, "{:<12}{:>6}{:>9}{:>7}", "template", "runs", "success", "mean");
    for name in KPI_AXES {
        let _ = write!(s, "{:>16}", name);
    }
    let _ = writeln!(s, "{:>13}", "comfort_rms");
    for agg in &summary.templates {
        let _ = write!(s, "{:<12}{:>6}{:>8.1}%", agg.family.as_str(), agg.count, 100.0 * agg.success_rate);
        match (agg.mean_scores, agg.mean_kpi(), agg.mean_comfort_rms) {
            (Some(scores), Some(mean), Some(rms)) => {
                let _ = write!(s, "{mean:>7.3}");
                for v in scores {
                    let _ = write!(s, "{v:>16.3}");
                }
                let _ = writeln!(s, "{rms:>13.4}");
            }
            _ => {
                let _ = writeln!(s, "{:>7}", "-");
            }
        }
    }
    for tc in &summary.critical_radius {
        let _ = writeln!(s, "\nCritical radius, {}:", tc.template);
        for c in &tc.lane_widths {
            let w = format_g(c.lane_width, 6);
            let _ = match (c.critical, c.first_success) {
                (None, _) => writeln!(s, "  lane width {w} m: every run succeeded"),
                (Some(r), Some(ok)) => writeln!(
                    s,
                    "  lane width {w} m: failures up to {r} m, success from {ok} m{}",
                    if c.monotone { "" } else { " (not monotone)" }
                ),
                (Some(r), None) => writeln!(s, "  lane width {w} m: fails up to the largest radius run, {r} m"),
            };
        }
    }
    if !summary.radius_trend.is_empty() {
        let _ = writeln!(s, "\nDynamic KPI against radius (Spearman):");
        for t in &summary.radius_trend {
            let w = format_g(t.lane_width, 6);
            let _ = match t.spearman {
                Some(rho) => writeln!(s, "  {} lane width {w} m: {rho:+.3} over {} successful runs", t.template, t.successes),
                None => writeln!(s, "  {} lane width {w} m: too few successful runs ({})", t.template, t.successes),
            };
        }
    }
    s
}
