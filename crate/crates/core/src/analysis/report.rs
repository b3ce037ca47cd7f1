//! Report rendering: per-task bar data and charts, contribution heatmaps,
//! the FVP horizon table, the cross-lingual table and integration results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::ContributionProfile;
use crate::error::{Error, IoContext, Result};
use crate::tasks::{TaskResult, HORIZONS_MS};

const KNOWN_TASKS: [&str; 7] = ["SA-2", "SA-7", "SarD", "PP", "ProR", "FVP", "XL-ProR"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportSummary {
    pub files: Vec<PathBuf>,
    pub skipped: usize,
}

/// Renders every artifact into `output_dir`. Later rows for the same
/// (task, upstream, setting) supersede earlier ones.
pub fn render_report(
    results: &[TaskResult],
    contributions: &[ContributionProfile],
    output_dir: &Path,
) -> Result<ReportSummary> {
    if results.is_empty() {
        return Err(Error::Empty("results store"));
    }
    fs::create_dir_all(output_dir).at(output_dir)?;
    let mut summary = ReportSummary::default();
    let mut known = Vec::new();
    for r in results {
        if KNOWN_TASKS.contains(&r.task.as_str()) {
            known.push(r);
        } else {
            log::warn!("skipping result for unknown task `{}`", r.task);
            summary.skipped += 1;
        }
    }

    let mut write = |name: String, contents: String| -> Result<()> {
        let path = output_dir.join(name);
        fs::write(&path, contents).at(&path)?;
        summary.files.push(path);
        Ok(())
    };

    // Bars: one chart per task (and feature), one bar per upstream.
    let mut bars: BTreeMap<String, BTreeMap<String, (String, f64)>> = BTreeMap::new();
    for r in known.iter().filter(|r| r.layers.is_none() && r.task != "FVP" && r.task != "XL-ProR") {
        let key = match r.feature {
            Some(f) => format!("{}-{}", r.task, f),
            None => r.task.clone(),
        };
        bars.entry(key)
            .or_default()
            .insert(r.upstream.clone(), (r.metric_name.to_string(), r.value));
    }
    for (key, rows) in &bars {
        let mut tsv = String::from("upstream\tmetric\tvalue\n");
        for (upstream, (metric, value)) in rows {
            let _ = writeln!(tsv, "{upstream}\t{metric}\t{value}");
        }
        write(format!("bars_{}.tsv", file_key(key)), tsv)?;
        let metric = rows.values().next().map(|v| v.0.clone()).unwrap_or_default();
        let data: Vec<(String, f64)> = rows.iter().map(|(u, (_, v))| (u.clone(), *v)).collect();
        write(format!("bars_{}.svg", file_key(key)), bar_chart_svg(key, &metric, &data))?;
    }

    // Contributions: long-format data plus a row-normalized heatmap per task.
    let mut by_task: BTreeMap<String, BTreeMap<String, &ContributionProfile>> = BTreeMap::new();
    for p in contributions {
        by_task.entry(p.task.clone()).or_default().insert(p.upstream.clone(), p);
    }
    for (task, profiles) in &by_task {
        let mut tsv = String::from("upstream\tlayer\tnorm\tweight\tc\n");
        for (upstream, p) in profiles {
            for i in 0..p.num_layers() {
                let _ = writeln!(tsv, "{upstream}\t{i}\t{}\t{}\t{}", p.norms[i], p.weights[i], p.c[i]);
            }
        }
        write(format!("contribution_{}.tsv", file_key(task)), tsv)?;
        let rows: Vec<(String, Vec<f64>)> = profiles.iter().map(|(u, p)| (u.clone(), p.c.clone())).collect();
        write(format!("contribution_{}.svg", file_key(task)), heatmap_svg(task, &rows))?;
    }

    // FVP: systems × horizons, one table per feature.
    let mut fvp: BTreeMap<String, BTreeMap<String, BTreeMap<u32, f64>>> = BTreeMap::new();
    for r in known.iter().filter(|r| r.task == "FVP") {
        let (Some(h), Some(f)) = (r.horizon, r.feature) else {
            log::warn!("FVP result for `{}` lacks horizon or feature", r.upstream);
            summary.skipped += 1;
            continue;
        };
        fvp.entry(f.to_string())
            .or_default()
            .entry(r.upstream.clone())
            .or_default()
            .insert((h * 1000.0).round() as u32, r.value);
    }
    for (feature, systems) in &fvp {
        let mut tsv = String::from("system");
        for h in HORIZONS_MS {
            let _ = write!(tsv, "\t{:.2}", h as f64 / 1000.0);
        }
        tsv.push('\n');
        for (system, values) in systems {
            tsv.push_str(system);
            for h in HORIZONS_MS {
                match values.get(&h) {
                    Some(v) => {
                        let _ = write!(tsv, "\t{v}");
                    }
                    None => tsv.push_str("\t-"),
                }
            }
            tsv.push('\n');
        }
        write(format!("fvp_{feature}.tsv"), tsv)?;
    }

    // Cross-lingual: systems × language-feature columns.
    let mut xl: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut columns = std::collections::BTreeSet::new();
    for r in known.iter().filter(|r| r.task == "XL-ProR") {
        let lang = r.language.clone().unwrap_or_else(|| "?".into());
        let feat = r.feature.map_or("?", |f| &f.as_str()[..1]);
        let col = format!("{lang}-{feat}");
        columns.insert(col.clone());
        xl.entry(r.upstream.clone()).or_default().insert(col, r.value);
    }
    if !xl.is_empty() {
        let mut tsv = String::from("system");
        for c in &columns {
            let _ = write!(tsv, "\t{c}");
        }
        tsv.push('\n');
        for (system, values) in &xl {
            tsv.push_str(system);
            for c in &columns {
                match values.get(c) {
                    Some(v) => {
                        let _ = write!(tsv, "\t{v}");
                    }
                    None => tsv.push_str("\t-"),
                }
            }
            tsv.push('\n');
        }
        write("crosslingual.tsv".into(), tsv)?;
    }

    // Integration settings.
    let integration: Vec<&&TaskResult> = known.iter().filter(|r| r.layers.is_some()).collect();
    if !integration.is_empty() {
        let mut tsv = String::from("upstream\ttask\tlayers\tmetric\tvalue\n");
        for r in integration {
            let layers: Vec<String> = r.layers.iter().flatten().map(|l| l.to_string()).collect();
            let _ = writeln!(
                tsv,
                "{}\t{}\t({})\t{}\t{}",
                r.upstream,
                r.task,
                layers.join(","),
                r.metric_name,
                r.value
            );
        }
        write("integration.tsv".into(), tsv)?;
    }

    Ok(summary)
}

fn file_key(key: &str) -> String {
    key.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn bar_chart_svg(title: &str, metric: &str, bars: &[(String, f64)]) -> String {
    let (bar_w, gap, height, top, bottom) = (40.0, 20.0, 200.0, 30.0, 80.0);
    let width = 60.0 + bars.len() as f64 * (bar_w + gap);
    let max = bars.iter().map(|b| b.1).fold(0.0f64, f64::max).max(1e-12);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{}\">\n\
         <text x=\"10\" y=\"20\" font-size=\"14\">{} ({})</text>\n",
        top + height + bottom,
        escape(title),
        escape(metric)
    );
    for (i, (label, value)) in bars.iter().enumerate() {
        let h = height * value.max(0.0) / max;
        let x = 40.0 + i as f64 * (bar_w + gap);
        let y = top + height - h;
        let _ = writeln!(
            svg,
            "<rect x=\"{x}\" y=\"{y}\" width=\"{bar_w}\" height=\"{h}\" fill=\"#4c72b0\"><title>{}: {value}</title></rect>",
            escape(label)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" transform=\"rotate(45 {} {})\">{}</text>",
            x,
            top + height + 12.0,
            x,
            top + height + 12.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Heatmap with each row scaled to its own maximum.
pub fn heatmap_svg(title: &str, rows: &[(String, Vec<f64>)]) -> String {
    let cell = 20.0;
    let left = 140.0;
    let top = 40.0;
    let cols = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n\
         <text x=\"10\" y=\"20\" font-size=\"14\">{}</text>\n",
        left + cols as f64 * cell + 10.0,
        top + rows.len() as f64 * cell + 10.0,
        escape(title)
    );
    for (r, (label, values)) in rows.iter().enumerate() {
        let y = top + r as f64 * cell;
        let _ = writeln!(
            svg,
            "<text x=\"5\" y=\"{}\" font-size=\"11\">{}</text>",
            y + 14.0,
            escape(label)
        );
        let max = values.iter().copied().fold(0.0f64, f64::max);
        for (c, &v) in values.iter().enumerate() {
            let s = if max > 0.0 { v / max } else { 0.0 };
            let shade = (255.0 * (1.0 - s)).round() as u8;
            let _ = writeln!(
                svg,
                "<rect x=\"{}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb(255,{shade},{shade})\"><title>layer {c}: {v}</title></rect>",
                left + c as f64 * cell
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
