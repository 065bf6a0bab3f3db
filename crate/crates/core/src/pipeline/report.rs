//! Renders the reports of a finished run as text tables or plot-ready JSON.
//!
//! Rendering only reads the persisted report files, so output for the same
//! run directory is byte-identical across invocations.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::pipeline::agreement::AgreementReportFile;
use crate::pipeline::framing::FramingReport;
use crate::pipeline::manifest::{read_json, AuditManifest, RunPaths};
use crate::pipeline::pct::PctReport;
use crate::pipeline::sensitivity::SensitivityReportFile;
use crate::pipeline::PipelineError;

/// Output shape of the report command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Fixed-width text tables.
    Tabular,
    /// JSON series of labeled points for external plotting.
    Plotdata,
}

#[derive(Debug, Serialize)]
struct PlotPoint {
    x: f64,
    y: f64,
    label: String,
}

#[derive(Debug, Serialize)]
struct PlotSeries {
    name: String,
    points: Vec<PlotPoint>,
}

#[derive(Debug, Serialize)]
struct PlotData {
    run_id: String,
    series: Vec<PlotSeries>,
}

/// Column-aligned text table. Widths come from the content, so the layout is
/// a pure function of the rows.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    fn render(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (index, cell) in row.iter().enumerate() {
                widths[index] = widths[index].max(cell.len());
            }
        }
        let mut line = |cells: &[String]| -> std::io::Result<()> {
            let mut rendered = String::new();
            for (index, cell) in cells.iter().enumerate() {
                if index > 0 {
                    rendered.push_str("  ");
                }
                rendered.push_str(&format!("{:<width$}", cell, width = widths[index]));
            }
            writeln!(out, "{}", rendered.trim_end())
        };
        line(&self.header)?;
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&rule)?;
        for row in &self.rows {
            line(row)?;
        }
        Ok(())
    }
}

fn fmt5(value: f64) -> String {
    format!("{value:.5}")
}

fn fmt5_opt(value: Option<f64>) -> String {
    value.map(fmt5).unwrap_or_else(|| "-".to_string())
}

fn load_optional<T: serde::de::DeserializeOwned>(
    paths: &RunPaths,
    name: &str,
) -> Result<Option<T>, PipelineError> {
    let path = paths.reports().join(name);
    if !path.exists() {
        return Ok(None);
    }
    read_json(&path).map(Some)
}

/// Renders every report present under the run directory in the requested
/// format. A run directory without a manifest is unknown.
pub fn render_report(
    output_dir: &Path,
    run_id: &str,
    format: ReportFormat,
    out: &mut impl Write,
) -> Result<(), PipelineError> {
    let paths = RunPaths::new(output_dir, run_id);
    let manifest = AuditManifest::load(&paths)?
        .ok_or_else(|| PipelineError::UnknownRun(run_id.to_string()))?;

    let pct: Option<PctReport> = load_optional(&paths, "pct_metrics.json")?;
    let sensitivity: Option<SensitivityReportFile> = load_optional(&paths, "sensitivity.json")?;
    let framing: Option<FramingReport> = load_optional(&paths, "framing_metrics.json")?;
    let agreement: Option<AgreementReportFile> = load_optional(&paths, "agreement.json")?;

    match format {
        ReportFormat::Tabular => render_tabular(
            &manifest,
            pct.as_ref(),
            sensitivity.as_ref(),
            framing.as_ref(),
            agreement.as_ref(),
            out,
        )
        .map_err(|e| PipelineError::Io {
            path: paths.reports(),
            source: e,
        }),
        ReportFormat::Plotdata => {
            let data = plot_data(&manifest, pct.as_ref(), sensitivity.as_ref(), framing.as_ref());
            serde_json::to_writer_pretty(&mut *out, &data)?;
            writeln!(out).map_err(|e| PipelineError::Io {
                path: paths.reports(),
                source: e,
            })
        }
    }
}

fn render_tabular(
    manifest: &AuditManifest,
    pct: Option<&PctReport>,
    sensitivity: Option<&SensitivityReportFile>,
    framing: Option<&FramingReport>,
    agreement: Option<&AgreementReportFile>,
    out: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(out, "Run {}", manifest.run_id)?;
    writeln!(out, "Config digest {}", manifest.config_digest)?;

    if let Some(report) = pct {
        writeln!(out, "\n== Opinion compass ==")?;
        let mut table = Table::new(&[
            "unit", "model", "scored", "economic", "social", "euclidean", "manhattan",
            "chebyshev", "verdict",
        ]);
        for row in &report.rows {
            table.row(vec![
                row.unit_id.clone(),
                row.model_id.clone(),
                format!("{}/{}", row.statements_scored, row.statements_total),
                fmt5(row.economic),
                fmt5(row.social),
                fmt5(row.euclidean),
                fmt5(row.manhattan),
                fmt5(row.chebyshev),
                format!("{:?}", row.verdict).to_lowercase(),
            ]);
        }
        table.render(out)?;

        writeln!(out, "\n== Opinion uncertainty ==")?;
        let mut table = Table::new(&[
            "unit",
            "avg conf",
            "min conf",
            "max conf",
            "low conf",
            "mean",
            "boot err",
            "ci low",
            "ci high",
            "wmean",
            "werr",
        ]);
        for row in &report.rows {
            table.row(vec![
                row.unit_id.clone(),
                fmt5(row.avg_confidence),
                fmt5(row.min_confidence),
                fmt5(row.max_confidence),
                format!(
                    "{}/{} ({})",
                    row.low_confidence_count,
                    row.statements_scored,
                    fmt5(row.low_confidence_fraction)
                ),
                fmt5(row.mean_score),
                fmt5(row.bootstrap_error),
                fmt5(row.ci_low),
                fmt5(row.ci_high),
                fmt5(row.weighted_mean),
                fmt5(row.weighted_error),
            ]);
        }
        table.render(out)?;
    }

    if let Some(report) = sensitivity {
        writeln!(out, "\n== Prompt sensitivity ==")?;
        let mut table = Table::new(&[
            "endpoint", "model", "language", "valid", "mean var", "std var",
        ]);
        for entry in &report.entries {
            table.row(vec![
                entry.endpoint.clone(),
                entry.model_id.clone(),
                entry.language.clone(),
                format!("{}/{}", entry.report.valid_items, entry.report.total_items),
                fmt5(entry.report.mean_variance),
                fmt5(entry.report.std_variance),
            ]);
        }
        table.render(out)?;

        writeln!(out, "\n== Variant agreement ==")?;
        let mut table = Table::new(&[
            "endpoint", "language", "pair", "kappa", "agreement", "degenerate",
        ]);
        for entry in &report.entries {
            for pair in &entry.report.pairwise {
                table.row(vec![
                    entry.endpoint.clone(),
                    entry.language.clone(),
                    format!("{}~{}", pair.a, pair.b),
                    fmt5(pair.kappa),
                    fmt5(pair.raw_agreement),
                    pair.degenerate.to_string(),
                ]);
            }
        }
        table.render(out)?;
    }

    if let Some(report) = framing {
        writeln!(out, "\n== Headline framing ==")?;
        let mut table = Table::new(&[
            "model",
            "language",
            "topic",
            "stance",
            "headlines",
            "top frames",
            "top entities",
            "polarity rate",
            "polarization",
        ]);
        for row in &report.rows {
            table.row(vec![
                row.model_id.clone(),
                row.language.clone(),
                row.topic.clone(),
                row.stance.label().to_string(),
                row.headline_count.to_string(),
                top_frames(row),
                top_entities(row),
                fmt5_opt(row.lexical_polarity_rate),
                fmt5_opt(row.polarization),
            ]);
        }
        table.render(out)?;
    }

    if let Some(file) = agreement {
        writeln!(out, "\n== Annotator agreement ==")?;
        let report = &file.report;
        let mut table = Table::new(&[
            "items", "categories", "raters", "kappa", "band", "degenerate",
        ]);
        table.row(vec![
            report.items.to_string(),
            report.categories.to_string(),
            report.raters.to_string(),
            fmt5_opt(report.kappa),
            report.band.clone().unwrap_or_else(|| "-".to_string()),
            report.degenerate.to_string(),
        ]);
        table.render(out)?;
    }

    Ok(())
}

/// Highest-ratio frames of a group, rendered as "name (ratio)" pairs.
fn top_frames(row: &crate::pipeline::framing::FramingGroupRow) -> String {
    let Some(ratios) = &row.frame_ratios else {
        return "-".to_string();
    };
    let mut pairs: Vec<(&String, &f64)> = ratios.iter().filter(|(_, v)| **v > 0.0).collect();
    pairs.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap().then_with(|| a.0.cmp(b.0)));
    pairs
        .into_iter()
        .take(3)
        .map(|(name, ratio)| format!("{name} ({})", fmt5(*ratio)))
        .collect::<Vec<_>>()
        .join("; ")
}

fn top_entities(row: &crate::pipeline::framing::FramingGroupRow) -> String {
    if row.top_entities.is_empty() {
        return "-".to_string();
    }
    row.top_entities
        .iter()
        .take(3)
        .map(|entity| format!("{} ({})", entity.entity_key, fmt5(entity.prominence)))
        .collect::<Vec<_>>()
        .join("; ")
}

fn plot_data(
    manifest: &AuditManifest,
    pct: Option<&PctReport>,
    sensitivity: Option<&SensitivityReportFile>,
    framing: Option<&FramingReport>,
) -> PlotData {
    let mut series = Vec::new();

    if let Some(report) = pct {
        let points = report
            .rows
            .iter()
            .map(|row| PlotPoint {
                x: row.economic,
                y: row.social,
                label: row.unit_id.clone(),
            })
            .collect();
        series.push(PlotSeries {
            name: "compass".to_string(),
            points,
        });
    }

    if let Some(report) = sensitivity {
        let points = report
            .entries
            .iter()
            .map(|entry| PlotPoint {
                x: entry.report.mean_variance,
                y: entry.report.std_variance,
                label: format!("{}__{}", entry.endpoint, entry.language),
            })
            .collect();
        series.push(PlotSeries {
            name: "sensitivity".to_string(),
            points,
        });
    }

    if let Some(report) = framing {
        let points = report
            .rows
            .iter()
            .filter_map(|row| {
                let rate = row.lexical_polarity_rate?;
                Some(PlotPoint {
                    x: rate,
                    y: row.polarization.unwrap_or(0.0),
                    label: format!(
                        "{}__{}__{}__{}",
                        row.model_id,
                        row.language,
                        row.topic,
                        row.stance.label()
                    ),
                })
            })
            .collect();
        series.push(PlotSeries {
            name: "polarity".to_string(),
            points,
        });
    }

    PlotData {
        run_id: manifest.run_id.clone(),
        series,
    }
}
