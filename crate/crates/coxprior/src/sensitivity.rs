//! Prior-sensitivity analysis: the same dataset summarized under a
//! panel of priors, with spread statistics and a decision-robustness
//! flag, rendered as plain, CSV, or Markdown tables.

use crate::cox::TiesPolicy;
use crate::dataset::Dataset;
use crate::inference::{
    quadrature_posterior, sample_posterior, InferenceError, PosteriorSummary, QuadratureConfig,
    SamplerConfig, SummaryMethod,
};
use crate::priors::LogHrPrior;
use serde::Serialize;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("sensitivity analysis needs at least one prior")]
    EmptyPriors,
    #[error("duplicate prior label `{label}`")]
    DuplicateLabel { label: String },
    #[error("decision threshold must lie strictly between 0 and 1, got {threshold}")]
    InvalidThreshold { threshold: f64 },
    #[error("analysis under prior `{label}` failed: {source}")]
    Inference {
        label: String,
        source: InferenceError,
    },
    #[error("row {row}: {reason}")]
    MalformedCsv { row: usize, reason: String },
}

/// One analyzed prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub label: String,
    pub summary: PosteriorSummary,
}

/// Summaries across the prior panel plus how much they disagree.
/// `unanimous_decision` is true when every prior puts the posterior
/// probability of harm above the threshold, or every prior puts it
/// below one minus the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub rows: Vec<SensitivityRow>,
    pub spread_pr: f64,
    pub spread_median: f64,
    pub decision_threshold: f64,
    pub unanimous_decision: bool,
}

impl SensitivityReport {
    pub fn from_rows(
        rows: Vec<SensitivityRow>,
        decision_threshold: f64,
    ) -> Result<Self, SensitivityError> {
        if rows.is_empty() {
            return Err(SensitivityError::EmptyPriors);
        }
        if !(decision_threshold > 0.0 && decision_threshold < 1.0) {
            return Err(SensitivityError::InvalidThreshold {
                threshold: decision_threshold,
            });
        }
        let prs: Vec<f64> = rows.iter().map(|r| r.summary.pr_hr_gt_1).collect();
        let medians: Vec<f64> = rows.iter().map(|r| r.summary.median_hr).collect();
        let min_max = |xs: &[f64]| {
            xs.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                })
        };
        let (pr_min, pr_max) = min_max(&prs);
        let (med_min, med_max) = min_max(&medians);
        let unanimous_decision =
            pr_min > decision_threshold || pr_max < 1.0 - decision_threshold;
        Ok(SensitivityReport {
            rows,
            spread_pr: pr_max - pr_min,
            spread_median: med_max - med_min,
            decision_threshold,
            unanimous_decision,
        })
    }
}

/// Summarizes `dataset` under each prior in turn with the chosen
/// method. Prior labels must be unique; failures are attributed to the
/// offending prior.
pub fn run_sensitivity(
    dataset: &Dataset,
    priors: &[LogHrPrior],
    ties: TiesPolicy,
    method: SummaryMethod,
    sampler: &SamplerConfig,
    decision_threshold: f64,
) -> Result<SensitivityReport, SensitivityError> {
    if priors.is_empty() {
        return Err(SensitivityError::EmptyPriors);
    }
    let mut seen = HashSet::new();
    for p in priors {
        if !seen.insert(p.label.as_str()) {
            return Err(SensitivityError::DuplicateLabel {
                label: p.label.clone(),
            });
        }
    }
    let mut rows = Vec::with_capacity(priors.len());
    for prior in priors {
        let attribute = |source: InferenceError| SensitivityError::Inference {
            label: prior.label.clone(),
            source,
        };
        let summary = match method {
            SummaryMethod::Quadrature => {
                quadrature_posterior(dataset, prior, ties, &QuadratureConfig::default())
                    .map_err(attribute)?
            }
            SummaryMethod::Mcmc => sample_posterior(dataset, prior, ties, sampler)
                .and_then(|run| run.summary())
                .map_err(attribute)?,
        };
        rows.push(SensitivityRow {
            label: prior.label.clone(),
            summary,
        });
    }
    SensitivityReport::from_rows(rows, decision_threshold)
}

/// Table flavors for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    PlainTable,
    Csv,
    MarkdownTable,
}

const HEADERS: [&str; 5] = ["Prior", "Pr(HR > 1)", "Median HR", "2.5%", "97.5%"];

fn row_cells(row: &SensitivityRow) -> [String; 5] {
    let s = &row.summary;
    [
        row.label.clone(),
        format!("{:.3}", s.pr_hr_gt_1),
        format!("{:.3}", s.median_hr),
        format!("{:.3}", s.hr_2_5),
        format!("{:.3}", s.hr_97_5),
    ]
}

/// Quotes a CSV field only when it needs it.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders the per-prior table; spreads and the decision flag are
/// reported separately by callers.
pub fn render_report(report: &SensitivityReport, format: ReportFormat) -> String {
    let rows: Vec<[String; 5]> = report.rows.iter().map(row_cells).collect();
    match format {
        ReportFormat::Csv => {
            let mut out = HEADERS.join(",");
            out.push('\n');
            for cells in &rows {
                let line: Vec<String> = cells.iter().map(|c| csv_field(c)).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::MarkdownTable => {
            let mut out = format!("| {} |\n", HEADERS.join(" | "));
            out.push_str("| --- | --- | --- | --- | --- |\n");
            for cells in &rows {
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            out
        }
        ReportFormat::PlainTable => {
            let label_width = rows
                .iter()
                .map(|c| c[0].len())
                .chain(std::iter::once(HEADERS[0].len()))
                .max()
                .unwrap_or(5);
            let widths = [label_width, 10, 9, 7, 7];
            let mut out = String::new();
            out.push_str(&format!(
                "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}  {:>w4$}\n",
                HEADERS[0],
                HEADERS[1],
                HEADERS[2],
                HEADERS[3],
                HEADERS[4],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3],
                w4 = widths[4],
            ));
            for cells in &rows {
                out.push_str(&format!(
                    "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}  {:>w4$}\n",
                    cells[0],
                    cells[1],
                    cells[2],
                    cells[3],
                    cells[4],
                    w0 = widths[0],
                    w1 = widths[1],
                    w2 = widths[2],
                    w3 = widths[3],
                    w4 = widths[4],
                ));
            }
            out
        }
    }
}

/// Reads back a CSV rendered by [`render_report`]: (label, Pr(HR>1),
/// median, 2.5%, 97.5%) per row.
pub fn parse_report_csv(text: &str) -> Result<Vec<(String, f64, f64, f64, f64)>, SensitivityError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(SensitivityError::MalformedCsv {
        row: 0,
        reason: "missing header".to_string(),
    })?;
    if header != HEADERS.join(",") {
        return Err(SensitivityError::MalformedCsv {
            row: 0,
            reason: format!("unexpected header `{header}`"),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        let fields = split_csv_line(line);
        if fields.len() != 5 {
            return Err(SensitivityError::MalformedCsv {
                row,
                reason: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let num = |j: usize| -> Result<f64, SensitivityError> {
            fields[j]
                .parse()
                .map_err(|_| SensitivityError::MalformedCsv {
                    row,
                    reason: format!("`{}` is not a number", fields[j]),
                })
        };
        out.push((fields[0].clone(), num(1)?, num(2)?, num(3)?, num(4)?));
    }
    Ok(out)
}

/// Splits one CSV line honoring double-quoted fields.
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    cur.push('"');
                    chars.next();
                } else {
                    quoted = false;
                }
            }
            '"' if cur.is_empty() => quoted = true,
            ',' if !quoted => {
                fields.push(std::mem::take(&mut cur));
            }
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}
