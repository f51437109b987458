//! Per-method Dice summaries and the comparison table.
//!
//! A summary file holds one line per method with the Dice mean and sample
//! standard deviation in percent:
//!
//! ```text
//! # bandsel summary v1
//! method  n  dice_mean_pct  dice_std_pct
//! expert  10  81.15  2.95
//! ```

use std::fs;
use std::path::Path;

use super::config::Method;
use super::results::{decode_results, ResultRow, RESULTS_MAGIC};
use crate::error::{Error, Result};

pub const SUMMARY_MAGIC: &str = "# bandsel summary v1";
const SUMMARY_COLUMNS: &str = "method\tn\tdice_mean_pct\tdice_std_pct";

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub n: usize,
    pub mean_pct: f64,
    /// Sample standard deviation (n − 1); 0 for a single row.
    pub std_pct: f64,
}

impl MethodSummary {
    pub fn formatted(&self) -> String {
        format!("{:.2} ± {:.2}", self.mean_pct, self.std_pct)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    /// In Table 1 order; methods without rows are absent.
    pub summaries: Vec<MethodSummary>,
    pub notices: Vec<String>,
}

impl Report {
    pub fn get(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

pub fn summarize(rows: &[ResultRow]) -> Report {
    let mut report = Report::default();
    for method in Method::ALL {
        let dice: Vec<f64> = rows.iter().filter(|r| r.method == method).map(|r| 100.0 * r.dice).collect();
        let n = dice.len();
        if n == 0 {
            report.notices.push(format!("no rows for {}; omitted", method.label()));
            continue;
        }
        let mean = dice.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (dice.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            report.notices.push(format!("{} has a single row; std reported as 0", method.label()));
            0.0
        };
        report.summaries.push(MethodSummary { method, n, mean_pct: mean, std_pct: std });
    }
    for n in &report.notices {
        log::warn!("{n}");
    }
    report
}

/// Aligned text table in the layout of Table 1, followed by any notices.
pub fn render_table(report: &Report) -> String {
    const HEAD: &str = "Dice Coefficient (%)";
    let label_w = Method::ALL.iter().map(|m| m.label().len()).max().unwrap_or(0);
    let cells: Vec<String> = report.summaries.iter().map(MethodSummary::formatted).collect();
    let cell_w = cells.iter().map(|c| c.chars().count()).chain([HEAD.len()]).max().unwrap_or(0);
    let rule = format!("{}-+-{}\n", "-".repeat(label_w), "-".repeat(cell_w));
    let mut out = format!("{:label_w$} | {HEAD}\n", "");
    out.push_str(&rule);
    for (s, cell) in report.summaries.iter().zip(&cells) {
        out.push_str(&format!("{:label_w$} | {cell}\n", s.method.label()));
    }
    for n in &report.notices {
        out.push_str(&format!("note: {n}\n"));
    }
    out
}

pub fn encode_summary(report: &Report) -> String {
    let mut out = format!("{SUMMARY_MAGIC}\n{SUMMARY_COLUMNS}\n");
    for s in &report.summaries {
        out.push_str(&format!("{}\t{}\t{:.2}\t{:.2}\n", s.method, s.n, s.mean_pct, s.std_pct));
    }
    out
}

pub fn decode_summary(text: &str, path: &Path) -> Result<Report> {
    let format = |reason: String| Error::Format { kind: "summary", path: path.to_path_buf(), reason };
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_MAGIC) || lines.next() != Some(SUMMARY_COLUMNS) {
        return Err(format("missing summary header".into()));
    }
    let mut summaries = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let bad = |e: String| format(format!("line {}: {e}", i + 3));
        if f.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", f.len())));
        }
        summaries.push(MethodSummary {
            method: f[0].parse().map_err(|e: Error| bad(e.to_string()))?,
            n: f[1].parse().map_err(|e| bad(format!("n: {e}")))?,
            mean_pct: f[2].parse().map_err(|e| bad(format!("mean: {e}")))?,
            std_pct: f[3].parse().map_err(|e| bad(format!("std: {e}")))?,
        });
    }
    summaries.sort_by_key(|s| s.method);
    Ok(Report { summaries, notices: Vec::new() })
}

/// Reads either a results file (summarised here) or a summary file.
pub fn load_report(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match text.lines().next() {
        Some(RESULTS_MAGIC) => Ok(summarize(&decode_results(&text, path)?)),
        Some(SUMMARY_MAGIC) => decode_summary(&text, path),
        _ => Err(Error::Format {
            kind: "report input",
            path: path.to_path_buf(),
            reason: format!("expected a {RESULTS_MAGIC:?} or {SUMMARY_MAGIC:?} file"),
        }),
    }
}
