//! Results file: a schema line, a column header, then one tab-separated
//! row per trained model.
//!
//! ```text
//! # bandsel results v1
//! method  seed_or_rank  mask_bits  dice  seconds
//! all_bands  0  11111111  0.9445  3.51
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Method;
use crate::error::{Error, Result};
use crate::mask::BandMask;

pub const RESULTS_MAGIC: &str = "# bandsel results v1";
pub const RESULTS_COLUMNS: &str = "method\tseed_or_rank\tmask_bits\tdice\tseconds";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    /// Training seed, or 1-based rank among BO observations.
    pub seed_or_rank: u64,
    pub mask: BandMask,
    pub dice: f64,
    pub seconds: f64,
}

impl ResultRow {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.dice) {
            return Err(Error::InvalidArgument(format!("dice {} outside [0, 1]", self.dice)));
        }
        let ok = match self.method {
            Method::AllBands | Method::Attention => self.mask.is_all(),
            Method::Expert | Method::BayesOpt => !self.mask.is_zero(),
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("mask {} inconsistent with method {}", self.mask, self.method)));
        }
        Ok(())
    }

    fn to_line(&self) -> String {
        format!("{}\t{}\t{}\t{}\t{}", self.method, self.seed_or_rank, self.mask, self.dice, self.seconds)
    }
}

pub fn encode_results(rows: &[ResultRow]) -> String {
    let mut out = format!("{RESULTS_MAGIC}\n{RESULTS_COLUMNS}\n");
    for r in rows {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn decode_results(text: &str, path: &Path) -> Result<Vec<ResultRow>> {
    let format = |reason: String| Error::Format { kind: "results", path: path.to_path_buf(), reason };
    let mut lines = text.lines();
    if lines.next() != Some(RESULTS_MAGIC) {
        return Err(format(format!("first line must be {RESULTS_MAGIC:?}")));
    }
    if lines.next() != Some(RESULTS_COLUMNS) {
        return Err(format(format!("second line must be {RESULTS_COLUMNS:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let lineno = i + 3;
        if f.len() != 5 {
            return Err(format(format!("line {lineno}: expected 5 fields, got {}", f.len())));
        }
        let field = |e: String| format(format!("line {lineno}: {e}"));
        let row = ResultRow {
            method: f[0].parse().map_err(|e: Error| field(e.to_string()))?,
            seed_or_rank: f[1].parse().map_err(|e| field(format!("seed_or_rank: {e}")))?,
            mask: f[2].parse().map_err(|e: Error| field(e.to_string()))?,
            dice: f[3].parse().map_err(|e| field(format!("dice: {e}")))?,
            seconds: f[4].parse().map_err(|e| field(format!("seconds: {e}")))?,
        };
        row.validate().map_err(|e| field(e.to_string()))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_results(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_results(rows)).map_err(|e| Error::io(path, e))
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_results(&text, path)
}
