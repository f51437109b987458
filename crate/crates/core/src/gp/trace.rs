//! Tab-separated BO trace: one line per evaluation.
//!
//! ```text
//! # bandsel bo-trace v1
//! iter  mask  y  seconds
//! 0  01001010  0.0523  3.52
//! 1  11000000  fail  0.01
//! ```

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::BandMask;

pub const TRACE_MAGIC: &str = "# bandsel bo-trace v1";
const COLUMNS: &str = "iter\tmask\ty\tseconds";

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub mask: BandMask,
    /// `None` when the objective failed.
    pub y: Option<f64>,
    pub seconds: f64,
}

impl TraceRecord {
    pub fn to_line(&self) -> String {
        let y = self.y.map_or_else(|| "fail".to_string(), |y| y.to_string());
        format!("{}\t{}\t{}\t{}", self.iter, self.mask, y, self.seconds)
    }

    fn parse(line: &str) -> std::result::Result<Self, String> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(format!("expected 4 fields, got {}", f.len()));
        }
        let iter = f[0].parse().map_err(|e| format!("iter: {e}"))?;
        let mask = f[1].parse().map_err(|e: Error| e.to_string())?;
        let y = match f[2] {
            "fail" => None,
            v => Some(v.parse::<f64>().map_err(|e| format!("y: {e}"))?),
        };
        let seconds = f[3].parse().map_err(|e| format!("seconds: {e}"))?;
        Ok(Self { iter, mask, y, seconds })
    }
}

pub fn encode_trace(records: &[TraceRecord]) -> String {
    let mut out = format!("{TRACE_MAGIC}\n{COLUMNS}\n");
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

/// Parses a trace. An unterminated final line is treated as an interrupted
/// write and dropped.
pub fn decode_trace(text: &str, path: &Path) -> Result<Vec<TraceRecord>> {
    let format = |reason: String| Error::Format { kind: "bo-trace", path: path.to_path_buf(), reason };
    let mut lines = text.split_inclusive('\n');
    if lines.next().map(str::trim_end) != Some(TRACE_MAGIC) {
        return Err(format(format!("first line must be {TRACE_MAGIC:?}")));
    }
    if lines.next().map(str::trim_end) != Some(COLUMNS) {
        return Err(format("missing column header".into()));
    }
    let mut records = Vec::new();
    for (i, raw) in lines.enumerate() {
        if !raw.ends_with('\n') {
            log::warn!("{}: dropping unterminated final line", path.display());
            break;
        }
        let r = TraceRecord::parse(raw.trim_end()).map_err(|e| format(format!("record {i}: {e}")))?;
        if r.iter != records.len() {
            return Err(format(format!("record {i} has iter {}", r.iter)));
        }
        records.push(r);
    }
    Ok(records)
}

pub fn write_trace(records: &[TraceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_trace(records)).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_trace(&text, path)
}

/// Appends one record, writing the header first if the file is new or empty.
pub fn append_trace(record: &TraceRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    let empty = f.metadata().map_err(|e| Error::io(path, e))?.len() == 0;
    let mut text = if empty { format!("{TRACE_MAGIC}\n{COLUMNS}\n") } else { String::new() };
    text.push_str(&record.to_line());
    text.push('\n');
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
