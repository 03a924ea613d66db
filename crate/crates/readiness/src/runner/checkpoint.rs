//! Append-only per-item checkpoint enabling interrupted runs to resume
//! without re-calling completed items.
//!
//! Layout: a header line carrying the plan fingerprint and the minted
//! run id, then one JSON line per completed record. A torn final line
//! (crash mid-append) is discarded on load; corruption anywhere else is
//! an error.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::RunLogRecord;

use super::RunnerError;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub fingerprint: String,
    pub run_id: String,
}

#[derive(Debug)]
pub struct LoadedCheckpoint {
    pub header: CheckpointHeader,
    pub records: Vec<RunLogRecord>,
}

/// Loads a checkpoint if one exists. Duplicate item ids keep the first
/// occurrence (at-most-once semantics).
pub fn load_checkpoint(path: &Path) -> Result<Option<LoadedCheckpoint>, RunnerError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(|source| RunnerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines: Vec<&str> = text.split('\n').collect();
    if let Some(last) = lines.last() {
        if last.is_empty() {
            lines.pop();
        }
    }
    let Some(header_line) = lines.first() else {
        return Err(RunnerError::CheckpointCorrupt(
            "checkpoint file is empty".to_string(),
        ));
    };
    let header: CheckpointHeader = serde_json::from_str(header_line)
        .map_err(|e| RunnerError::CheckpointCorrupt(format!("bad header: {e}")))?;
    if header.version != CHECKPOINT_VERSION {
        return Err(RunnerError::CheckpointCorrupt(format!(
            "unsupported checkpoint version {}",
            header.version
        )));
    }
    let mut records: Vec<RunLogRecord> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let body = &lines[1..];
    for (idx, line) in body.iter().enumerate() {
        match serde_json::from_str::<RunLogRecord>(line) {
            Ok(record) => {
                if seen.insert(record.item_id.clone()) {
                    records.push(record);
                }
            }
            Err(e) if idx + 1 == body.len() => {
                // Torn final append from a crash; the item will re-run.
                let _ = e;
            }
            Err(e) => {
                return Err(RunnerError::CheckpointCorrupt(format!(
                    "record line {} unreadable: {e}",
                    idx + 2
                )));
            }
        }
    }
    Ok(Some(LoadedCheckpoint { header, records }))
}

/// Serialized appender for checkpoint records and span lines. One writer
/// per run; workers funnel through it.
pub struct RunWriter {
    checkpoint: BufWriter<File>,
    spans: BufWriter<File>,
}

impl RunWriter {
    /// Starts a fresh checkpoint with its header line.
    pub fn create(
        checkpoint_path: &Path,
        spans_path: &Path,
        header: &CheckpointHeader,
    ) -> Result<Self, RunnerError> {
        let mut writer = Self::open(checkpoint_path, spans_path, false)?;
        let line = serde_json::to_string(header).map_err(RunnerError::Serialize)?;
        writer
            .checkpoint
            .write_all(line.as_bytes())
            .and_then(|_| writer.checkpoint.write_all(b"\n"))
            .and_then(|_| writer.checkpoint.flush())
            .map_err(|source| RunnerError::Io {
                path: checkpoint_path.display().to_string(),
                source,
            })?;
        Ok(writer)
    }

    /// Reopens existing files for appending on resume.
    pub fn append_to(checkpoint_path: &Path, spans_path: &Path) -> Result<Self, RunnerError> {
        Self::open(checkpoint_path, spans_path, true)
    }

    fn open(checkpoint_path: &Path, spans_path: &Path, append: bool) -> Result<Self, RunnerError> {
        let open = |path: &Path| -> Result<File, RunnerError> {
            OpenOptions::new()
                .create(true)
                .append(append)
                .write(true)
                .truncate(!append)
                .open(path)
                .map_err(|source| RunnerError::Io {
                    path: path.display().to_string(),
                    source,
                })
        };
        Ok(Self {
            checkpoint: BufWriter::new(open(checkpoint_path)?),
            spans: BufWriter::new(open(spans_path)?),
        })
    }

    /// Appends one completed item: the checkpoint record first (flushed,
    /// so the item is never re-run), then its span lines. A crash between
    /// the two loses telemetry for the item, never duplicates it.
    pub fn append(
        &mut self,
        record: &RunLogRecord,
        span_lines: &[String],
    ) -> Result<(), RunnerError> {
        let line = serde_json::to_string(record).map_err(RunnerError::Serialize)?;
        self.checkpoint
            .write_all(line.as_bytes())
            .and_then(|_| self.checkpoint.write_all(b"\n"))
            .and_then(|_| self.checkpoint.flush())
            .map_err(|source| RunnerError::Io {
                path: "checkpoint".to_string(),
                source,
            })?;
        for span_line in span_lines {
            self.spans
                .write_all(span_line.as_bytes())
                .and_then(|_| self.spans.write_all(b"\n"))
                .map_err(|source| RunnerError::Io {
                    path: "spans".to_string(),
                    source,
                })?;
        }
        self.spans.flush().map_err(|source| RunnerError::Io {
            path: "spans".to_string(),
            source,
        })?;
        Ok(())
    }
}
