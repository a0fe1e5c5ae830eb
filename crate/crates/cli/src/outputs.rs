//! Artifact emission: traces, interrogation logs, summaries, generic
//! tables, and the reproducibility manifest. All emission is deterministic
//! (no timestamps, stable ordering, shortest round-trip float text) so a
//! rerun with the same manifest is byte-identical.

use crate::csvio::{self, CsvError};
use reisim_core::engine::{InterrogationRecord, ReadEvent, RunSummary};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Table emission format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

pub const TRACE_HEADER: [&str; 7] =
    ["t_s", "tag_id", "epc_hex", "round_index", "x_m", "y_m", "snr_db"];

pub fn trace_rows(trace: &[ReadEvent]) -> Vec<Vec<String>> {
    trace
        .iter()
        .map(|e| {
            vec![
                e.t_s.to_string(),
                e.tag_id.to_string(),
                e.epc_hex.clone(),
                e.round_index.to_string(),
                e.vehicle_pose_at_read.x_m.to_string(),
                e.vehicle_pose_at_read.y_m.to_string(),
                e.snr_at_read_db.to_string(),
            ]
        })
        .collect()
}

pub const INTERROGATION_HEADER: [&str; 6] =
    ["t_start_s", "t_end_s", "round_index", "slot_index", "outcome", "tag"];

pub fn interrogation_rows(records: &[InterrogationRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.t_start_s.to_string(),
                r.t_end_s.to_string(),
                r.round_index.to_string(),
                r.slot_index.to_string(),
                r.outcome.as_str().to_string(),
                r.tag.map(|t| t.to_string()).unwrap_or_default(),
            ]
        })
        .collect()
}

/// Parses an interrogation log written by `interrogation_rows`.
pub fn parse_interrogations_csv(text: &str) -> Result<Vec<InterrogationRecord>, CsvError> {
    let rows = csvio::parse_csv(text, &INTERROGATION_HEADER)?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let line = i + 2;
        out.push(InterrogationRecord {
            t_start_s: csvio::parse_field(&row[0], line, "t_start_s")?,
            t_end_s: csvio::parse_field(&row[1], line, "t_end_s")?,
            round_index: csvio::parse_field(&row[2], line, "round_index")?,
            slot_index: csvio::parse_field(&row[3], line, "slot_index")?,
            outcome: csvio::parse_field(&row[4], line, "outcome")?,
            tag: if row[5].is_empty() {
                None
            } else {
                Some(csvio::parse_field(&row[5], line, "tag")?)
            },
        });
    }
    Ok(out)
}

/// Flattens a run summary to rows of (metric, key, value) — the CSV form.
pub fn summary_rows(s: &RunSummary) -> Vec<Vec<String>> {
    let mut rows = vec![
        vec!["duration_s".into(), String::new(), s.duration_s.to_string()],
        vec!["total_reads".into(), String::new(), s.total_reads.to_string()],
        vec!["reads_per_second".into(), String::new(), s.reads_per_second.to_string()],
    ];
    for (tag, n) in &s.total_reads_per_tag {
        rows.push(vec!["reads_for_tag".into(), tag.to_string(), n.to_string()]);
    }
    for (tag, d) in &s.dwell_per_tag_s {
        rows.push(vec!["dwell_s_for_tag".into(), tag.to_string(), d.to_string()]);
    }
    for (kind, n) in &s.outcome_histogram {
        rows.push(vec!["slots_with_outcome".into(), kind.clone(), n.to_string()]);
    }
    rows
}

pub const SUMMARY_HEADER: [&str; 3] = ["metric", "key", "value"];

/// Renders a summary in the requested format.
pub fn summary_text(s: &RunSummary, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => csvio::to_csv(&SUMMARY_HEADER, &summary_rows(s)),
        OutputFormat::Json => to_pretty_json(s),
    }
}

/// Serializes any value as pretty JSON with a trailing newline.
pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

/// Renders a table of serializable row structs in the requested format.
/// CSV columns come from `header` and `row_fields`; JSON is the array of
/// row objects.
pub fn table_text<T: Serialize>(
    header: &[&str],
    rows: &[T],
    row_fields: impl Fn(&T) -> Vec<String>,
    format: OutputFormat,
) -> String {
    match format {
        OutputFormat::Csv => {
            let string_rows: Vec<Vec<String>> = rows.iter().map(row_fields).collect();
            csvio::to_csv(header, &string_rows)
        }
        OutputFormat::Json => to_pretty_json(&rows),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reproducibility record written next to every artifact set. Rerunning
/// the producing command with an identical manifest reproduces all listed
/// files byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    /// Command or recipe that produced the artifacts.
    pub name: String,
    pub seed: u64,
    pub replications: u32,
    /// SHA-256 over the canonical JSON of the complete configuration.
    pub config_sha256: String,
    /// Artifact file names (relative to the manifest), sorted.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(name: &str, seed: u64, replications: u32, config_bytes: &[u8]) -> Self {
        Self {
            name: name.to_string(),
            seed,
            replications,
            config_sha256: sha256_hex(config_bytes),
            outputs: Vec::new(),
        }
    }
}

/// Writes a set of named files into `dir` (created if needed), plus a
/// manifest listing them. If any write fails, every file this call already
/// created is removed.
pub fn write_artifacts(
    dir: &Path,
    mut manifest: Manifest,
    files: &[(String, String)],
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    manifest.outputs = files.iter().map(|(name, _)| name.clone()).collect();
    manifest.outputs.sort();

    let mut written: Vec<PathBuf> = Vec::new();
    let write_one = |name: &str, content: &str, written: &mut Vec<PathBuf>| -> std::io::Result<()> {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path)?;
        written.push(path);
        f.write_all(content.as_bytes())?;
        Ok(())
    };

    let result = (|| {
        for (name, content) in files {
            write_one(name, content, &mut written)?;
        }
        write_one("manifest.json", &to_pretty_json(&manifest), &mut written)?;
        Ok(())
    })();

    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for path in &written {
                let _ = std::fs::remove_file(path);
            }
            Err(e)
        }
    }
}
