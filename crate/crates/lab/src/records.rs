//! Surprisal tables: tab-separated, one row per token, with `#` comment
//! lines on top carrying provenance and scoring notes.
//!
//! Columns: `suite item condition region token_idx token surprisal_bits model`.
//! Tokens never contain whitespace, so fields are written unquoted.

use std::path::Path;

use rnnglab_core::SurprisalRecord;

use crate::error::{LabError, Result};
use crate::fsio;
use crate::provenance::Provenance;

pub const COLUMNS: [&str; 8] = ["suite", "item", "condition", "region", "token_idx", "token", "surprisal_bits", "model"];

/// Serializes records under a comment header.
pub fn to_tsv(provenance: Option<&Provenance>, notes: &[String], records: &[SurprisalRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    if let Some(p) = provenance {
        out.extend_from_slice(p.header_lines().as_bytes());
    }
    for n in notes {
        out.extend_from_slice(format!("# {n}\n").as_bytes());
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).delimiter(b'\t').quote_style(csv::QuoteStyle::Never).from_writer(out);
    w.write_record(COLUMNS).expect("writing to memory");
    for r in records {
        w.serialize(r).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn write_tsv(path: &Path, provenance: Option<&Provenance>, notes: &[String], records: &[SurprisalRecord]) -> Result<()> {
    fsio::write_atomic(path, &to_tsv(provenance, notes, records))
}

/// Parses a table, skipping `#` lines. Column order is taken from the
/// header, so extra columns are ignored and external tables work as long as
/// the required columns are present.
pub fn from_tsv(bytes: &[u8], path: &Path) -> Result<Vec<SurprisalRecord>> {
    let mut r = csv::ReaderBuilder::new().delimiter(b'\t').quoting(false).comment(Some(b'#')).from_reader(bytes);
    let headers = r.headers().map_err(|e| LabError::format(path, e))?.clone();
    for c in COLUMNS {
        if !headers.iter().any(|h| h == c) {
            return Err(LabError::format(path, format!("missing column `{c}`")));
        }
    }
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<SurprisalRecord>().enumerate() {
        let rec = row.map_err(|e| LabError::format(path, format!("row {}: {e}", i + 1)))?;
        if !rec.surprisal_bits.is_finite() || rec.surprisal_bits < 0.0 {
            return Err(LabError::format(path, format!("row {}: surprisal {} is not a finite non-negative number", i + 1, rec.surprisal_bits)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_tsv(path: &Path) -> Result<Vec<SurprisalRecord>> {
    let path = fsio::resolve(path);
    from_tsv(&fsio::read(&path)?, &path)
}

/// The `#` comment lines of a table, without the marker.
pub fn comments(bytes: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(bytes)
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect()
}
