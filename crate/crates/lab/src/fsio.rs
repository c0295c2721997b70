//! File helpers: data-root resolution, atomic writes and content hashes.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

/// Environment variable that relative paths are resolved against.
pub const DATA_ROOT_VAR: &str = "RNNGLAB_DATA_ROOT";

pub fn resolve(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_ROOT_VAR) {
        Some(root) if !root.is_empty() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(LabError::io(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(LabError::io(path))
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(LabError::io(dir))?;
    tmp.write_all(bytes).map_err(LabError::io(path))?;
    tmp.as_file().sync_all().map_err(LabError::io(path))?;
    tmp.persist(path).map_err(|e| LabError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&read(path)?))
}

/// Drops `#` comment lines (provenance headers) from a line-oriented file.
pub fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        if !line.starts_with('#') {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}
