//! File formats and their readers and writers.

pub mod report;
pub mod schema;
pub mod tables;

use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use report::{sha256_hex, InputDigest, StatReport};
pub use schema::{
    parse_jsonl, parse_session, serialize_session, serialize_session_pretty, session_to_value, validate_jsonl,
    validate_session, Issue, IssueKind, ParseError, ParseOptions, Severity, ValidationReport,
};
pub use tables::{Table, TableError};

use crate::session::SessionLog;

/// Writes `data` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, data: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(data)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("{path}: {cause}")]
    Parse { path: PathBuf, cause: ParseError },
}

/// A parsed session with its origin.
#[derive(Debug, Clone)]
pub struct LoadedSession {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub log: SessionLog,
    pub warnings: Vec<Issue>,
}

pub fn is_jsonl(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson"))
}

/// Reads a `.json` session file or a `.jsonl` corpus, failing on the first
/// invalid session.
pub fn read_sessions(path: &Path, opts: ParseOptions) -> Result<(Vec<LoadedSession>, Vec<u8>), LoadError> {
    let bytes = std::fs::read(path).map_err(|cause| LoadError::Io { path: path.into(), cause })?;
    let text = String::from_utf8_lossy(&bytes);
    let parse_err = |cause| LoadError::Parse { path: path.into(), cause };
    let mut out = Vec::new();
    if is_jsonl(path) {
        let lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        for ((i, _), r) in lines.zip(parse_jsonl(&text, opts)) {
            let (log, warnings) = r.map_err(parse_err)?;
            out.push(LoadedSession { path: path.into(), line: Some(i + 1), log, warnings });
        }
    } else {
        let (log, warnings) = parse_session(&text, opts).map_err(parse_err)?;
        out.push(LoadedSession { path: path.into(), line: None, log, warnings });
    }
    Ok((out, bytes))
}

/// Sessions as JSONL, one compact line each.
pub fn to_jsonl<'a>(logs: impl IntoIterator<Item = &'a SessionLog>) -> String {
    let mut s = String::new();
    for l in logs {
        s.push_str(&serialize_session(l));
        s.push('\n');
    }
    s
}
