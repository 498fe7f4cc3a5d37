//! Local collection server: serves the task-runner bundle at `/` and
//! appends validated uploads to `sessions.jsonl`.
//!
//! There is no authentication; bind it to localhost.

use std::fs::OpenOptions;
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

use crate::io::{serialize_session, validate_session, ParseOptions};

pub const SESSIONS_FILE: &str = "sessions.jsonl";
pub const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

const PLACEHOLDER: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>impulsekit collect</title></head>\n<body><p>No task-runner bundle configured. Start the server with <code>--assets DIR</code>.</p>\n<p>Uploads: <code>POST /api/sessions</code>.</p></body></html>\n";

#[derive(Debug, Clone)]
pub struct CollectConfig {
    pub out_dir: PathBuf,
    /// Directory holding the runner's static files (`index.html` etc.).
    pub assets: Option<PathBuf>,
    pub parse: ParseOptions,
}

struct AppState {
    out_file: PathBuf,
    parse: ParseOptions,
    append: Mutex<()>,
}

/// Drops a trailing partial line left by an interrupted write, so every
/// line in the file parses.
pub fn repair_tail(path: &Path) -> std::io::Result<()> {
    let mut f = match OpenOptions::new().read(true).write(true).open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(e),
    };
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)?;
    if buf.is_empty() || buf.ends_with(b"\n") {
        return Ok(());
    }
    let keep = buf.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    f.set_len(keep as u64)?;
    f.seek(SeekFrom::End(0))?;
    f.sync_all()
}

fn append_line(path: &Path, line: &str) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = Vec::with_capacity(line.len() + 1);
    buf.extend_from_slice(line.as_bytes());
    buf.push(b'\n');
    f.write_all(&buf)?;
    f.sync_data()
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({ "error": msg.into() }))).into_response()
}

async fn upload(State(st): State<Arc<AppState>>, body: Bytes) -> Response {
    let Ok(text) = std::str::from_utf8(&body) else {
        return error(StatusCode::BAD_REQUEST, "body is not UTF-8");
    };
    if serde_json::from_str::<serde_json::Value>(text).is_err() {
        return error(StatusCode::BAD_REQUEST, "body is not valid JSON");
    }
    let report = validate_session(text, st.parse);
    if !report.valid {
        return (StatusCode::UNPROCESSABLE_ENTITY, Json(report)).into_response();
    }
    let (log, _) = match crate::io::parse_session(text, st.parse) {
        Ok(x) => x,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    let line = serialize_session(&log);
    let written = {
        let _guard = st.append.lock().await;
        let path = st.out_file.clone();
        tokio::task::spawn_blocking(move || append_line(&path, &line)).await
    };
    match written {
        Ok(Ok(())) => (
            StatusCode::CREATED,
            Json(json!({
                "subject_id": log.subject_id,
                "trial_count": log.trials.len(),
                "warnings": report.warnings,
            })),
        )
            .into_response(),
        Ok(Err(e)) => error(StatusCode::INSUFFICIENT_STORAGE, format!("could not store session: {e}")),
        Err(e) => error(StatusCode::INSUFFICIENT_STORAGE, format!("could not store session: {e}")),
    }
}

pub fn router(cfg: &CollectConfig) -> std::io::Result<Router> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let out_file = cfg.out_dir.join(SESSIONS_FILE);
    repair_tail(&out_file)?;
    let state = Arc::new(AppState { out_file, parse: cfg.parse, append: Mutex::new(()) });
    let api = Router::new()
        .route("/api/sessions", post(upload))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state);
    Ok(match &cfg.assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    })
}

/// Serves on an already-bound listener until the task is dropped.
pub async fn serve(listener: TcpListener, cfg: CollectConfig) -> std::io::Result<()> {
    let app = router(&cfg)?;
    axum::serve(listener, app).await
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(SESSIONS_FILE);
        std::fs::write(&p, "{\"a\":1}\n{\"b\":").unwrap();
        repair_tail(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "{\"a\":1}\n");
        repair_tail(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "{\"a\":1}\n");
        repair_tail(&dir.path().join("missing")).unwrap();
    }
}
