//! SessionLog wire format: one JSON object per session, or JSONL corpora
//! with one session per line.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Number, Value};
use thiserror::Error;

use crate::session::{
    Choice, Condition, DdtOffer, Device, SessionKind, SessionLog, Side, Task, TrialKind, TrialRecord,
    COHERENCE_SET, SCHEMA_VERSION, SSD_SET_MS,
};
use crate::trajectory::{Point, PointerSample, Trajectory, TrajectoryError, DEFAULT_START};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Schema,
    Monotonicity,
    Range,
    UnknownField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// One finding from validation, located by input line and field path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial_id: Option<u32>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if !self.path.is_empty() {
            write!(f, "{}", self.path)?;
            if let Some(id) = self.trial_id {
                write!(f, " (trial_id {id})")?;
            }
            write!(f, ": ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("schema error: {0}")]
    Schema(Issue),
    #[error("non-monotone timestamps: {0}")]
    Monotonicity(Issue),
    #[error("value out of range: {0}")]
    Range(Issue),
}

impl ParseError {
    pub fn issue(&self) -> &Issue {
        match self {
            ParseError::Schema(i) | ParseError::Monotonicity(i) | ParseError::Range(i) => i,
        }
    }

    fn from_issue(i: Issue) -> Self {
        match i.kind {
            IssueKind::Monotonicity => ParseError::Monotonicity(i),
            IssueKind::Range => ParseError::Range(i),
            IssueKind::Schema | IssueKind::UnknownField => ParseError::Schema(i),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Out-of-set SSD/coherence values become errors instead of warnings.
    pub strict: bool,
}

/// Every error and warning found in one session.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial_count: Option<usize>,
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

/// Sample encoded as `[t_ms, x, y]` with an integer timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
struct WireSample(f64, f64, f64);

impl Serialize for WireSample {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = s.serialize_tuple(3)?;
        if self.0.fract() == 0.0 && self.0.abs() < 9.0e15 {
            t.serialize_element(&(self.0 as i64))?;
        } else {
            t.serialize_element(&self.0)?;
        }
        t.serialize_element(&self.1)?;
        t.serialize_element(&self.2)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for WireSample {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (t, x, y) = <(Number, f64, f64)>::deserialize(d)?;
        let t = match (t.as_u64(), t.as_i64()) {
            (Some(u), _) => u as f64,
            (None, Some(i)) => i as f64,
            _ => {
                let f = t.as_f64().unwrap_or(f64::NAN);
                if f.fract() != 0.0 {
                    return Err(serde::de::Error::custom(format!("t_ms must be an integer, got {t}")));
                }
                f
            }
        };
        Ok(WireSample(t, x, y))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WireTrial {
    trial_id: u32,
    task: Task,
    condition: Condition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<TrialKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coherence: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ssd_ms: Option<f64>,
    responded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rt_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choice: Option<Choice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amount_ss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delay_ss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amount_ll: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delay_ll: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    is_control: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ll_side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    valence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arousal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<[f64; 2]>,
    samples: Vec<WireSample>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WireHeader {
    schema_version: u32,
    subject_id: String,
    session: SessionKind,
    device: Device,
    created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    scale_scores: BTreeMap<String, f64>,
}

const SESSION_FIELDS: &[&str] = &["schema_version", "subject_id", "session", "device", "created_at", "trials", "scale_scores"];

struct Checker<'a> {
    line: Option<usize>,
    opts: ParseOptions,
    issues: &'a mut Vec<Issue>,
}

impl Checker<'_> {
    fn push(&mut self, kind: IssueKind, severity: Severity, path: String, trial_id: Option<u32>, message: String) {
        self.issues.push(Issue { kind, severity, line: self.line, path, trial_id, message });
    }

    fn error(&mut self, kind: IssueKind, path: String, trial_id: Option<u32>, message: String) {
        self.push(kind, Severity::Error, path, trial_id, message);
    }

    fn range(&mut self, path: String, trial_id: Option<u32>, message: String) {
        let sev = if self.opts.strict { Severity::Error } else { Severity::Warning };
        self.push(IssueKind::Range, sev, path, trial_id, message);
    }
}

fn serde_message(e: &serde_json::Error) -> String {
    let s = e.to_string();
    // drop serde's own position suffix; positions are meaningless for `from_value`
    match s.find(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

fn point(p: Option<[f64; 2]>) -> Option<Point> {
    p.map(|[x, y]| Point::new(x, y))
}

fn check_trial(c: &mut Checker, path: &str, w: WireTrial) -> Option<TrialRecord> {
    let id = Some(w.trial_id);
    let before = c.issues.iter().filter(|i| i.severity == Severity::Error).count();
    let field = |f: &str| format!("{path}.{f}");

    for key in w.extra.keys() {
        c.push(IssueKind::UnknownField, Severity::Warning, field(key), id, "unknown field preserved".into());
    }

    match w.task {
        Task::Sst => {
            match w.kind {
                None => c.error(IssueKind::Schema, field("kind"), id, "stop-signal trials need kind (go or stop)".into()),
                Some(TrialKind::Stop) => match w.ssd_ms {
                    None => c.error(IssueKind::Schema, field("ssd_ms"), id, "stop trial is missing ssd_ms".into()),
                    Some(s) if !(s.is_finite() && s >= 0.0) => {
                        c.error(IssueKind::Schema, field("ssd_ms"), id, format!("ssd_ms must be non-negative, got {s}"))
                    }
                    Some(s) if !SSD_SET_MS.iter().any(|&v| v as f64 == s) => {
                        c.range(field("ssd_ms"), id, format!("ssd_ms {s} is outside {SSD_SET_MS:?}"))
                    }
                    _ => {}
                },
                Some(TrialKind::Go) => {
                    if w.ssd_ms.is_some() {
                        c.error(IssueKind::Schema, field("ssd_ms"), id, "go trial must not carry ssd_ms".into());
                    }
                }
            }
            if let Some(coh) = w.coherence {
                if !COHERENCE_SET.contains(&coh) {
                    c.range(field("coherence"), id, format!("coherence {coh} is outside {COHERENCE_SET:?}"));
                }
            }
            if w.choice.is_some() {
                c.error(IssueKind::Schema, field("choice"), id, "choice is only valid on ddt trials".into());
            }
        }
        Task::Ddt => {
            if w.kind.is_some() {
                c.error(IssueKind::Schema, field("kind"), id, "kind is only valid on sst trials".into());
            }
            if w.ssd_ms.is_some() {
                c.error(IssueKind::Schema, field("ssd_ms"), id, "ssd_ms is only valid on sst trials".into());
            }
            for (name, v) in [
                ("amount_ss", w.amount_ss),
                ("delay_ss", w.delay_ss),
                ("amount_ll", w.amount_ll),
                ("delay_ll", w.delay_ll),
            ] {
                match v {
                    None => c.error(IssueKind::Schema, field(name), id, format!("ddt trial is missing {name}")),
                    Some(x) if !(x.is_finite() && x >= 0.0) => {
                        c.error(IssueKind::Schema, field(name), id, format!("{name} must be non-negative, got {x}"))
                    }
                    _ => {}
                }
            }
            if w.responded && w.choice.is_none() {
                c.error(IssueKind::Schema, field("choice"), id, "answered ddt trial is missing choice".into());
            }
        }
    }

    match (w.responded, w.rt_ms) {
        (true, None) => c.error(IssueKind::Schema, field("rt_ms"), id, "responded trial is missing rt_ms".into()),
        (true, Some(rt)) if !(rt.is_finite() && rt >= 0.0) => {
            c.error(IssueKind::Schema, field("rt_ms"), id, format!("rt_ms must be non-negative, got {rt}"))
        }
        (false, Some(_)) => c.error(IssueKind::Schema, field("rt_ms"), id, "rt_ms given on a trial without response".into()),
        _ => {}
    }
    for (name, v) in [("valence", w.valence), ("arousal", w.arousal)] {
        if let Some(x) = v {
            if !(0.0..=1.0).contains(&x) {
                c.error(IssueKind::Range, field(name), id, format!("{name} must be in [0, 1], got {x}"));
            }
        }
    }

    let samples: Vec<PointerSample> = w.samples.iter().map(|s| PointerSample::new(s.0, s.1, s.2)).collect();
    let trajectory = match Trajectory::with_endpoints(samples, point(w.start).unwrap_or(DEFAULT_START), point(w.target)) {
        Ok(t) => Some(t),
        Err(TrajectoryError::NonMonotonic { index, previous_ms, current_ms }) => {
            c.error(
                IssueKind::Monotonicity,
                format!("{path}.samples[{index}]"),
                id,
                format!("t_ms {current_ms} does not increase past {previous_ms}"),
            );
            None
        }
        Err(TrajectoryError::InvalidSample { index }) => {
            c.error(IssueKind::Schema, format!("{path}.samples[{index}]"), id, "t_ms must be non-negative".into());
            None
        }
        Err(e @ TrajectoryError::InvalidEndpoint(_)) => {
            c.error(IssueKind::Schema, path.to_string(), id, e.to_string());
            None
        }
    };

    let errors = c.issues.iter().filter(|i| i.severity == Severity::Error).count();
    if errors > before {
        return None;
    }
    let offer = (w.task == Task::Ddt).then(|| DdtOffer {
        amount_ss: w.amount_ss.unwrap_or_default(),
        delay_ss: w.delay_ss.unwrap_or_default(),
        amount_ll: w.amount_ll.unwrap_or_default(),
        delay_ll: w.delay_ll.unwrap_or_default(),
        is_control: w.is_control.unwrap_or(false),
        ll_side: w.ll_side,
    });
    Some(TrialRecord {
        trial_id: w.trial_id,
        task: w.task,
        condition: w.condition,
        kind: w.kind,
        coherence: w.coherence,
        ssd_ms: w.ssd_ms,
        responded: w.responded,
        rt_ms: w.rt_ms,
        correct: w.correct,
        choice: w.choice,
        offer,
        valence: w.valence,
        arousal: w.arousal,
        trajectory: trajectory?,
        extra: w.extra,
    })
}

fn check_value(c: &mut Checker, mut v: Value) -> Option<SessionLog> {
    let Some(obj) = v.as_object_mut() else {
        c.error(IssueKind::Schema, String::new(), None, "session must be a JSON object".into());
        return None;
    };
    match obj.get("schema_version").and_then(Value::as_u64) {
        Some(n) if n == SCHEMA_VERSION as u64 => {}
        Some(n) => {
            c.error(IssueKind::Schema, "schema_version".into(), None, format!("unsupported schema_version {n} (expected {SCHEMA_VERSION})"));
            return None;
        }
        None => {}
    }
    let trials_value = obj.remove("trials");
    let mut extra = BTreeMap::new();
    for key in obj.keys().filter(|k| !SESSION_FIELDS.contains(&k.as_str())).cloned().collect::<Vec<_>>() {
        c.push(IssueKind::UnknownField, Severity::Warning, key.clone(), None, "unknown field preserved".into());
        extra.insert(key.clone(), obj.remove(&key).unwrap_or(Value::Null));
    }
    let header = match serde_json::from_value::<WireHeader>(v) {
        Ok(h) => Some(h),
        Err(e) => {
            c.error(IssueKind::Schema, String::new(), None, serde_message(&e));
            None
        }
    };
    let raw_trials = match trials_value {
        Some(Value::Array(a)) => a,
        Some(_) => {
            c.error(IssueKind::Schema, "trials".into(), None, "trials must be an array".into());
            return None;
        }
        None => {
            c.error(IssueKind::Schema, "trials".into(), None, "missing field `trials`".into());
            return None;
        }
    };

    let mut seen = HashSet::new();
    let mut trials = Vec::with_capacity(raw_trials.len());
    for (i, tv) in raw_trials.into_iter().enumerate() {
        let path = format!("trials[{i}]");
        let id = tv.get("trial_id").and_then(Value::as_u64).and_then(|x| u32::try_from(x).ok());
        if let Some(id) = id {
            if !seen.insert(id) {
                c.error(IssueKind::Schema, format!("{path}.trial_id"), Some(id), "duplicate trial_id".into());
            }
        }
        match serde_json::from_value::<WireTrial>(tv) {
            Ok(w) => {
                if let Some(t) = check_trial(c, &path, w) {
                    trials.push(t);
                }
            }
            Err(e) => c.error(IssueKind::Schema, path, id, serde_message(&e)),
        }
    }
    let header = header?;
    if c.issues.iter().any(|i| i.severity == Severity::Error) {
        return None;
    }
    Some(SessionLog {
        schema_version: header.schema_version,
        subject_id: header.subject_id,
        session: header.session,
        device: header.device,
        created_at: header.created_at,
        trials,
        scale_scores: header.scale_scores,
        extra,
    })
}

fn check_text(text: &str, line: Option<usize>, opts: ParseOptions) -> (Option<SessionLog>, Vec<Issue>) {
    let mut issues = Vec::new();
    let mut c = Checker { line, opts, issues: &mut issues };
    let log = match serde_json::from_str::<Value>(text) {
        Ok(v) => check_value(&mut c, v),
        Err(e) => {
            let l = line.unwrap_or(e.line());
            c.line = Some(l);
            c.error(IssueKind::Schema, String::new(), None, format!("malformed JSON at column {}: {}", e.column(), serde_message(&e)));
            None
        }
    };
    (log, issues)
}

/// Parses and validates one session; returns it with any warnings, or the
/// first error found.
pub fn parse_session(text: &str, opts: ParseOptions) -> Result<(SessionLog, Vec<Issue>), ParseError> {
    parse_at(text, None, opts)
}

fn parse_at(text: &str, line: Option<usize>, opts: ParseOptions) -> Result<(SessionLog, Vec<Issue>), ParseError> {
    let (log, issues) = check_text(text, line, opts);
    let (errors, warnings): (Vec<_>, Vec<_>) = issues.into_iter().partition(|i| i.severity == Severity::Error);
    match (log, errors.into_iter().next()) {
        (Some(log), None) => Ok((log, warnings)),
        (_, Some(e)) => Err(ParseError::from_issue(e)),
        (None, None) => unreachable!("a rejected session always records an error"),
    }
}

/// Collects every error and warning instead of stopping at the first.
pub fn validate_session(text: &str, opts: ParseOptions) -> ValidationReport {
    report_from(check_text(text, None, opts))
}

fn report_from((log, issues): (Option<SessionLog>, Vec<Issue>)) -> ValidationReport {
    let (errors, warnings): (Vec<_>, Vec<_>) = issues.into_iter().partition(|i| i.severity == Severity::Error);
    ValidationReport {
        valid: errors.is_empty(),
        subject_id: log.as_ref().map(|l| l.subject_id.clone()),
        trial_count: log.as_ref().map(|l| l.trials.len()),
        errors,
        warnings,
    }
}

/// One JSONL corpus: each non-blank line is a session. Line numbers are 1-based.
pub fn parse_jsonl(text: &str, opts: ParseOptions) -> Vec<Result<(SessionLog, Vec<Issue>), ParseError>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_at(l, Some(i + 1), opts))
        .collect()
}

/// Validation reports for each JSONL line.
pub fn validate_jsonl(text: &str, opts: ParseOptions) -> Vec<ValidationReport> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| report_from(check_text(l, Some(i + 1), opts)))
        .collect()
}

fn to_wire_trial(t: &TrialRecord) -> WireTrial {
    let o = t.offer;
    let tr = &t.trajectory;
    WireTrial {
        trial_id: t.trial_id,
        task: t.task,
        condition: t.condition,
        kind: t.kind,
        coherence: t.coherence,
        ssd_ms: t.ssd_ms,
        responded: t.responded,
        rt_ms: t.rt_ms,
        correct: t.correct,
        choice: t.choice,
        amount_ss: o.map(|o| o.amount_ss),
        delay_ss: o.map(|o| o.delay_ss),
        amount_ll: o.map(|o| o.amount_ll),
        delay_ll: o.map(|o| o.delay_ll),
        is_control: o.map(|o| o.is_control),
        ll_side: o.and_then(|o| o.ll_side),
        valence: t.valence,
        arousal: t.arousal,
        start: (tr.start() != DEFAULT_START).then(|| [tr.start().x, tr.start().y]),
        target: tr.target().map(|p| [p.x, p.y]),
        samples: tr.samples().iter().map(|s| WireSample(s.t, s.x, s.y)).collect(),
        extra: t.extra.clone(),
    }
}

#[derive(Serialize)]
struct WireSessionOut<'a> {
    #[serde(flatten)]
    header: WireHeader,
    trials: Vec<WireTrial>,
    #[serde(flatten)]
    extra: &'a BTreeMap<String, Value>,
}

fn wire(log: &SessionLog) -> WireSessionOut<'_> {
    WireSessionOut {
        header: WireHeader {
            schema_version: log.schema_version,
            subject_id: log.subject_id.clone(),
            session: log.session,
            device: log.device,
            created_at: log.created_at,
            scale_scores: log.scale_scores.clone(),
        },
        trials: log.trials.iter().map(to_wire_trial).collect(),
        extra: &log.extra,
    }
}

/// Compact single-line JSON, suitable as a JSONL record.
pub fn serialize_session(log: &SessionLog) -> String {
    serde_json::to_string(&wire(log)).expect("session serializes")
}

pub fn serialize_session_pretty(log: &SessionLog) -> String {
    serde_json::to_string_pretty(&wire(log)).expect("session serializes")
}

/// The session as a JSON value, with the same layout as [`serialize_session`].
pub fn session_to_value(log: &SessionLog) -> Value {
    serde_json::to_value(wire(log)).expect("session serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "schema_version": 1,
            "subject_id": "p01",
            "session": "neutral",
            "device": "mouse",
            "created_at": "2024-03-01T12:00:00Z",
            "trials": [{
                "trial_id": 1, "task": "sst", "condition": "neutral", "kind": "stop",
                "coherence": 50, "ssd_ms": 200, "responded": true, "rt_ms": 640, "correct": true,
                "samples": [[0, 0.0, -0.8], [16, 0.01, -0.78], [32, 0.05, -0.7]]
            }]
        })
    }

    // integers and integral floats compare equal after this
    fn norm(v: &Value) -> Value {
        match v {
            Value::Number(n) => json!(n.as_f64().unwrap()),
            Value::Array(a) => Value::Array(a.iter().map(norm).collect()),
            Value::Object(o) => Value::Object(o.iter().map(|(k, x)| (k.clone(), norm(x))).collect()),
            other => other.clone(),
        }
    }

    fn round_trips(v: &Value, log: &SessionLog) {
        let back: Value = serde_json::from_str(&serialize_session(log)).unwrap();
        assert_eq!(norm(&back), norm(v));
    }

    fn parse(v: &Value) -> Result<(SessionLog, Vec<Issue>), ParseError> {
        parse_session(&v.to_string(), ParseOptions::default())
    }

    #[test]
    fn minimal_round_trip() {
        let v = minimal();
        let (log, warnings) = parse(&v).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(log.trials[0].ssd_ms, Some(200.0));
        round_trips(&v, &log);
    }

    #[test]
    fn stop_trial_without_ssd_names_trial() {
        let mut v = minimal();
        v["trials"][0].as_object_mut().unwrap().remove("ssd_ms");
        let e = parse(&v).unwrap_err();
        assert!(matches!(e, ParseError::Schema(_)));
        assert_eq!(e.issue().trial_id, Some(1));
        assert!(e.to_string().contains("trial_id 1"), "{e}");
    }

    #[test]
    fn non_monotone_timestamps() {
        let mut v = minimal();
        v["trials"][0]["samples"] = json!([[0, 0.0, -0.8], [16, 0.0, -0.7], [16, 0.0, -0.6]]);
        let e = parse(&v).unwrap_err();
        assert!(matches!(e, ParseError::Monotonicity(_)));
        assert_eq!(e.issue().path, "trials[0].samples[2]");
    }

    #[test]
    fn fractional_timestamp_rejected() {
        let mut v = minimal();
        v["trials"][0]["samples"] = json!([[0, 0.0, -0.8], [16.5, 0.0, -0.7]]);
        assert!(matches!(parse(&v), Err(ParseError::Schema(_))));
    }

    #[test]
    fn unknown_version_rejected() {
        let mut v = minimal();
        v["schema_version"] = json!(2);
        assert!(parse(&v).unwrap_err().to_string().contains("schema_version"));
    }

    #[test]
    fn out_of_set_ssd_warns_or_fails() {
        let mut v = minimal();
        v["trials"][0]["ssd_ms"] = json!(250);
        let (_, w) = parse(&v).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].kind, IssueKind::Range);
        let e = parse_session(&v.to_string(), ParseOptions { strict: true }).unwrap_err();
        assert!(matches!(e, ParseError::Range(_)));
    }

    #[test]
    fn unknown_fields_preserved_and_flagged() {
        let mut v = minimal();
        v["runner"] = json!({"dot_speed": 3});
        v["trials"][0]["slider_untouched"] = json!(true);
        let (log, w) = parse(&v).unwrap();
        assert_eq!(w.iter().filter(|i| i.kind == IssueKind::UnknownField).count(), 2);
        round_trips(&v, &log);
    }

    #[test]
    fn validation_collects_all_errors() {
        let mut v = minimal();
        let mut t2 = v["trials"][0].clone();
        t2["rt_ms"] = Value::Null;
        v["trials"].as_array_mut().unwrap().push(t2);
        let r = validate_session(&v.to_string(), ParseOptions::default());
        assert!(!r.valid);
        assert_eq!(r.errors.len(), 2, "{:?}", r.errors);
    }

    #[test]
    fn malformed_json_has_line() {
        let r = parse_session("{\n\"schema_version\": 1,\n oops", ParseOptions::default()).unwrap_err();
        assert_eq!(r.issue().line, Some(3));
    }

    #[test]
    fn jsonl_lines_are_numbered() {
        let good = minimal().to_string();
        let text = format!("{good}\n\n{{\"bad\": 1}}\n");
        let out = parse_jsonl(&text, ParseOptions::default());
        assert!(out[0].is_ok());
        assert_eq!(out[1].as_ref().unwrap_err().issue().line, Some(3));
    }

    #[test]
    fn ddt_offer_fields() {
        let v = json!({
            "schema_version": 1, "subject_id": "p", "session": "emotional", "device": "trackpad",
            "created_at": "2024-03-01T12:00:00Z", "scale_scores": {"UPPS_NU": 2.5},
            "trials": [{
                "trial_id": 0, "task": "ddt", "condition": "pleasant", "responded": true, "rt_ms": 900,
                "choice": "larger_later", "amount_ss": 40, "delay_ss": 0, "amount_ll": 100, "delay_ll": 30,
                "is_control": false, "ll_side": "left", "valence": 0.2, "arousal": 0.9,
                "target": [-0.8, 0.8], "samples": [[0, 0.0, -0.8], [16, -0.1, -0.6]]
            }]
        });
        let (log, _) = parse(&v).unwrap();
        assert_eq!(log.trials[0].offer.unwrap().ll_side, Some(Side::Left));
        round_trips(&v, &log);
        let mut bad = v.clone();
        bad["trials"][0].as_object_mut().unwrap().remove("amount_ll");
        assert!(parse(&bad).is_err());
    }
}
