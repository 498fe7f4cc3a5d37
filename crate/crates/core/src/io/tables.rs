//! CSV tables. Missing values are empty fields; option values that shaped a
//! row are written as columns of the row.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use super::write_atomic;
use crate::discounting::ModelVariant;
use crate::metrics::{MetricsOptions, SubjectSummary, Verdict};
use crate::session::{SessionLog, TrialRecord};
use crate::simulator::GroundTruth;
use crate::trajectory::AccelerationMode;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("no column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    NotANumber { row: usize, column: String, value: String },
    #[error("row {row} has {found} fields, header has {expected}")]
    RowLength { row: usize, found: usize, expected: usize },
}

/// A string table with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt_str<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn snake<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Result<usize, TableError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TableError::MissingColumn(name.to_string()))
    }

    pub fn text(&self, name: &str) -> Result<Vec<&str>, TableError> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    /// Numeric column; empty fields are `None`.
    pub fn numbers(&self, name: &str) -> Result<Vec<Option<f64>>, TableError> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let v = row[i].trim();
                if v.is_empty() {
                    return Ok(None);
                }
                v.parse::<f64>().map(Some).map_err(|_| TableError::NotANumber {
                    row: r + 1,
                    column: name.to_string(),
                    value: v.to_string(),
                })
            })
            .collect()
    }

    /// Adds a column, or overwrites it when it already exists.
    pub fn set_column(&mut self, name: &str, values: Vec<String>) {
        assert_eq!(values.len(), self.rows.len());
        match self.header.iter().position(|h| h == name) {
            Some(i) => {
                for (row, v) in self.rows.iter_mut().zip(values) {
                    row[i] = v;
                }
            }
            None => {
                self.header.push(name.to_string());
                for (row, v) in self.rows.iter_mut().zip(values) {
                    row.push(v);
                }
            }
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, TableError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| TableError::Io(e.into_error()))
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self, TableError> {
        let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(TableError::RowLength { row: i + 1, found: rec.len(), expected: header.len() });
            }
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self, TableError> {
        Self::from_csv(&std::fs::read(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), TableError> {
        write_atomic(path, &self.to_csv()?)?;
        Ok(())
    }
}

pub const FEATURE_COLUMNS: &[&str] = &[
    "subject_id",
    "trial_id",
    "task",
    "condition",
    "kind",
    "responded",
    "rt_ms",
    "ssd_ms",
    "total_distance",
    "max_velocity",
    "max_acceleration",
    "auc",
    "stopping_distance",
    "chord_fallback",
    "acceleration_mode",
    "error",
];

fn feature_row(subject: &str, t: &TrialRecord, mode: AccelerationMode) -> Vec<String> {
    let stop_onset = if t.is_stop() { t.ssd_ms } else { None };
    let mut row = vec![
        subject.to_string(),
        t.trial_id.to_string(),
        t.task.to_string(),
        t.condition.to_string(),
        opt_str(t.kind),
        t.responded.to_string(),
        opt(t.rt_ms),
        opt(t.ssd_ms),
    ];
    match t.trajectory.features(stop_onset, mode) {
        Ok(f) => row.extend([
            num(f.total_distance),
            num(f.max_velocity),
            num(f.max_acceleration),
            opt(f.auc),
            opt(f.stopping_distance),
            f.chord_fallback.to_string(),
            snake(&mode),
            String::new(),
        ]),
        Err(e) => {
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.extend([snake(&mode), e.to_string()]);
        }
    }
    row
}

/// One row per trial; trials whose features cannot be computed keep their
/// row with the reason in `error`.
pub fn feature_table<'a>(logs: impl IntoIterator<Item = &'a SessionLog>, mode: AccelerationMode) -> Table {
    let mut t = Table::new(FEATURE_COLUMNS.iter().copied());
    for log in logs {
        for trial in &log.trials {
            t.push(feature_row(&log.subject_id, trial, mode));
        }
    }
    t
}

pub const SUMMARY_COLUMNS: &[&str] = &[
    "subject_id",
    "condition",
    "n_go",
    "n_stop",
    "stop_failure_rate",
    "commission_convention",
    "commission_error",
    "ssrt",
    "ssrt_status",
    "go_rt_mean",
    "go_rt_sd",
    "stop_rt_mean",
    "stop_rt_sd",
    "go_accuracy",
    "go_max_velocity_sd",
    "mean_stopping_distance",
    "k",
    "log10_k",
    "beta",
    "dd_log_likelihood",
    "dd_at_bound",
    "dd_degenerate_choices",
    "control_consistency",
    "omission_policy",
    "quantile_rule",
    "model_variant",
    "acceleration_mode",
    "policy",
    "verdict",
];

/// Subject summaries with their verdicts, followed by one column per scale score.
pub fn summary_table(rows: &[(SubjectSummary, Option<Verdict>)], opts: &MetricsOptions, policy: &str) -> Table {
    let scales: BTreeSet<&String> = rows.iter().flat_map(|(s, _)| s.scale_scores.keys()).collect();
    let mut t = Table::new(SUMMARY_COLUMNS.iter().map(|s| s.to_string()).chain(scales.iter().map(|s| s.to_string())));
    for (s, verdict) in rows {
        let fit = s.discount_fit.as_ref();
        let mut row = vec![
            s.subject_id.clone(),
            opt_str(s.condition),
            s.n_go.to_string(),
            s.n_stop.to_string(),
            opt(s.stop_failure_rate),
            snake(&opts.commission),
            opt(s.commission_error_reported),
            opt(s.ssrt),
            snake(&s.ssrt_status),
            opt(s.go_rt_mean),
            opt(s.go_rt_sd),
            opt(s.stop_rt_mean),
            opt(s.stop_rt_sd),
            opt(s.go_accuracy),
            opt(s.go_max_velocity_sd),
            opt(s.mean_stopping_distance),
            opt(fit.map(|f| f.k)),
            opt(fit.map(|f| f.k.log10())),
            opt(fit.map(|f| f.beta)),
            opt(fit.map(|f| f.log_likelihood)),
            opt_str(fit.map(|f| f.at_bound)),
            opt_str(fit.map(|f| f.degenerate_choices)),
            opt(s.control_consistency),
            snake(&opts.ssrt.omission),
            snake(&opts.ssrt.quantile),
            snake(&opts.variant),
            snake(&opts.acceleration),
            policy.to_string(),
            verdict.as_ref().map(Verdict::label).unwrap_or_default(),
        ];
        row.extend(scales.iter().map(|k| opt(s.scale_scores.get(*k).copied())));
        t.push(row);
    }
    t
}

pub const FIT_COLUMNS: &[&str] = &[
    "subject_id",
    "condition",
    "model_variant",
    "k",
    "log10_k",
    "beta",
    "log_likelihood",
    "converged",
    "at_bound",
    "degenerate_choices",
    "n_trials",
    "control_consistency",
    "method",
    "error",
];

/// A discounting fit row: `(subject, condition, fit or error, control consistency)`.
pub type FitRow = (String, Option<String>, Result<crate::discounting::DiscountFit, String>, Option<f64>);

pub fn fit_table(rows: &[FitRow], variant: ModelVariant) -> Table {
    let mut t = Table::new(FIT_COLUMNS.iter().copied());
    for (subject, cond, fit, cc) in rows {
        let mut row = vec![subject.clone(), cond.clone().unwrap_or_default(), snake(&variant)];
        match fit {
            Ok(f) => row.extend([
                num(f.k),
                num(f.k.log10()),
                num(f.beta),
                num(f.log_likelihood),
                f.converged.to_string(),
                f.at_bound.to_string(),
                f.degenerate_choices.to_string(),
                f.n_trials.to_string(),
                opt(*cc),
                f.method.clone(),
                String::new(),
            ]),
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.extend([opt(*cc), String::new(), e.clone()]);
            }
        }
        t.push(row);
    }
    t
}

pub fn truth_table(truth: &[GroundTruth]) -> Table {
    let mut t = Table::new([
        "subject_id",
        "subject_seed",
        "ssrt_true",
        "ssrt_sd",
        "go_mu",
        "go_sigma",
        "go_tau",
        "motor_lag",
        "k_true",
        "log10_k_true",
        "beta_true",
        "curvature",
        "velocity_jitter",
        "lapse_rate",
    ]);
    for g in truth {
        t.push(vec![
            g.subject_id.clone(),
            g.subject_seed.to_string(),
            opt(g.ssrt_true),
            num(g.ssrt_sd),
            num(g.go_mu),
            num(g.go_sigma),
            num(g.go_tau),
            num(g.motor_lag),
            num(g.k_true),
            num(g.k_true.log10()),
            num(g.beta_true),
            num(g.curvature),
            num(g.velocity_jitter),
            num(g.lapse_rate),
        ]);
    }
    t
}

/// Groups row indices by the values of `columns`, in sorted key order.
pub fn group_rows(table: &Table, columns: &[&str]) -> Result<BTreeMap<Vec<String>, Vec<usize>>, TableError> {
    let idx: Vec<usize> = columns.iter().map(|c| table.column_index(c)).collect::<Result<_, _>>()?;
    let mut out: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for (r, row) in table.rows.iter().enumerate() {
        out.entry(idx.iter().map(|&i| row[i].clone()).collect()).or_default().push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_missing() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1.5".into(), String::new()]);
        t.push(vec!["x,y".into(), "2".into()]);
        let back = Table::from_csv(&t.to_csv().unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.numbers("b").unwrap(), vec![None, Some(2.0)]);
        assert!(back.numbers("a").is_err());
        assert!(back.numbers("c").is_err());
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345678.9, -0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(2.0), "2");
    }

    #[test]
    fn set_and_group() {
        let mut t = Table::new(["g", "v"]);
        for (g, v) in [("b", "1"), ("a", "2"), ("b", "3")] {
            t.push(vec![g.into(), v.into()]);
        }
        t.set_column("w", vec!["x".into(), "y".into(), "z".into()]);
        t.set_column("v", vec!["0".into(), "0".into(), "0".into()]);
        assert_eq!(t.header, ["g", "v", "w"]);
        let g = group_rows(&t, &["g"]).unwrap();
        assert_eq!(g[&vec!["b".to_string()]], vec![0, 2]);
        assert_eq!(g.keys().next().unwrap(), &vec!["a".to_string()]);
    }
}
