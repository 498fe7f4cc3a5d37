//! End-to-end run: sessions → features → metrics → quality filter → INT →
//! contrasts, ANOVA and moderation, collected into one [`StatReport`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{anova_report, contrast_report, filter_rows, int_column, moderation_report, RowFilter};
use crate::io::tables::{feature_table, summary_table, Table};
use crate::io::{read_sessions, LoadError, ParseOptions, StatReport};
use crate::metrics::{quality_filter, summarize_session, MetricsOptions, QualityPolicy, Verdict};
use crate::session::{Condition, SessionLog};
use crate::simulator::{simulate_cohort, CohortSpec, GroundTruth, ParamDistributions, SimError};
use crate::stats::{ContrastPreset, BLOM_OFFSET};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Simulate {
        spec: CohortSpec,
        #[serde(default)]
        distributions: ParamDistributions,
    },
    /// Session files (`.json` or `.jsonl`), relative to the config file.
    Sessions { paths: Vec<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSpec {
    pub name: String,
    pub measure: String,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaSpec {
    /// A per-trial feature column, averaged per subject and cell.
    pub measure: String,
    pub factors: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationSpec {
    pub y: String,
    pub x: String,
    pub m1: String,
    pub m2: String,
    pub center: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub source: Source,
    pub strict: bool,
    pub metrics: MetricsOptions,
    pub policy: String,
    /// Level order for contrast weights.
    pub condition_order: Vec<Condition>,
    /// Per-condition measures given an `<name>_int` column.
    pub int_measures: Vec<String>,
    /// Columns that split the INT into separate pools; empty pools all conditions.
    pub int_pool: Vec<String>,
    pub contrasts: Vec<ContrastSpec>,
    pub anova: Option<AnovaSpec>,
    pub moderation: Option<ModerationSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let contrast = |p: ContrastPreset, m: &str| ContrastSpec {
            name: format!("{}:{m}", p.name()),
            measure: m.to_string(),
            weights: p.weights().to_vec(),
        };
        Self {
            source: Source::Simulate { spec: CohortSpec::study2(), distributions: ParamDistributions::default() },
            strict: false,
            metrics: MetricsOptions::default(),
            policy: "study2".into(),
            condition_order: vec![Condition::Unpleasant, Condition::Neutral, Condition::Pleasant],
            int_measures: vec!["mean_stopping_distance".into(), "go_max_velocity_sd".into(), "ssrt".into()],
            int_pool: Vec::new(),
            contrasts: vec![
                contrast(ContrastPreset::VShape, "mean_stopping_distance_int"),
                contrast(ContrastPreset::LShapeNegative, "mean_stopping_distance_int"),
                contrast(ContrastPreset::VShape, "go_max_velocity_sd_int"),
                contrast(ContrastPreset::LShapeNegative, "go_max_velocity_sd_int"),
            ],
            anova: Some(AnovaSpec { measure: "max_velocity".into(), factors: ["task".into(), "condition".into()] }),
            moderation: Some(ModerationSpec {
                y: "log10_k".into(),
                x: "go_max_velocity_sd".into(),
                m1: "UPPS_NU".into(),
                m2: "UPPS_PU".into(),
                center: true,
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Everything the run produced, including the intermediate tables.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: StatReport,
    pub features: Table,
    pub subjects: Table,
    pub truth: Vec<GroundTruth>,
}

pub fn load_config(text: &str) -> Result<PipelineConfig, PipelineError> {
    serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
}

fn block<T: Serialize, E: std::fmt::Display>(r: Result<T, E>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("result serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

fn feature_summary(t: &Table) -> Value {
    let task = t.text("task").unwrap_or_default();
    let err = t.text("error").unwrap_or_default();
    let mut out = serde_json::Map::new();
    out.insert("n_trials".into(), json!(t.rows.len()));
    out.insert("n_feature_errors".into(), json!(err.iter().filter(|e| !e.is_empty()).count()));
    let mut by_task = serde_json::Map::new();
    for name in ["sst", "ddt"] {
        let mut m = serde_json::Map::new();
        for col in ["total_distance", "max_velocity", "max_acceleration", "auc", "stopping_distance"] {
            let vals: Vec<f64> = t
                .numbers(col)
                .unwrap_or_default()
                .iter()
                .zip(&task)
                .filter(|(_, tk)| **tk == name)
                .filter_map(|(v, _)| *v)
                .collect();
            m.insert(format!("mean_{col}"), json!(mean(&vals)));
        }
        m.insert("n".into(), json!(task.iter().filter(|tk| **tk == name).count()));
        by_task.insert(name.into(), Value::Object(m));
    }
    out.insert("by_task".into(), Value::Object(by_task));
    Value::Object(out)
}

fn recovery(subjects: &Table, truth: &[GroundTruth]) -> Value {
    let whole = filter_rows(subjects, &[RowFilter { column: "condition".into(), value: String::new() }]);
    let Ok(whole) = whole else { return Value::Null };
    let ids = whole.text("subject_id").unwrap_or_default();
    let ssrt = whole.numbers("ssrt").unwrap_or_default();
    let lk = whole.numbers("log10_k").unwrap_or_default();
    let by_id: BTreeMap<&str, &GroundTruth> = truth.iter().map(|g| (g.subject_id.as_str(), g)).collect();
    let mut ssrt_err = Vec::new();
    let mut k_err = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let Some(g) = by_id.get(id) else { continue };
        if let (Some(e), Some(t)) = (ssrt[i], g.ssrt_true) {
            ssrt_err.push(e - t);
        }
        if let Some(e) = lk[i] {
            k_err.push((e - g.k_true.log10()).abs());
        }
    }
    json!({
        "n_ssrt": ssrt_err.len(),
        "ssrt_mean_error_ms": mean(&ssrt_err),
        "n_k": k_err.len(),
        "log10_k_median_abs_error": median(k_err),
    })
}

/// Runs the pipeline. `config_bytes` is digested into the report; `base`
/// resolves relative session paths.
pub fn run(cfg: &PipelineConfig, config_bytes: &[u8], base: &Path) -> Result<PipelineOutput, PipelineError> {
    let policy = QualityPolicy::preset(&cfg.policy)
        .ok_or_else(|| PipelineError::Config(format!("unknown policy `{}`", cfg.policy)))?;
    let conventions = json!({
        "int_offset": BLOM_OFFSET,
        "int_ties": "average_ranks",
        "contrast_error_term": "pooled_subject_x_condition",
        "anova_effect_sizes": ["eta_sq", "partial_eta_sq", "generalized_eta_sq"],
        "moderation_se": "ols",
    });
    let mut report = StatReport::new("pipeline", json!({ "config": cfg, "conventions": conventions }));
    report.add_input("config", config_bytes);

    let (logs, truth): (Vec<SessionLog>, Vec<GroundTruth>) = match &cfg.source {
        Source::Simulate { spec, distributions } => {
            let c = simulate_cohort(spec, distributions)?;
            (c.sessions, c.truth)
        }
        Source::Sessions { paths } => {
            let mut logs = Vec::new();
            for p in paths {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let (loaded, bytes) = read_sessions(&path, ParseOptions { strict: cfg.strict })?;
                report.add_input(&p.to_string_lossy(), &bytes);
                for l in loaded {
                    for w in &l.warnings {
                        report.warnings.push(format!("{}: {w}", p.display()));
                    }
                    logs.push(l.log);
                }
            }
            logs.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
            (logs, Vec::new())
        }
    };

    let features = feature_table(&logs, cfg.metrics.acceleration);
    report.results.insert("features".into(), feature_summary(&features));

    let mut rows = Vec::new();
    let mut verdicts: BTreeMap<String, usize> = BTreeMap::new();
    let mut accepted = Vec::new();
    for log in &logs {
        let sums = summarize_session(log, &cfg.metrics);
        let verdict = quality_filter(&sums[0], &policy);
        let label = match &verdict {
            Ok(v) => v.label(),
            Err(e) => format!("error:{e}"),
        };
        *verdicts.entry(label).or_default() += 1;
        if verdict.as_ref().is_ok_and(Verdict::is_accept) {
            accepted.push(log.subject_id.clone());
        }
        let v = verdict.ok();
        rows.extend(sums.into_iter().map(|s| (s, v.clone())));
    }
    let mut subjects = summary_table(&rows, &cfg.metrics, &policy.name);
    report.results.insert(
        "metrics".into(),
        json!({
            "n_subjects": logs.len(),
            "n_accepted": accepted.len(),
            "verdicts": verdicts,
            "policy": policy,
        }),
    );
    if !truth.is_empty() {
        report.results.insert("recovery".into(), recovery(&subjects, &truth));
    }

    let verdict_col = subjects.column_index("verdict").expect("summary column");
    let accept_rows = Table {
        header: subjects.header.clone(),
        rows: subjects.rows.iter().filter(|r| r[verdict_col] == "accept").cloned().collect(),
    };
    let cond_col = subjects.column_index("condition").expect("summary column");
    let mut per_condition = Table {
        header: accept_rows.header.clone(),
        rows: accept_rows.rows.iter().filter(|r| !r[cond_col].is_empty()).cloned().collect(),
    };
    let pool: Vec<&str> = cfg.int_pool.iter().map(String::as_str).collect();
    let mut int_info = serde_json::Map::new();
    for m in &cfg.int_measures {
        match int_column(&per_condition, m, &pool) {
            Ok(z) => {
                let n = z.iter().filter(|s| !s.is_empty()).count();
                per_condition.set_column(&format!("{m}_int"), z);
                int_info.insert(m.clone(), json!({ "n": n }));
            }
            Err(e) => {
                int_info.insert(m.clone(), json!({ "error": e.to_string() }));
            }
        }
    }
    report.results.insert("transform".into(), json!({ "pool": cfg.int_pool, "measures": int_info }));
    // carry the INT columns into the exported subject table
    for h in per_condition.header.iter().skip(subjects.header.len()).cloned().collect::<Vec<_>>() {
        let src = per_condition.column_index(&h).expect("just added");
        let key = |r: &Vec<String>| (r[0].clone(), r[cond_col].clone());
        let vals: BTreeMap<_, _> = per_condition.rows.iter().map(|r| (key(r), r[src].clone())).collect();
        let col = subjects.rows.iter().map(|r| vals.get(&key(r)).cloned().unwrap_or_default()).collect();
        subjects.set_column(&h, col);
    }

    let order: Vec<String> = cfg.condition_order.iter().map(|c| c.to_string()).collect();
    let mut contrasts = serde_json::Map::new();
    for c in &cfg.contrasts {
        let r = contrast_report(&per_condition, &c.measure, "condition", "subject_id", Some(&order), &c.weights);
        contrasts.insert(c.name.clone(), block(r));
    }
    report.results.insert("contrasts".into(), Value::Object(contrasts));

    if let Some(a) = &cfg.anova {
        let keep: std::collections::BTreeSet<&str> = accepted.iter().map(String::as_str).collect();
        let resp = features.column_index("responded").expect("feature column");
        let trials = Table {
            header: features.header.clone(),
            rows: features.rows.iter().filter(|r| r[resp] == "true" && keep.contains(r[0].as_str())).cloned().collect(),
        };
        let r = anova_report(&trials, &a.measure, [&a.factors[0], &a.factors[1]], "subject_id");
        report.results.insert("anova".into(), block(r));
    }

    if let Some(m) = &cfg.moderation {
        let whole = Table {
            header: accept_rows.header.clone(),
            rows: accept_rows.rows.iter().filter(|r| r[cond_col].is_empty()).cloned().collect(),
        };
        let r = moderation_report(&whole, [&m.y, &m.x, &m.m1, &m.m2], m.center);
        report.results.insert("moderation".into(), block(r));
    }

    Ok(PipelineOutput { report, features, subjects, truth })
}
