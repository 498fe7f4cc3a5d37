mod args;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use serde_json::json;

pub use args::Cli;
use args::{Command, SessionInputs, TableInput};
use impulsekit::analysis::{self, RowFilter};
use impulsekit::collect::{self, CollectConfig};
use impulsekit::discounting::{choices_from_trials, control_consistency, fit_discounting, ModelVariant};
use impulsekit::io::tables::{feature_table, fit_table, summary_table, truth_table, FitRow, Table};
use impulsekit::io::{
    is_jsonl, read_sessions, to_jsonl, validate_jsonl, validate_session, write_atomic, ParseOptions, StatReport,
    ValidationReport,
};
use impulsekit::metrics::{quality_filter, summarize_session, MetricsOptions, QualityPolicy, SsrtOptions};
use impulsekit::pipeline;
use impulsekit::session::{SessionLog, RESPONSE_CAP_MS};
use impulsekit::simulator::{simulate_cohort, CohortSpec, ParamDistributions};
use impulsekit::stats::StatsError;

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unusable option values (exit 2).
    Usage(String),
    /// Invalid input data or a failed run (exit 1).
    Failure(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Failure(e) => ("failure", format!("{e:#}")),
        };
        json!({ "error": kind, "message": msg }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Failure(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failure(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load(input: &SessionInputs) -> Result<Vec<SessionLog>> {
    let opts = ParseOptions { strict: input.strict };
    let mut logs = Vec::new();
    for p in &input.sessions {
        let (loaded, _) = read_sessions(p, opts).map_err(|e| CliError::Failure(e.into()))?;
        for l in loaded {
            for w in &l.warnings {
                eprintln!("warning: {}: {w}", p.display());
            }
            logs.push(l.log);
        }
    }
    logs.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(logs)
}

fn write_table(t: &Table, path: &Path) -> Result<()> {
    t.write(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_table(input: &TableInput) -> Result<(Table, Vec<u8>)> {
    let bytes = std::fs::read(&input.table).with_context(|| format!("reading {}", input.table.display()))?;
    let t = Table::from_csv(&bytes).with_context(|| format!("parsing {}", input.table.display()))?;
    let filters = parse_filters(&input.filters)?;
    let t = analysis::filter_rows(&t, &filters).map_err(|e| usage(e.to_string()))?;
    Ok((t, bytes))
}

fn parse_filters(raw: &[String]) -> Result<Vec<RowFilter>> {
    raw.iter().map(|s| s.parse::<RowFilter>().map_err(usage)).collect()
}

fn emit_report(r: &StatReport, input: &TableInput) -> Result<()> {
    let body = if input.text { r.to_text() } else { r.to_json() };
    match &input.output {
        Some(p) => write_atomic(p, body.as_bytes()).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{body}"),
    }
    Ok(())
}

fn analysis_error(e: analysis::AnalysisError) -> CliError {
    match e {
        analysis::AnalysisError::Table(t) => usage(t.to_string()),
        analysis::AnalysisError::Stats(e @ StatsError::WeightsNotCentered(_)) => usage(e.to_string()),
        other => CliError::Failure(other.into()),
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct SimulateFile {
    cohort: Option<CohortSpec>,
    distributions: ParamDistributions,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Features { input, output, acceleration } => {
            let logs = load(&input)?;
            write_table(&feature_table(&logs, acceleration.into()), &output)
        }
        Command::Metrics { input, output, omission, quantile, commission, policy, variant, acceleration } => {
            let logs = load(&input)?;
            let opts = MetricsOptions {
                ssrt: SsrtOptions { omission: omission.into(), quantile: quantile.into(), cap_ms: RESPONSE_CAP_MS },
                commission: commission.into(),
                acceleration: acceleration.into(),
                variant: variant.into(),
            };
            let policy = QualityPolicy::preset(policy.name()).expect("preset exists");
            let mut rows = Vec::new();
            for log in &logs {
                let sums = summarize_session(log, &opts);
                let v = match quality_filter(&sums[0], &policy) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        eprintln!("warning: {}: no verdict: {e}", log.subject_id);
                        None
                    }
                };
                rows.extend(sums.into_iter().map(|s| (s, v.clone())));
            }
            write_table(&summary_table(&rows, &opts, &policy.name), &output)
        }
        Command::FitDd { input, output, variant, by_condition } => {
            let logs = load(&input)?;
            let variant: ModelVariant = variant.into();
            let mut rows: Vec<FitRow> = Vec::new();
            for log in &logs {
                let mut groups: Vec<(Option<String>, Vec<_>)> = vec![(None, log.trials.clone())];
                if by_condition {
                    for c in log.conditions() {
                        groups.push((Some(c.to_string()), log.trials.iter().filter(|t| t.condition == c).cloned().collect()));
                    }
                }
                for (cond, trials) in groups {
                    let choices = choices_from_trials(&trials);
                    if choices.is_empty() {
                        continue;
                    }
                    let fit = fit_discounting(&choices, variant).map_err(|e| e.to_string());
                    rows.push((log.subject_id.clone(), cond, fit, control_consistency(&choices).ok()));
                }
            }
            write_table(&fit_table(&rows, variant), &output)
        }
        Command::Transform { table, columns, pool, filters, output } => {
            let bytes = std::fs::read(&table).with_context(|| format!("reading {}", table.display()))?;
            let t = Table::from_csv(&bytes).with_context(|| format!("parsing {}", table.display()))?;
            let mut t = analysis::filter_rows(&t, &parse_filters(&filters)?).map_err(|e| usage(e.to_string()))?;
            let pool_cols = if pool == "all" { Vec::new() } else { split_list(&pool) };
            let pool_refs: Vec<&str> = pool_cols.iter().map(String::as_str).collect();
            for c in &columns {
                let z = analysis::int_column(&t, c, &pool_refs).map_err(analysis_error)?;
                t.set_column(&format!("{c}_int"), z);
            }
            write_table(&t, &output)
        }
        Command::Contrast { input, measure, weights, by, levels } => {
            let (t, bytes) = read_table(&input)?;
            let w: Vec<f64> = split_list(&weights)
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| usage(format!("weight `{s}` is not a number"))))
                .collect::<Result<_>>()?;
            let levels = match levels {
                Some(l) => Some(split_list(&l)),
                None if by == "condition" => Some(vec!["unpleasant".into(), "neutral".into(), "pleasant".into()]),
                None => None,
            };
            if let Some(l) = &levels {
                if l.len() != w.len() {
                    return Err(usage(format!("{} weights for {} levels", w.len(), l.len())));
                }
            }
            let r = analysis::contrast_report(&t, &measure, &by, &input.subject, levels.as_deref(), &w)
                .map_err(analysis_error)?;
            let mut rep = StatReport::new(
                "contrast",
                json!({
                    "measure": measure, "by": by, "levels": levels, "weights": w,
                    "subject": input.subject, "filters": input.filters,
                    "error_term": "pooled_subject_x_condition",
                }),
            );
            rep.add_input(&input.table.to_string_lossy(), &bytes);
            rep.set("contrast", &r);
            emit_report(&rep, &input)
        }
        Command::Anova { input, measure, factors } => {
            let (t, bytes) = read_table(&input)?;
            let f = split_list(&factors);
            let [a, b] = f.as_slice() else {
                return Err(usage("--factors needs exactly two columns"));
            };
            let r = analysis::anova_report(&t, &measure, [a, b], &input.subject).map_err(analysis_error)?;
            let mut rep = StatReport::new(
                "anova",
                json!({ "measure": measure, "factors": f, "subject": input.subject, "filters": input.filters }),
            );
            rep.add_input(&input.table.to_string_lossy(), &bytes);
            rep.set("anova", &r);
            emit_report(&rep, &input)
        }
        Command::Moderate { input, y, x, m1, m2, no_center } => {
            let (t, bytes) = read_table(&input)?;
            let r = analysis::moderation_report(&t, [&y, &x, &m1, &m2], !no_center).map_err(analysis_error)?;
            let mut rep = StatReport::new(
                "moderate",
                json!({ "y": y, "x": x, "m1": m1, "m2": m2, "center": !no_center, "filters": input.filters, "se": "ols" }),
            );
            rep.add_input(&input.table.to_string_lossy(), &bytes);
            rep.set("moderation", &r);
            emit_report(&rep, &input)
        }
        Command::Simulate { spec, seed, n, output } => {
            let file: SimulateFile = match &spec {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
                }
                None => SimulateFile::default(),
            };
            let mut cohort = file.cohort.unwrap_or_else(CohortSpec::study1);
            if let Some(s) = seed {
                cohort.seed = s;
            }
            if let Some(n) = n {
                cohort.n_subjects = n;
            }
            let c = simulate_cohort(&cohort, &file.distributions).map_err(|e| usage(e.to_string()))?;
            std::fs::create_dir_all(&output).with_context(|| format!("creating {}", output.display()))?;
            write_atomic(&output.join("sessions.jsonl"), to_jsonl(&c.sessions).as_bytes()).context("writing sessions")?;
            write_table(&truth_table(&c.truth), &output.join("ground_truth.csv"))?;
            let resolved = json!({ "cohort": cohort, "distributions": file.distributions });
            let mut text = serde_json::to_string_pretty(&resolved).expect("spec serializes");
            text.push('\n');
            write_atomic(&output.join("spec.resolved.json"), text.as_bytes()).context("writing spec")?;
            Ok(())
        }
        Command::Pipeline { config, seed, output, text, tables } => {
            let bytes = std::fs::read(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = pipeline::load_config(&String::from_utf8_lossy(&bytes)).map_err(|e| usage(e.to_string()))?;
            if let (Some(s), pipeline::Source::Simulate { spec, .. }) = (seed, &mut cfg.source) {
                spec.seed = s;
            }
            let base = config.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
            let out = pipeline::run(&cfg, &bytes, &base).map_err(|e| match e {
                pipeline::PipelineError::Config(m) => usage(m),
                other => CliError::Failure(other.into()),
            })?;
            if let Some(dir) = &tables {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                write_table(&out.features, &dir.join("features.csv"))?;
                write_table(&out.subjects, &dir.join("subjects.csv"))?;
                if !out.truth.is_empty() {
                    write_table(&truth_table(&out.truth), &dir.join("ground_truth.csv"))?;
                }
            }
            write_atomic(&output, out.report.to_json().as_bytes()).with_context(|| format!("writing {}", output.display()))?;
            if let Some(p) = &text {
                write_atomic(p, out.report.to_text().as_bytes()).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(())
        }
        Command::Collect { port, host, out, assets, strict } => {
            let addr: std::net::SocketAddr =
                format!("{host}:{port}").parse().map_err(|e| usage(format!("bad address {host}:{port}: {e}")))?;
            let cfg = CollectConfig { out_dir: out, assets, parse: ParseOptions { strict } };
            let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                collect::serve(listener, cfg).await.context("server")
            })?;
            Ok(())
        }
        Command::Validate { input, json } => {
            let opts = ParseOptions { strict: input.strict };
            let mut all: BTreeMap<String, Vec<ValidationReport>> = BTreeMap::new();
            for p in &input.sessions {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let reports = if is_jsonl(p) { validate_jsonl(&text, opts) } else { vec![validate_session(&text, opts)] };
                all.insert(p.display().to_string(), reports);
            }
            let invalid = all.values().flatten().filter(|r| !r.valid).count();
            if json {
                println!("{}", serde_json::to_string_pretty(&all).expect("reports serialize"));
            } else {
                for (path, reports) in &all {
                    for r in reports {
                        let who = r.subject_id.as_deref().unwrap_or("?");
                        let status = if r.valid { "ok" } else { "INVALID" };
                        println!("{path}: {who}: {status} ({} errors, {} warnings)", r.errors.len(), r.warnings.len());
                        for i in r.errors.iter().chain(&r.warnings) {
                            println!("  {:?}: {i}", i.severity);
                        }
                    }
                }
            }
            if invalid > 0 {
                return Err(CliError::Failure(anyhow::anyhow!("{invalid} invalid session(s)")));
            }
            Ok(())
        }
    }
}
