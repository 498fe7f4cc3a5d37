use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use impulsekit::discounting::ModelVariant;
use impulsekit::metrics::{CommissionConvention, OmissionPolicy, QuantileRule};
use impulsekit::trajectory::AccelerationMode;

#[derive(Debug, Parser)]
#[command(name = "impulsekit", version, about = "Mouse-tracking impulsivity analysis toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Omission {
    Exclude,
    AssignMax,
}

impl From<Omission> for OmissionPolicy {
    fn from(o: Omission) -> Self {
        match o {
            Omission::Exclude => OmissionPolicy::Exclude,
            Omission::AssignMax => OmissionPolicy::AssignMax,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Quantile {
    Nth,
    Interp,
}

impl From<Quantile> for QuantileRule {
    fn from(q: Quantile) -> Self {
        match q {
            Quantile::Nth => QuantileRule::Nth,
            Quantile::Interp => QuantileRule::Interpolated,
        }
    }
}

/// response-rate: proportion of stop trials with a response; inhibition-rate: one minus that.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Commission {
    InhibitionRate,
    ResponseRate,
}

impl From<Commission> for CommissionConvention {
    fn from(c: Commission) -> Self {
        match c {
            Commission::InhibitionRate => CommissionConvention::InhibitionRate,
            Commission::ResponseRate => CommissionConvention::ResponseRate,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Variant {
    Softmax,
    Literal,
}

impl From<Variant> for ModelVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Softmax => ModelVariant::SoftmaxHyperbolic,
            Variant::Literal => ModelVariant::LiteralExponent,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Acceleration {
    TimeNormalized,
    PerStep,
}

impl From<Acceleration> for AccelerationMode {
    fn from(a: Acceleration) -> Self {
        match a {
            Acceleration::TimeNormalized => AccelerationMode::TimeNormalized,
            Acceleration::PerStep => AccelerationMode::PerStep,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Policy {
    Study1,
    Study2,
    Strict20,
    Strict40,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Study1 => "study1",
            Policy::Study2 => "study2",
            Policy::Strict20 => "strict20",
            Policy::Strict40 => "strict40",
        }
    }
}

#[derive(Debug, Args)]
pub struct SessionInputs {
    /// Session files (.json) or corpora (.jsonl).
    #[arg(required = true)]
    pub sessions: Vec<PathBuf>,
    /// Treat out-of-set SSD/coherence values as errors.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct TableInput {
    /// Input CSV table.
    pub table: PathBuf,
    /// Keep only rows where COLUMN=VALUE (repeatable; empty VALUE matches empty fields).
    #[arg(long = "filter", value_name = "COLUMN=VALUE")]
    pub filters: Vec<String>,
    /// Subject identifier column.
    #[arg(long, default_value = "subject_id")]
    pub subject: String,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Emit the text summary instead of JSON.
    #[arg(long)]
    pub text: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-trial trajectory features.
    Features {
        #[command(flatten)]
        input: SessionInputs,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "time-normalized")]
        acceleration: Acceleration,
    },
    /// Per-subject summaries (whole session and per condition) with quality verdicts.
    Metrics {
        #[command(flatten)]
        input: SessionInputs,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "exclude")]
        omission: Omission,
        #[arg(long, value_enum, default_value = "nth")]
        quantile: Quantile,
        #[arg(long, value_enum, default_value = "response-rate")]
        commission: Commission,
        #[arg(long, value_enum, default_value = "study1")]
        policy: Policy,
        #[arg(long, value_enum, default_value = "softmax")]
        variant: Variant,
        #[arg(long, value_enum, default_value = "time-normalized")]
        acceleration: Acceleration,
    },
    /// Delay-discounting fits per subject.
    FitDd {
        #[command(flatten)]
        input: SessionInputs,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "softmax")]
        variant: Variant,
        /// Also fit each condition separately.
        #[arg(long)]
        by_condition: bool,
    },
    /// Adds rank-based inverse normal columns (`<name>_int`).
    Transform {
        table: PathBuf,
        #[arg(long = "column", required = true)]
        columns: Vec<String>,
        /// `all`, or comma-separated columns whose groups are transformed separately.
        #[arg(long, default_value = "all")]
        pool: String,
        #[arg(long = "filter", value_name = "COLUMN=VALUE")]
        filters: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Planned within-subject contrast.
    Contrast {
        #[command(flatten)]
        input: TableInput,
        #[arg(long)]
        measure: String,
        /// Comma-separated weights, in the order of --levels.
        #[arg(long, allow_hyphen_values = true)]
        weights: String,
        #[arg(long, default_value = "condition")]
        by: String,
        /// Level order; defaults to unpleasant,neutral,pleasant when --by is condition.
        #[arg(long)]
        levels: Option<String>,
    },
    /// Two-factor repeated-measures ANOVA.
    Anova {
        #[command(flatten)]
        input: TableInput,
        #[arg(long)]
        measure: String,
        /// Exactly two factor columns, e.g. condition,task.
        #[arg(long)]
        factors: String,
    },
    /// Parallel two-moderator regression with conditional effects.
    Moderate {
        #[command(flatten)]
        input: TableInput,
        #[arg(long)]
        y: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        m1: String,
        #[arg(long)]
        m2: String,
        /// Use raw (uncentered) predictors.
        #[arg(long)]
        no_center: bool,
    },
    /// Synthetic cohort: sessions.jsonl plus ground_truth.csv.
    Simulate {
        /// JSON with optional `cohort` and `distributions` objects.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the subject count.
        #[arg(long)]
        n: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// End-to-end analysis to one report.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the simulation seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the text summary here.
        #[arg(long)]
        text: Option<PathBuf>,
        /// Also write features.csv, subjects.csv (and ground_truth.csv) here.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Serves the task runner and ingests uploads.
    Collect {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        out: PathBuf,
        /// Task-runner static bundle.
        #[arg(long)]
        assets: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Schema check; exit code 1 if any session is invalid.
    Validate {
        #[command(flatten)]
        input: SessionInputs,
        /// Print the full reports as JSON.
        #[arg(long)]
        json: bool,
    },
}
