//! Table-driven analyses shared by the CLI subcommands and the pipeline:
//! INT columns, condition matrices, two-factor cells and moderation inputs
//! built from CSV tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::tables::{num, Table, TableError};
use crate::stats::{
    parallel_moderation, rank_inverse_normal, rm_anova_one_way, rm_anova_two_factor, within_subject_contrast,
    within_subject_sem, AnovaTable, ConditionMatrix, ContrastResult, ModerationResult, OneWayRm, StatsError,
    TwoFactorData,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Data(String),
}

/// `column == value` row filter; an empty value selects empty fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowFilter {
    pub column: String,
    pub value: String,
}

impl std::str::FromStr for RowFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, v) = s.split_once('=').ok_or_else(|| format!("filter `{s}` is not COLUMN=VALUE"))?;
        Ok(Self { column: c.to_string(), value: v.to_string() })
    }
}

pub fn filter_rows(table: &Table, filters: &[RowFilter]) -> Result<Table, TableError> {
    let idx: Vec<(usize, &str)> = filters
        .iter()
        .map(|f| table.column_index(&f.column).map(|i| (i, f.value.as_str())))
        .collect::<Result<_, _>>()?;
    Ok(Table {
        header: table.header.clone(),
        rows: table.rows.iter().filter(|r| idx.iter().all(|&(i, v)| r[i] == v)).cloned().collect(),
    })
}

/// Rank-based inverse normal transform of `column`, applied separately
/// within each group of `pool` columns (all rows pooled when `pool` is
/// empty). Rows with an empty value stay empty.
pub fn int_column(table: &Table, column: &str, pool: &[&str]) -> Result<Vec<String>, AnalysisError> {
    let values = table.numbers(column)?;
    let groups = crate::io::tables::group_rows(table, pool)?;
    let mut out = vec![String::new(); values.len()];
    for rows in groups.values() {
        let present: Vec<usize> = rows.iter().copied().filter(|&r| values[r].is_some()).collect();
        if present.is_empty() {
            continue;
        }
        let xs: Vec<f64> = present.iter().map(|&r| values[r].unwrap_or_default()).collect();
        let z = if xs.len() == 1 { vec![0.0] } else { rank_inverse_normal(&xs)? };
        for (&r, v) in present.iter().zip(z) {
            out[r] = num(v);
        }
    }
    Ok(out)
}

/// Long-format rows → subjects × levels matrix of cell means. Subjects with
/// an empty cell are dropped and listed.
pub fn condition_matrix(
    table: &Table,
    measure: &str,
    by: &str,
    subject: &str,
    levels: Option<&[String]>,
) -> Result<(ConditionMatrix, Vec<String>), AnalysisError> {
    let vals = table.numbers(measure)?;
    let subj = table.text(subject)?;
    let cond = table.text(by)?;
    let mut cells: BTreeMap<&str, BTreeMap<&str, (f64, usize)>> = BTreeMap::new();
    let mut seen_levels: Vec<&str> = Vec::new();
    for ((s, c), v) in subj.iter().zip(&cond).zip(&vals) {
        if c.is_empty() {
            continue;
        }
        if !seen_levels.contains(c) {
            seen_levels.push(c);
        }
        let row = cells.entry(s).or_default();
        if let Some(v) = v {
            let e = row.entry(c).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    let levels: Vec<String> = match levels {
        Some(l) => l.to_vec(),
        None => {
            seen_levels.sort();
            seen_levels.iter().map(|s| s.to_string()).collect()
        }
    };
    let mut subjects = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for (s, row) in &cells {
        let r: Option<Vec<f64>> = levels.iter().map(|l| row.get(l.as_str()).map(|(sum, n)| sum / *n as f64)).collect();
        match r {
            Some(r) => {
                subjects.push(s.to_string());
                rows.push(r);
            }
            None => dropped.push(s.to_string()),
        }
    }
    Ok((ConditionMatrix::new(subjects, levels, rows)?, dropped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub measure: String,
    pub conditions: Vec<String>,
    pub n_subjects: usize,
    pub dropped_subjects: Vec<String>,
    pub condition_means: Vec<f64>,
    pub within_subject_sem: Vec<f64>,
    pub contrast: ContrastResult,
    pub omnibus: OneWayRm,
}

pub fn contrast_report(
    table: &Table,
    measure: &str,
    by: &str,
    subject: &str,
    levels: Option<&[String]>,
    weights: &[f64],
) -> Result<ContrastReport, AnalysisError> {
    let (m, dropped) = condition_matrix(table, measure, by, subject, levels)?;
    Ok(ContrastReport {
        measure: measure.to_string(),
        conditions: m.conditions().to_vec(),
        n_subjects: m.n_subjects(),
        dropped_subjects: dropped,
        condition_means: m.condition_means(),
        within_subject_sem: within_subject_sem(&m),
        contrast: within_subject_contrast(&m, weights)?,
        omnibus: rm_anova_one_way(&m),
    })
}

/// Long-format rows → balanced subject × A × B cell means.
pub fn two_factor_data(
    table: &Table,
    measure: &str,
    factor_a: &str,
    factor_b: &str,
    subject: &str,
) -> Result<(TwoFactorData, Vec<String>), AnalysisError> {
    let vals = table.numbers(measure)?;
    let subj = table.text(subject)?;
    let a = table.text(factor_a)?;
    let b = table.text(factor_b)?;
    let mut cells: BTreeMap<&str, BTreeMap<(&str, &str), (f64, usize)>> = BTreeMap::new();
    let mut a_levels: Vec<String> = Vec::new();
    let mut b_levels: Vec<String> = Vec::new();
    for i in 0..vals.len() {
        if a[i].is_empty() || b[i].is_empty() {
            continue;
        }
        for (lv, x) in [(&mut a_levels, a[i]), (&mut b_levels, b[i])] {
            if !lv.iter().any(|l| l == x) {
                lv.push(x.to_string());
            }
        }
        let row = cells.entry(subj[i]).or_default();
        if let Some(v) = vals[i] {
            let e = row.entry((a[i], b[i])).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    a_levels.sort();
    b_levels.sort();
    let mut subjects = Vec::new();
    let mut values = Vec::new();
    let mut dropped = Vec::new();
    for (s, row) in &cells {
        let grid: Option<Vec<Vec<f64>>> = a_levels
            .iter()
            .map(|x| {
                b_levels
                    .iter()
                    .map(|y| row.get(&(x.as_str(), y.as_str())).map(|(sum, n)| sum / *n as f64))
                    .collect()
            })
            .collect();
        match grid {
            Some(g) => {
                subjects.push(s.to_string());
                values.push(g);
            }
            None => dropped.push(s.to_string()),
        }
    }
    let data = TwoFactorData {
        factor_a: factor_a.to_string(),
        factor_b: factor_b.to_string(),
        a_levels,
        b_levels,
        subjects,
        values,
    };
    data.validate()?;
    Ok((data, dropped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaReport {
    pub measure: String,
    pub factors: [String; 2],
    pub levels: [Vec<String>; 2],
    pub dropped_subjects: Vec<String>,
    pub table: AnovaTable,
}

pub fn anova_report(
    table: &Table,
    measure: &str,
    factors: [&str; 2],
    subject: &str,
) -> Result<AnovaReport, AnalysisError> {
    let (data, dropped) = two_factor_data(table, measure, factors[0], factors[1], subject)?;
    Ok(AnovaReport {
        measure: measure.to_string(),
        factors: [factors[0].to_string(), factors[1].to_string()],
        levels: [data.a_levels.clone(), data.b_levels.clone()],
        dropped_subjects: dropped,
        table: rm_anova_two_factor(&data)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationReport {
    pub y: String,
    pub x: String,
    pub m1: String,
    pub m2: String,
    /// Rows skipped because one of the four columns was empty.
    pub n_incomplete: usize,
    pub result: ModerationResult,
}

pub fn moderation_report(
    table: &Table,
    columns: [&str; 4],
    center: bool,
) -> Result<ModerationReport, AnalysisError> {
    let cols: Vec<Vec<Option<f64>>> = columns.iter().map(|c| table.numbers(c)).collect::<Result<_, _>>()?;
    let mut data: [Vec<f64>; 4] = Default::default();
    let mut incomplete = 0;
    for r in 0..table.rows.len() {
        match (cols[0][r], cols[1][r], cols[2][r], cols[3][r]) {
            (Some(a), Some(b), Some(c), Some(d)) => {
                for (v, x) in data.iter_mut().zip([a, b, c, d]) {
                    v.push(x);
                }
            }
            _ => incomplete += 1,
        }
    }
    let [y, x, m1, m2] = &data;
    Ok(ModerationReport {
        y: columns[0].to_string(),
        x: columns[1].to_string(),
        m1: columns[2].to_string(),
        m2: columns[3].to_string(),
        n_incomplete: incomplete,
        result: parallel_moderation(y, x, m1, m2, center)?,
    })
}
