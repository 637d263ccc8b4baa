//! Report emission: per-replication CSV, tidy CSV, JSON summary and weight
//! matrices. Output depends only on the inputs, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analyze::{AnalyzeResult, WeightMatrix};
use crate::error::Result;
use crate::sim::metrics::{aggregate, MethodSummary, PercentChanges, RepMetrics};
use crate::sim::RepRecord;

pub const REPORT_VERSION: u32 = 1;
pub const SCHEMA: &str = include_str!("../schema/report_v1.schema.json");

pub const PER_REP_FILE: &str = "per_rep.csv";
pub const TIDY_FILE: &str = "tidy.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// One row of the per-replication table.
#[derive(Debug, Clone, Copy)]
pub struct RepRow<'a> {
    pub primary: Option<&'a str>,
    pub rep: usize,
    pub metrics: &'a RepMetrics,
}

pub fn simulate_rows(records: &[RepRecord]) -> Vec<RepRow<'_>> {
    records
        .iter()
        .flat_map(|r| {
            r.metrics.iter().map(move |m| RepRow {
                primary: None,
                rep: r.rep,
                metrics: m,
            })
        })
        .collect()
}

pub fn analyze_rows(result: &AnalyzeResult) -> Vec<RepRow<'_>> {
    result
        .records
        .iter()
        .flat_map(|r| {
            r.metrics.iter().map(move |m| RepRow {
                primary: Some(r.primary.as_str()),
                rep: r.rep,
                metrics: m,
            })
        })
        .collect()
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn keyed(rows: &[RepRow<'_>]) -> bool {
    rows.iter().any(|r| r.primary.is_some())
}

pub fn write_per_rep_csv<W: Write>(out: W, rows: &[RepRow<'_>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let keyed = keyed(rows);
    let mut header = vec![
        "rep",
        "method",
        "posterior_mean",
        "posterior_variance",
        "bias",
        "squared_error",
        "correct_model_weight",
        "esss",
    ];
    if keyed {
        header.insert(0, "primary");
    }
    w.write_record(&header)?;
    for row in rows {
        let m = row.metrics;
        let mut record = vec![
            row.rep.to_string(),
            m.method.to_string(),
            num(m.posterior_mean),
            num(m.posterior_variance),
            num(m.bias),
            num(m.squared_error),
            opt(m.correct_model_weight),
            num(m.esss),
        ];
        if keyed {
            record.insert(0, row.primary.unwrap_or_default().to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format `[primary,]method,metric,rep,value`, one line per value.
pub fn write_tidy_csv<W: Write>(out: W, rows: &[RepRow<'_>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let keyed = keyed(rows);
    let mut header = vec!["method", "metric", "rep", "value"];
    if keyed {
        header.insert(0, "primary");
    }
    w.write_record(&header)?;
    for row in rows {
        let m = row.metrics;
        let values = [
            ("posterior_mean", Some(m.posterior_mean)),
            ("posterior_variance", Some(m.posterior_variance)),
            ("bias", Some(m.bias)),
            ("squared_error", Some(m.squared_error)),
            ("correct_model_weight", m.correct_model_weight),
            ("esss", Some(m.esss)),
        ];
        for (metric, value) in values {
            let Some(value) = value else { continue };
            let mut record = vec![
                m.method.to_string(),
                metric.to_string(),
                row.rep.to_string(),
                num(value),
            ];
            if keyed {
                record.insert(0, row.primary.unwrap_or_default().to_string());
            }
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows are sources, columns are primaries.
pub fn write_weight_matrix_csv<W: Write>(out: W, matrix: &WeightMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["source".to_string()];
    header.extend(matrix.primaries.iter().cloned());
    w.write_record(&header)?;
    for (id, row) in matrix.ids.iter().zip(&matrix.values) {
        let mut record = vec![id.clone()];
        record.extend(row.iter().map(|&v| num(v)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub methods: BTreeMap<String, MethodSummary>,
    pub rbf_vs_mem: Option<PercentChanges>,
}

impl GroupSummary {
    pub fn of(metrics: &[RepMetrics]) -> Result<Self> {
        let s = aggregate(metrics)?;
        Ok(Self {
            methods: s
                .methods
                .into_iter()
                .map(|m| (m.method.to_string(), m))
                .collect(),
            rbf_vs_mem: s.rbf_vs_mem,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub report_version: u32,
    pub mode: String,
    pub seed: u64,
    pub reps: usize,
    pub config: serde_json::Value,
    #[serde(flatten)]
    pub overall: GroupSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_primary: Option<BTreeMap<String, GroupSummary>>,
}

impl SummaryReport {
    pub fn new<C: Serialize>(
        mode: &str,
        seed: u64,
        reps: usize,
        config: &C,
        metrics: &[RepMetrics],
    ) -> Result<Self> {
        Ok(Self {
            report_version: REPORT_VERSION,
            mode: mode.into(),
            seed,
            reps,
            config: serde_json::to_value(config)?,
            overall: GroupSummary::of(metrics)?,
            per_primary: None,
        })
    }

    pub fn with_primaries(mut self, result: &AnalyzeResult) -> Result<Self> {
        let mut groups: BTreeMap<String, Vec<RepMetrics>> = BTreeMap::new();
        for r in &result.records {
            groups
                .entry(r.primary.clone())
                .or_default()
                .extend(r.metrics.iter().cloned());
        }
        self.per_primary = Some(
            groups
                .into_iter()
                .map(|(k, v)| Ok((k, GroupSummary::of(&v)?)))
                .collect::<Result<_>>()?,
        );
        Ok(self)
    }
}

pub fn write_summary_json<W: Write>(mut out: W, summary: &SummaryReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, summary)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
}

/// Writes the standard trio of files into `dir`.
pub fn write_reports(dir: &Path, rows: &[RepRow<'_>], summary: &SummaryReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_per_rep_csv(create(dir, PER_REP_FILE)?, rows)?;
    write_tidy_csv(create(dir, TIDY_FILE)?, rows)?;
    write_summary_json(create(dir, SUMMARY_FILE)?, summary)?;
    Ok(())
}

pub fn write_weight_matrices(dir: &Path, matrices: &[WeightMatrix]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for m in matrices {
        write_weight_matrix_csv(create(dir, &format!("weights_{}.csv", m.method))?, m)?;
    }
    Ok(())
}
