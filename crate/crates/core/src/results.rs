//! Result rows and their CSV/JSON encodings.
//!
//! CSV files follow RFC 4180 with a mandatory header row. A single leading
//! `#` line may carry a generation timestamp; readers skip it.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::SweepCell;

/// One row per (policy, grid point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub policy: String,
    pub params: String,
    pub horizon: u64,
    /// Empty for externalities other than `x^α`.
    pub alpha: Option<f64>,
    pub replications: u64,
    pub baseline_mean: f64,
    pub baseline_se: f64,
    pub regret_mean: f64,
    pub regret_se: f64,
    pub regret_q05: f64,
    pub regret_q25: f64,
    pub regret_q50: f64,
    pub regret_q75: f64,
    pub regret_q95: f64,
    pub starvation_frequency: f64,
    pub mean_reward: f64,
    pub wall_seconds: f64,
}

impl ResultRow {
    pub fn from_cell(cell: &SweepCell) -> Self {
        let a = &cell.aggregate;
        Self {
            policy: cell.policy.name().to_string(),
            params: cell.policy.params(),
            horizon: cell.point.horizon,
            alpha: cell.point.alpha,
            replications: a.replications,
            baseline_mean: a.baseline.mean,
            baseline_se: a.baseline.se,
            regret_mean: a.mean_regret,
            regret_se: a.se,
            regret_q05: a.quantiles.q05,
            regret_q25: a.quantiles.q25,
            regret_q50: a.quantiles.q50,
            regret_q75: a.quantiles.q75,
            regret_q95: a.quantiles.q95,
            starvation_frequency: a.starvation_frequency,
            mean_reward: a.mean_reward,
            wall_seconds: cell.wall_seconds,
        }
    }

    /// `policy(params)`.
    pub fn label(&self) -> String {
        if self.params.is_empty() {
            self.policy.clone()
        } else {
            format!("{}({})", self.policy, self.params)
        }
    }

    fn numeric(&self) -> [(&'static str, f64); 15] {
        [
            ("alpha", self.alpha.unwrap_or(1.0)),
            ("baseline_mean", self.baseline_mean),
            ("baseline_se", self.baseline_se),
            ("regret_mean", self.regret_mean),
            ("regret_se", self.regret_se),
            ("regret_q05", self.regret_q05),
            ("regret_q25", self.regret_q25),
            ("regret_q50", self.regret_q50),
            ("regret_q75", self.regret_q75),
            ("regret_q95", self.regret_q95),
            ("starvation_frequency", self.starvation_frequency),
            ("mean_reward", self.mean_reward),
            ("wall_seconds", self.wall_seconds),
            ("horizon", self.horizon as f64),
            ("replications", self.replications as f64),
        ]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.numeric().iter().find(|(_, v)| !v.is_finite()) {
            Some((name, v)) => Err(Error::Internal(format!(
                "non-finite {name} = {v} in row {}",
                self.label()
            ))),
            None => Ok(()),
        }
    }
}

/// Per-replication pseudo-regret realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub policy: String,
    pub params: String,
    pub horizon: u64,
    pub alpha: Option<f64>,
    pub replication: u64,
    pub total_reward: u64,
    pub pseudo_regret: f64,
    pub starved: bool,
}

impl SampleRow {
    pub fn from_cell(cell: &SweepCell) -> Vec<Self> {
        let mut records: Vec<_> = cell.records.iter().collect();
        records.sort_by_key(|r| r.replication);
        records
            .into_iter()
            .map(|r| SampleRow {
                policy: cell.policy.name().to_string(),
                params: cell.policy.params(),
                horizon: cell.point.horizon,
                alpha: cell.point.alpha,
                replication: r.replication,
                total_reward: r.total_reward,
                pseudo_regret: cell.aggregate.baseline.mean - r.total_reward as f64,
                starved: r.starved,
            })
            .collect()
    }
}

pub fn write_csv<W: Write, T: Serialize>(
    mut out: W,
    rows: &[T],
    comment: Option<&str>,
) -> Result<()> {
    if let Some(c) = comment {
        write!(out, "# {}\r\n", c.replace(['\n', '\r'], " "))?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(true)
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn read_result_rows<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let rows: Vec<ResultRow> = read_csv(input)?;
    for r in &rows {
        r.check_finite()?;
    }
    Ok(rows)
}

/// JSON mirror of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub rows: Vec<ResultRow>,
}

pub fn write_json<W: Write>(out: W, doc: &ResultsDocument) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, doc)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<ResultsDocument> {
    let doc: ResultsDocument = serde_json::from_reader(input)?;
    for r in &doc.rows {
        r.check_finite()?;
    }
    Ok(doc)
}
