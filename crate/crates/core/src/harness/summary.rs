use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{ResultRow, SCHEMA_VERSION};
use crate::error::{Error, Result};

/// Per `(experiment, method, n)`: median and the empirical 0.9 band of the gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub method: String,
    pub n: usize,
    pub count: usize,
    pub median_gap: f64,
    pub p05_gap: f64,
    pub p95_gap: f64,
    pub median_rank: f64,
}

/// Linear interpolation between order statistics at position `q·(len−1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::invalid("no rows to summarize"));
    }
    // (experiment, method, n) -> (gaps, ranks)
    type Key = (String, String, usize);
    let mut groups: BTreeMap<Key, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let entry = groups.entry((r.experiment.clone(), r.method.clone(), r.n)).or_default();
        entry.0.push(r.gap);
        entry.1.push(r.estimator_rank as f64);
    }
    let mut out: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((experiment, method, n), (mut gaps, mut ranks))| {
            gaps.sort_by(f64::total_cmp);
            ranks.sort_by(f64::total_cmp);
            SummaryRow {
                experiment,
                method,
                n,
                count: gaps.len(),
                median_gap: percentile(&gaps, 0.5),
                p05_gap: percentile(&gaps, 0.05),
                p95_gap: percentile(&gaps, 0.95),
                median_rank: percentile(&ranks, 0.5),
            }
        })
        .collect();
    out.sort_by(|a, b| (&a.experiment, a.n, &a.method).cmp(&(&b.experiment, b.n, &b.method)));
    Ok(out)
}

const ROW_HEADER: [&str; 10] = [
    "schema_version",
    "experiment",
    "method",
    "n",
    "replication",
    "seed",
    "welfare_true",
    "welfare_estimated",
    "gap",
    "estimator_rank",
];

/// Rows in the given order; `wall_time_ms` is written only if some row has it.
pub fn write_rows<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let timing = rows.iter().any(|r| r.wall_time_ms.is_some());
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = ROW_HEADER.to_vec();
    if timing {
        header.push("wall_time_ms");
    }
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            SCHEMA_VERSION.to_string(),
            r.experiment.clone(),
            r.method.clone(),
            r.n.to_string(),
            r.replication.to_string(),
            r.seed.to_string(),
            r.welfare_true.to_string(),
            r.welfare_estimated.to_string(),
            r.gap.to_string(),
            r.estimator_rank.to_string(),
        ];
        if timing {
            rec.push(r.wall_time_ms.map(|t| t.to_string()).unwrap_or_default());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RowRecord {
    schema_version: u32,
    experiment: String,
    method: String,
    n: usize,
    replication: usize,
    seed: u64,
    welfare_true: f64,
    welfare_estimated: f64,
    gap: f64,
    estimator_rank: usize,
    #[serde(default, deserialize_with = "csv::invalid_option")]
    wall_time_ms: Option<f64>,
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in reader.deserialize::<RowRecord>() {
        let rec = rec?;
        if rec.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema_version {}", rec.schema_version)));
        }
        rows.push(ResultRow {
            experiment: rec.experiment,
            method: rec.method,
            n: rec.n,
            replication: rec.replication,
            seed: rec.seed,
            welfare_true: rec.welfare_true,
            welfare_estimated: rec.welfare_estimated,
            gap: rec.gap,
            estimator_rank: rec.estimator_rank,
            wall_time_ms: rec.wall_time_ms,
        });
    }
    Ok(rows)
}

pub fn write_summary<W: Write>(summary: &[SummaryRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "schema_version",
        "experiment",
        "method",
        "n",
        "count",
        "median_gap",
        "p05_gap",
        "p95_gap",
        "median_rank",
    ])?;
    for s in summary {
        out.write_record([
            SCHEMA_VERSION.to_string(),
            s.experiment.clone(),
            s.method.clone(),
            s.n.to_string(),
            s.count.to_string(),
            s.median_gap.to_string(),
            s.p05_gap.to_string(),
            s.p95_gap.to_string(),
            s.median_rank.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rows_to_path(rows: &[ResultRow], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_rows(rows, std::fs::File::create(path)?)
}
