//! Group rates of generated samples, distance to a target distribution, and
//! aggregation over repeated runs.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::data::{csv_error, GroupAssigner};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupRateReport {
    pub run_id: String,
    pub seed: u64,
    pub model: String,
    pub dataset: String,
    pub assigner: String,
    pub counts: Vec<usize>,
    pub rates: Vec<f64>,
    pub target: Vec<f64>,
    pub tv: f64,
}

impl GroupRateReport {
    pub fn groups(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn worst_group_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn with_run(mut self, run_id: impl Into<String>, seed: u64, model: impl Into<String>, dataset: impl Into<String>) -> Self {
        self.run_id = run_id.into();
        self.seed = seed;
        self.model = model.into();
        self.dataset = dataset.into();
        self
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        (0..self.groups())
            .map(|g| ReportRow {
                run_id: self.run_id.clone(),
                seed: self.seed,
                model: self.model.clone(),
                dataset: self.dataset.clone(),
                group_id: g,
                target_prop: self.target[g],
                count: self.counts[g],
                rate: self.rates[g],
                tv_distance: self.tv,
                status: RunStatus::Ok,
            })
            .collect()
    }
}

fn check_distribution(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(format!("{what} has negative or non-finite entries")));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::invalid(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Half the L1 distance between two distributions over the same groups.
pub fn tv_distance(rates: &[f64], target: &[f64]) -> Result<f64> {
    if rates.len() != target.len() {
        return Err(Error::ShapeMismatch {
            op: "tv_distance",
            left: vec![rates.len()],
            right: vec![target.len()],
        });
    }
    let tv = 0.5 * rates.iter().zip(target).map(|(r, t)| (r - t).abs()).sum::<f64>();
    Ok(tv.clamp(0.0, 1.0))
}

pub fn group_counts(samples: &Tensor, assigner: &GroupAssigner) -> Result<Vec<usize>> {
    let mut counts = vec![0; assigner.groups()];
    for row in samples.iter_rows() {
        counts[assigner.assign(row)?] += 1;
    }
    Ok(counts)
}

/// Assigns every row and compares the resulting rates with `target`.
pub fn group_rates(samples: &Tensor, assigner: &GroupAssigner, target: &[f64]) -> Result<GroupRateReport> {
    if samples.shape().len() != 2 || samples.rows() == 0 {
        return Err(Error::EmptyInput { op: "group_rates" });
    }
    if target.len() != assigner.groups() {
        return Err(Error::invalid(format!(
            "target has {} groups but the assigner produces {}",
            target.len(),
            assigner.groups()
        )));
    }
    check_distribution(target, "target")?;
    let counts = group_counts(samples, assigner)?;
    let n = samples.rows() as f64;
    let rates: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let tv = tv_distance(&rates, target)?;
    Ok(GroupRateReport {
        run_id: String::new(),
        seed: 0,
        model: String::new(),
        dataset: String::new(),
        assigner: assigner.describe(),
        counts,
        rates,
        target: target.to_vec(),
        tv,
    })
}

/// Fraction of samples generated under `label` that the assigner puts back in `label`.
pub fn conditional_purity(samples: &Tensor, assigner: &GroupAssigner, label: usize) -> Result<f64> {
    if samples.shape().len() != 2 || samples.rows() == 0 {
        return Err(Error::EmptyInput { op: "conditional_purity" });
    }
    if label >= assigner.groups() {
        return Err(Error::invalid(format!("label {label} outside {} groups", assigner.groups())));
    }
    let counts = group_counts(samples, assigner)?;
    Ok(counts[label] as f64 / samples.rows() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// Order statistics with the lower-median convention; quartiles use the same lower-index rule.
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput { op: "summary" });
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Ok(Self {
            median: v[(n - 1) / 2],
            q1: v[(n - 1) / 4],
            q3: v[3 * (n - 1) / 4],
            min: v[0],
            max: v[n - 1],
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateReport {
    pub runs: usize,
    pub groups: Vec<Summary>,
    pub tv: Summary,
    /// Smallest group rate seen in any run.
    pub worst_group_min_rate: f64,
}

impl AggregateReport {
    pub fn median_tv(&self) -> f64 {
        self.tv.median
    }

    pub fn max_tv(&self) -> f64 {
        self.tv.max
    }
}

pub fn aggregate_runs(reports: &[GroupRateReport]) -> Result<AggregateReport> {
    let Some(first) = reports.first() else {
        return Err(Error::EmptyInput { op: "aggregate_runs" });
    };
    let k = first.groups();
    if let Some(bad) = reports.iter().find(|r| r.groups() != k) {
        return Err(Error::invalid(format!(
            "reports disagree on group count: {k} vs {}",
            bad.groups()
        )));
    }
    let groups = (0..k)
        .map(|g| Summary::of(&reports.iter().map(|r| r.rates[g]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let tv = Summary::of(&reports.iter().map(|r| r.tv).collect::<Vec<_>>())?;
    let worst_group_min_rate = reports
        .iter()
        .map(GroupRateReport::worst_group_rate)
        .fold(f64::INFINITY, f64::min);
    Ok(AggregateReport {
        runs: reports.len(),
        groups,
        tv,
        worst_group_min_rate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RunStatus {
    Ok,
    Diverged,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged => "diverged",
        })
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(RunStatus::Ok),
            "diverged" => Ok(RunStatus::Diverged),
            other => Err(Error::invalid(format!("unknown run status `{other}`"))),
        }
    }
}

/// One line of `metrics.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub run_id: String,
    pub seed: u64,
    pub model: String,
    pub dataset: String,
    pub group_id: usize,
    pub target_prop: f64,
    pub count: usize,
    pub rate: f64,
    pub tv_distance: f64,
    pub status: RunStatus,
}

impl ReportRow {
    /// Placeholder rows for a run that produced no samples.
    pub fn diverged(run_id: &str, seed: u64, model: &str, dataset: &str, target: &[f64]) -> Vec<Self> {
        target
            .iter()
            .enumerate()
            .map(|(g, &t)| ReportRow {
                run_id: run_id.to_string(),
                seed,
                model: model.to_string(),
                dataset: dataset.to_string(),
                group_id: g,
                target_prop: t,
                count: 0,
                rate: f64::NAN,
                tv_distance: f64::NAN,
                status: RunStatus::Diverged,
            })
            .collect()
    }
}

pub const REPORT_HEADER: [&str; 10] = [
    "run_id",
    "seed",
    "model",
    "dataset",
    "group_id",
    "target_prop",
    "count",
    "rate",
    "tv_distance",
    "status",
];

fn fixed6(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.6}")
    }
}

pub fn write_report_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(REPORT_HEADER).map_err(|e| csv_error(Path::new("report"), e))?;
    for r in rows {
        w.write_record([
            r.run_id.clone(),
            r.seed.to_string(),
            r.model.clone(),
            r.dataset.clone(),
            r.group_id.to_string(),
            fixed6(r.target_prop),
            r.count.to_string(),
            fixed6(r.rate),
            fixed6(r.tv_distance),
            r.status.to_string(),
        ])
        .map_err(|e| csv_error(Path::new("report"), e))?;
    }
    w.flush().map_err(|e| Error::io("report", e))
}

/// Writes the report header and rows; an empty slice gives a header-only file.
pub fn emit_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_report_csv(std::io::BufWriter::new(file), rows).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 9 || header.iter().zip(REPORT_HEADER).any(|(a, b)| a != b) {
        return Err(Error::parse(path, 1, "unexpected report header"));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        let field = |j: usize| record.get(j).ok_or_else(|| Error::parse(path, line, format!("missing column {j}")));
        fn num<T: FromStr>(s: &str, path: &Path, line: usize) -> Result<T> {
            s.parse().map_err(|_| Error::parse(path, line, format!("bad value `{s}`")))
        }
        rows.push(ReportRow {
            run_id: field(0)?.to_string(),
            seed: num(field(1)?, path, line)?,
            model: field(2)?.to_string(),
            dataset: field(3)?.to_string(),
            group_id: num(field(4)?, path, line)?,
            target_prop: num(field(5)?, path, line)?,
            count: num(field(6)?, path, line)?,
            rate: num(field(7)?, path, line)?,
            tv_distance: num(field(8)?, path, line)?,
            status: match record.get(9) {
                Some(s) => s.parse()?,
                None => RunStatus::Ok,
            },
        });
    }
    Ok(rows)
}
