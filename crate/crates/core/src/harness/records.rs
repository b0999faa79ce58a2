use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::config::{MetricKind, SweepVariable};
use super::stats::BoxStats;
use crate::error::{Error, Result};

/// One row of figure data.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub algorithm: String,
    pub sweep: SweepVariable,
    pub sweep_value: f64,
    pub metric: MetricKind,
    pub value: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

fn header(sweep: SweepVariable, metric: MetricKind) -> [&'static str; 6] {
    ["Algorithm", sweep.column(), metric.column(), "stderr", "trials", "seed"]
}

/// Writes records as CSV. An empty list produces only the default header.
pub fn write_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let (sweep, metric) = records.first().map_or((SweepVariable::Antennas, MetricKind::Mse), |r| (r.sweep, r.metric));
    if records.iter().any(|r| r.sweep.column() != sweep.column() || r.metric != metric) {
        return Err(Error::InvalidArgument("records mix sweep variables or metrics".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(sweep, metric))?;
    for r in records {
        w.write_record([
            r.algorithm.clone(),
            r.sweep_value.to_string(),
            r.value.to_string(),
            r.stderr.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let f = File::create(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    write_csv(records, f)
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Config(format!("bad {what} field `{s}`")))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let h = rd.headers()?.clone();
    if h.len() != 6 || &h[0] != "Algorithm" || &h[3] != "stderr" || &h[4] != "trials" || &h[5] != "seed" {
        return Err(Error::Config(format!("unexpected header {h:?}")));
    }
    let sweep = SweepVariable::from_column(&h[1]).ok_or_else(|| Error::Config(format!("unknown sweep column `{}`", &h[1])))?;
    let metric = match &h[2] {
        "MSE" => MetricKind::Mse,
        "rate" => MetricKind::Rate,
        other => return Err(Error::Config(format!("unknown metric column `{other}`"))),
    };
    rd.records()
        .map(|row| {
            let row = row?;
            Ok(ResultRecord {
                algorithm: row[0].to_string(),
                sweep,
                sweep_value: parse_field(&row[1], "sweep")?,
                metric,
                value: parse_field(&row[2], "value")?,
                stderr: parse_field(&row[3], "stderr")?,
                trials: parse_field(&row[4], "trials")?,
                seed: parse_field(&row[5], "seed")?,
            })
        })
        .collect()
}

pub fn parse_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    read_csv(File::open(path)?)
}

/// Box-plot summary of repeated trainings for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRecord {
    pub method: String,
    pub stats: BoxStats,
    pub samples: Vec<f64>,
}

pub fn write_box_csv<W: Write>(records: &[BoxRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["Method", "median", "q1", "q3", "whisker_lo", "whisker_hi", "outliers", "samples"])?;
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
    for r in records {
        let s = &r.stats;
        w.write_record([
            r.method.clone(),
            s.median.to_string(),
            s.q1.to_string(),
            s.q3.to_string(),
            s.whisker_lo.to_string(),
            s.whisker_hi.to_string(),
            join(&s.outliers),
            join(&r.samples),
        ])?;
    }
    w.flush()?;
    Ok(())
}
