use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use super::config::OutputFormat;
use crate::error::{Error, Result};

/// Metrics of one trial at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub sweep_value: f64,
    pub trial: u64,
    pub metrics: BTreeMap<String, f64>,
    /// Seed of the trial's channel stream.
    pub seed: u64,
}

/// Mean and standard error of one metric at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub sweep_value: f64,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// One objective value of a hybrid design run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep_value: f64,
    pub trial: u64,
    pub architecture: String,
    pub iteration: usize,
    pub objective: f64,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Aggregates records per `(sweep_value, metric)` in first-seen order.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut groups: Vec<((String, u64, String), Vec<f64>)> = Vec::new();
    let mut index: BTreeMap<(String, u64, String), usize> = BTreeMap::new();
    for r in records {
        for (metric, v) in &r.metrics {
            let key = (
                r.experiment.clone(),
                r.sweep_value.to_bits(),
                metric.clone(),
            );
            let slot = *index.entry(key.clone()).or_insert_with(|| {
                groups.push((key, Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(*v);
        }
    }
    groups
        .into_iter()
        .map(|((experiment, bits, metric), values)| {
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std_error = if n > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                experiment,
                sweep_value: f64::from_bits(bits),
                metric,
                count: n,
                mean,
                std_error,
            }
        })
        .collect()
}

pub fn records_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("experiment,sweep_value,trial,metric,value,seed\n");
    for r in records {
        for (metric, v) in &r.metrics {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.experiment,
                format_number(r.sweep_value),
                r.trial,
                metric,
                format_number(*v),
                r.seed
            );
        }
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("experiment,sweep_value,metric,count,mean,std_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.experiment,
            format_number(r.sweep_value),
            r.metric,
            r.count,
            format_number(r.mean),
            format_number(r.std_error)
        );
    }
    out
}

pub fn traces_csv(experiment: &str, rows: &[TraceRow]) -> String {
    let mut out = String::from("experiment,sweep_value,trial,architecture,iteration,objective\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{experiment},{},{},{},{},{}",
            format_number(r.sweep_value),
            r.trial,
            r.architecture,
            r.iteration,
            format_number(r.objective)
        );
    }
    out
}

/// Compact JSON whose floats carry 17 significant digits.
struct ScientificFormatter;

impl Formatter for ScientificFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_number(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn records_json(records: &[TrialRecord]) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ScientificFormatter);
    records.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn check_records(records: &[TrialRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to write".into()));
    }
    for r in records {
        if !r.sweep_value.is_finite() || r.metrics.values().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trial metrics"));
        }
    }
    Ok(())
}

/// Writes records as CSV (one row per metric) or a JSON array.
pub fn emit_results(records: &[TrialRecord], format: OutputFormat, path: &Path) -> Result<()> {
    check_records(records)?;
    let text = match format {
        OutputFormat::Csv => records_csv(records),
        OutputFormat::Json => records_json(records)?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `results.csv` -> `results.<suffix>.csv`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(sweep: f64, trial: u64, metrics: &[(&str, f64)]) -> TrialRecord {
        TrialRecord {
            experiment: "rate_vs_snr".into(),
            sweep_value: sweep,
            trial,
            metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            seed: 40 + trial,
        }
    }

    #[test]
    fn csv_has_one_row_per_metric() {
        let text = records_csv(&[record(0.0, 1, &[("rate", 1.5), ("mi", 0.1)])]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "experiment,sweep_value,trial,metric,value,seed");
        assert_eq!(
            lines[1],
            "rate_vs_snr,0.0000000000000000e0,1,mi,1.0000000000000001e-1,41"
        );
        assert_eq!(
            lines[2],
            "rate_vs_snr,0.0000000000000000e0,1,rate,1.5000000000000000e0,41"
        );
    }

    #[test]
    fn json_round_trips() {
        let records = vec![
            record(-5.0, 0, &[("a", 1.0 / 3.0), ("b", 1e-300)]),
            record(10.0, 1, &[("a", std::f64::consts::PI)]),
        ];
        let text = records_json(&records).unwrap();
        assert!(text.contains("3.3333333333333331e-1"));
        let back: Vec<TrialRecord> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn empty_records_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        assert!(emit_results(&[], OutputFormat::Csv, &path).is_err());
        assert!(!path.exists());
        emit_results(&[record(0.0, 0, &[("x", 1.0)])], OutputFormat::Json, &path).unwrap();
        assert!(path.exists());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("out.csv");
        assert!(matches!(
            emit_results(&[record(0.0, 0, &[("x", 1.0)])], OutputFormat::Csv, &path),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn summary_matches_direct_computation() {
        let records: Vec<TrialRecord> = (0..5)
            .flat_map(|t| {
                [
                    record(0.0, t, &[("x", t as f64), ("y", 2.0)]),
                    record(5.0, t, &[("x", (t * t) as f64)]),
                ]
            })
            .collect();
        let rows = summarize(&records);
        assert_eq!(rows.len(), 3);
        let x0 = &rows[0];
        assert_eq!(
            (x0.sweep_value, x0.metric.as_str(), x0.count),
            (0.0, "x", 5)
        );
        assert_eq!(x0.mean, 2.0);
        assert!((x0.std_error - (2.5f64 / 5.0).sqrt()).abs() < 1e-15);
        assert_eq!(rows[1].std_error, 0.0);
        assert_eq!(rows[2].mean, 6.0);
    }

    #[test]
    fn sibling_names() {
        assert_eq!(
            sibling_path(Path::new("/a/b/res.csv"), "summary"),
            Path::new("/a/b/res.summary.csv")
        );
        assert_eq!(
            sibling_path(Path::new("res.json"), "traces"),
            Path::new("res.traces.csv")
        );
    }
}
