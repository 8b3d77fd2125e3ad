//! Result files: rows as CSV or json-lines with the config echoed on top,
//! plot data as `x,y,ci_lo,ci_hi`, and a metadata sidecar holding the
//! timings so the row file stays byte-identical across reruns.

use std::io::Write;
use std::path::{Path, PathBuf};

use doublestable_core::estimators::{EstimateRecord, CSV_COLUMNS};
use doublestable_core::{Error, Result};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format, ECHO_PREFIX};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl PlotPoint {
    /// `y ± 2 se`.
    pub fn with_se(x: f64, y: f64, se: f64) -> Self {
        Self { x, y, ci_lo: y - 2.0 * se, ci_hi: y + 2.0 * se }
    }
}

/// Everything a command produces.
#[derive(Debug, Default)]
pub struct Outcome {
    pub rows: Vec<EstimateRecord>,
    pub plot: Vec<PlotPoint>,
    /// Wall-clock seconds per stage.
    pub stages: Vec<(String, f64)>,
}

impl Outcome {
    pub fn timed<T>(&mut self, stage: impl Into<String>, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = std::time::Instant::now();
        let v = f()?;
        self.stages.push((stage.into(), start.elapsed().as_secs_f64()));
        Ok(v)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Serialize)]
struct JsonRow<'a> {
    #[serde(flatten)]
    record: &'a EstimateRecord,
    config_digest: &'a str,
}

pub fn write_rows<W: Write>(config: &ExperimentConfig, rows: &[EstimateRecord], mut out: W) -> Result<()> {
    let digest = config.digest();
    match config.format {
        Format::Csv => {
            for (k, v) in config.echo() {
                writeln!(out, "{ECHO_PREFIX}{k}={v}")?;
            }
            let mut w = csv::Writer::from_writer(out);
            let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
            header.extend(["note", "config_digest"]);
            w.write_record(&header).map_err(csv_err)?;
            for r in rows {
                let mut fields = r.csv_fields();
                fields.push(r.note.clone());
                fields.push(digest.clone());
                w.write_record(&fields).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let echo: serde_json::Map<String, serde_json::Value> =
                config.echo().into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
            let header = serde_json::json!({ "config": echo, "config_digest": digest });
            writeln!(out, "{header}")?;
            for r in rows {
                let line = serde_json::to_string(&JsonRow { record: r, config_digest: &digest })
                    .map_err(|e| Error::Format(e.to_string()))?;
                writeln!(out, "{line}")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

pub fn write_plot<W: Write>(points: &[PlotPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(csv_err)?;
    }
    if points.is_empty() {
        w.write_record(["x", "y", "ci_lo", "ci_hi"]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` gives `results.plot.csv` and `results.meta.json`.
pub fn sidecars(out: &Path) -> (PathBuf, PathBuf) {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    (out.with_file_name(format!("{stem}.plot.csv")), out.with_file_name(format!("{stem}.meta.json")))
}

#[derive(Serialize)]
pub struct Metadata {
    pub command: String,
    pub config_digest: String,
    pub version: &'static str,
    pub threads: usize,
    pub started_unix: f64,
    pub wall_seconds: f64,
    pub stages: Vec<(String, f64)>,
    pub rows: usize,
}

pub fn write_metadata<W: Write>(meta: &Metadata, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, meta).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_text, Command};

    fn rows() -> Vec<EstimateRecord> {
        vec![
            EstimateRecord::new("a", 0.5, 0.1, 10).with_rho(0.2).flag("chi2=1.0,dof=3"),
            EstimateRecord::new("b", f64::NAN, 0.0, 1).with_target(1.0, "1/qF2"),
        ]
    }

    #[test]
    fn csv_layout_and_replay() {
        let c = ExperimentConfig::new(Command::Sweep);
        let mut buf = Vec::new();
        write_rows(&c, &rows(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(
            header,
            "name,rho,y,estimate,se,clustered_se,target,target_provenance,z,count,seed,note,config_digest"
        );
        assert!(text.contains("\"chi2=1.0,dof=3\""));
        let back = ExperimentConfig::from_pairs(&parse_text(&text).unwrap()).unwrap();
        assert_eq!(back, c);
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let recs: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(&recs[1][3], "NaN");
        assert_eq!(&recs[0][12], c.digest());
    }

    #[test]
    fn jsonl_layout_and_replay() {
        let mut c = ExperimentConfig::new(Command::Ac);
        c.format = Format::Jsonl;
        let mut buf = Vec::new();
        write_rows(&c, &rows(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        let row: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        assert_eq!(row["name"], "a");
        assert_eq!(row["config_digest"], c.digest());
        assert_eq!(ExperimentConfig::from_pairs(&parse_text(&text).unwrap()).unwrap(), c);
    }

    #[test]
    fn plot_and_sidecar_names() {
        let mut buf = Vec::new();
        write_plot(&[PlotPoint::with_se(1.0, 2.0, 0.5)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,ci_lo,ci_hi\n1.0,2.0,1.0,3.0\n");
        let (p, m) = sidecars(Path::new("/tmp/run/res.csv"));
        assert_eq!(p, Path::new("/tmp/run/res.plot.csv"));
        assert_eq!(m, Path::new("/tmp/run/res.meta.json"));
    }
}
