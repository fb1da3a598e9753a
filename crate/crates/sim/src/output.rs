//! CSV and JSON emission.
//!
//! JSON documents carry the resolved configuration, its digest and the seed
//! next to the results. Floats are written in shortest round-trip form, so a
//! given result always produces the same bytes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::LinkConfig;
use crate::error::{Result, SimError};
use crate::sweep::{AbepCurve, BerCurve, CompareTable, IqiSweepResult};
use crate::validate::ValidationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A result that can be written as a CSV table or a JSON document.
pub trait Emit {
    /// Short name of the result type, stored as `kind` in JSON.
    fn kind(&self) -> &'static str;
    fn write_csv<W: Write>(&self, w: W) -> Result<()>;
    fn results_json(&self) -> Result<Value>;
}

#[derive(Serialize)]
struct BerRow {
    snr_db: f64,
    ber: f64,
    bit_errors: u64,
    bits: u64,
    frames: u64,
}

#[derive(Serialize)]
struct IqiRow {
    aim_db: f64,
    pim_deg: f64,
    ber_sim: f64,
    abep_bound: f64,
}

#[derive(Serialize)]
struct AbepRow {
    snr_db: f64,
    abep_bound: f64,
    dominant_bound: f64,
}

#[derive(Serialize)]
struct CompareCsvRow {
    waveform: String,
    target_ber: f64,
    ideal_snr_db: Option<f64>,
    impaired_snr_db: Option<f64>,
    loss_db: Option<f64>,
    reached: bool,
}

#[derive(Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    passed: bool,
    measured: f64,
    threshold: f64,
    seconds: f64,
    detail: &'a str,
}

fn write_rows<W: Write, R: Serialize>(w: W, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

impl Emit for BerCurve {
    fn kind(&self) -> &'static str {
        "ber_curve"
    }

    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            self.points.iter().map(|p| BerRow {
                snr_db: p.snr_db,
                ber: p.ber,
                bit_errors: p.bit_errors,
                bits: p.bits,
                frames: p.frames,
            }),
        )
    }

    fn results_json(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

impl Emit for IqiSweepResult {
    fn kind(&self) -> &'static str {
        "iqi_sweep"
    }

    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            self.points.iter().map(|p| IqiRow {
                aim_db: p.aim_db,
                pim_deg: p.pim_deg,
                ber_sim: p.ber_sim,
                abep_bound: p.abep_bound,
            }),
        )
    }

    fn results_json(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

impl Emit for AbepCurve {
    fn kind(&self) -> &'static str {
        "abep_curve"
    }

    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            self.points.iter().map(|p| AbepRow {
                snr_db: p.snr_db,
                abep_bound: p.abep_bound,
                dominant_bound: p.dominant_bound,
            }),
        )
    }

    fn results_json(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

impl Emit for CompareTable {
    fn kind(&self) -> &'static str {
        "waveform_compare"
    }

    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            self.rows.iter().map(|r| CompareCsvRow {
                waveform: r.waveform.to_string(),
                target_ber: r.target_ber,
                ideal_snr_db: r.ideal_snr_db,
                impaired_snr_db: r.impaired_snr_db,
                loss_db: r.loss_db,
                reached: r.reached,
            }),
        )
    }

    fn results_json(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

impl Emit for ValidationReport {
    fn kind(&self) -> &'static str {
        "validation"
    }

    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            self.checks.iter().map(|c| CheckRow {
                name: &c.name,
                passed: c.passed,
                measured: c.measured,
                threshold: c.threshold,
                seconds: c.seconds,
                detail: &c.detail,
            }),
        )
    }

    fn results_json(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

/// Full JSON document: kind, seed, digest, resolved config and results.
pub fn to_json_document(result: &impl Emit, cfg: Option<&LinkConfig>) -> Result<Value> {
    let mut doc = json!({ "kind": result.kind(), "results": result.results_json()? });
    if let Some(cfg) = cfg {
        doc["seed"] = json!(cfg.seed);
        doc["config_digest"] = json!(cfg.digest()?);
        doc["config"] = serde_json::to_value(cfg.canonical()?)?;
    }
    Ok(doc)
}

/// Bytes of `result` in `format`.
pub fn render(result: &impl Emit, cfg: Option<&LinkConfig>, format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => result.write_csv(&mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &to_json_document(result, cfg)?)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Writes `result` to `path`, or to stdout when `path` is `None`.
pub fn emit_results(result: &impl Emit, cfg: Option<&LinkConfig>, format: Format, path: Option<&Path>) -> Result<()> {
    let bytes = render(result, cfg, format)?;
    match path {
        Some(p) => std::fs::write(p, &bytes).map_err(|source| SimError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)
                .and_then(|_| out.flush())
                .map_err(|source| SimError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::BerPoint;

    fn curve() -> BerCurve {
        BerCurve {
            points: vec![
                BerPoint {
                    snr_db: 0.0,
                    ber: 0.078125,
                    bit_errors: 500,
                    bits: 6400,
                    frames: 50,
                    truncated: false,
                },
                BerPoint {
                    snr_db: 2.5,
                    ber: 0.01,
                    bit_errors: 64,
                    bits: 6400,
                    frames: 50,
                    truncated: true,
                },
            ],
            config_digest: "abc".into(),
            seed: 9,
        }
    }

    #[test]
    fn csv_golden() {
        let text = String::from_utf8(render(&curve(), None, Format::Csv).unwrap()).unwrap();
        assert_eq!(
            text,
            "snr_db,ber,bit_errors,bits,frames\n0.0,0.078125,500,6400,50\n2.5,0.01,64,6400,50\n"
        );
    }

    #[test]
    fn json_document_round_trips_config() {
        let cfg = LinkConfig::example();
        let doc = to_json_document(&curve(), Some(&cfg)).unwrap();
        assert_eq!(doc["kind"], "ber_curve");
        assert_eq!(doc["results"]["points"][1]["truncated"], true);
        let back = LinkConfig::from_json_value(doc["config"].clone()).unwrap();
        assert_eq!(back, cfg.canonical().unwrap());
        assert_eq!(back.digest().unwrap(), doc["config_digest"]);
    }

    #[test]
    fn write_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("missing").join("out.csv");
        let err = emit_results(&curve(), None, Format::Csv, Some(&bad)).unwrap_err();
        assert_eq!(err.kind(), "io");
        assert!(err.to_string().contains("missing"));
    }
}
