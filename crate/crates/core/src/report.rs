//! Plot-ready exports of check reports, evaluations and iteration logs.
//!
//! CSV files carry a header row and write floats with 17 significant
//! digits. Frequencies in CSV reports are physical rad/s; the JSON report
//! keeps normalized frequencies together with `omega_ref`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{fmt_f64, rms_error, FitSplit, RmsMode, SampledDataset};
use crate::enforcement::EnforceLogRow;
use crate::error::{Error, Result};
use crate::gsk::GskLogRow;
use crate::model::{Laplace, ParamModel};
use crate::passivity::ViolationReport;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Serializes `+∞` as `null` and reads `null` back as `+∞`.
pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Non-passive bands as
/// `theta, omega_low_rad_s, omega_high_rad_s, omega_max_rad_s, sigma_max`.
pub fn export_report(report: &ViolationReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        ReportFormat::Json => {
            let doc = ReportDoc {
                version: REPORT_FORMAT_VERSION,
                report: report.clone(),
            };
            let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::parse(path, e))?;
            fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
        }
        ReportFormat::Csv => {
            let w = report.omega_ref;
            let rows = report.samples.iter().flat_map(|s| {
                s.bands.iter().filter(|b| !b.passive).map(move |b| {
                    let worst = b.worst.expect("non-passive band has a worst point");
                    vec![
                        fmt_f64(s.theta),
                        fmt_f64(b.omega_low * w),
                        fmt_f64(b.omega_high * w),
                        fmt_f64(worst.omega * w),
                        fmt_f64(worst.sigma),
                    ]
                })
            });
            write_rows(
                path,
                &strings(&["theta", "omega_low_rad_s", "omega_high_rad_s", "omega_max_rad_s", "sigma_max"]),
                rows,
            )
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    version: u32,
    report: ViolationReport,
}

pub fn import_report_json(path: impl AsRef<Path>) -> Result<ViolationReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: ReportDoc = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    if doc.version != REPORT_FORMAT_VERSION {
        return Err(Error::parse(path, format!("unsupported report version {}", doc.version)));
    }
    Ok(doc.report)
}

/// `theta, psi` for every parameter sample, ascending in `theta`.
pub fn export_psi_csv(report: &ViolationReport, path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        &strings(&["theta", "psi"]),
        report.samples.iter().map(|s| vec![fmt_f64(s.theta), fmt_f64(s.psi)]),
    )
}

/// Responses on a frequency × parameter grid, frequency-major within each
/// parameter value. With `include_infinity` a row with `freq_hz = inf` is
/// appended per parameter value. `outside_domain` flags parameter values
/// outside the model's range.
pub fn export_eval_csv(
    model: &ParamModel,
    freqs_hz: &[f64],
    thetas: &[f64],
    include_infinity: bool,
    path: impl AsRef<Path>,
) -> Result<()> {
    let p = model.ports();
    let mut header = strings(&["freq_hz", "theta", "outside_domain"]);
    for i in 1..=p {
        for j in 1..=p {
            header.push(format!("ReS{i}{j}"));
            header.push(format!("ImS{i}{j}"));
        }
    }
    let mut rows = Vec::new();
    for &t in thetas {
        let outside = !model.param_basis().contains(t);
        let mut pts: Vec<(f64, Laplace)> = freqs_hz.iter().map(|&f| (f, model.s_at_hz(f))).collect();
        if include_infinity {
            pts.push((f64::INFINITY, Laplace::Infinity));
        }
        for (f, s) in pts {
            let h = model.eval_transfer(s, t)?;
            let mut r = vec![fmt_f64(f), fmt_f64(t), (outside as u8).to_string()];
            for i in 0..p {
                for j in 0..p {
                    r.push(fmt_f64(h[(i, j)].re));
                    r.push(fmt_f64(h[(i, j)].im));
                }
            }
            rows.push(r);
        }
    }
    write_rows(path.as_ref(), &header, rows)
}

pub fn export_gsk_log_csv(log: &[GskLogRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        &strings(&["iteration", "weighted_residual", "max_coeff_change"]),
        log.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                fmt_f64(r.weighted_residual),
                fmt_f64(r.max_coeff_change),
            ]
        }),
    )
}

pub fn export_enforce_log_csv(log: &[EnforceLogRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        &strings(&["iteration", "n_violations", "max_sigma", "cost_value", "rms_abs", "rms_rel"]),
        log.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                r.n_violations.to_string(),
                fmt_f64(r.max_sigma),
                fmt_f64(r.cost_value),
                fmt_f64(r.rms_abs),
                fmt_f64(r.rms_rel),
            ]
        }),
    )
}

/// Per-entry absolute and relative RMS on the fitting and validation
/// columns, one row per matrix entry plus a `worst` row. Validation columns
/// are empty when the split has none.
pub fn export_fit_report_csv(
    model: &ParamModel,
    data: &SampledDataset,
    split: &FitSplit,
    path: impl AsRef<Path>,
) -> Result<()> {
    let p = model.ports();
    let fit_abs = rms_error(model, data, split.fit(), RmsMode::Absolute)?;
    let fit_rel = rms_error(model, data, split.fit(), RmsMode::Relative)?;
    let val = if split.validation().is_empty() {
        None
    } else {
        Some((
            rms_error(model, data, split.validation(), RmsMode::Absolute)?,
            rms_error(model, data, split.validation(), RmsMode::Relative)?,
        ))
    };
    let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut rows = Vec::with_capacity(p * p + 1);
    for i in 0..p {
        for j in 0..p {
            rows.push(vec![
                format!("S{}{}", i + 1, j + 1),
                fmt_f64(fit_abs.per_entry[(i, j)]),
                fmt_f64(fit_rel.per_entry[(i, j)]),
                cell(val.as_ref().map(|v| v.0.per_entry[(i, j)])),
                cell(val.as_ref().map(|v| v.1.per_entry[(i, j)])),
            ]);
        }
    }
    rows.push(vec![
        "worst".into(),
        fmt_f64(fit_abs.worst),
        fmt_f64(fit_rel.worst),
        cell(val.as_ref().map(|v| v.0.worst)),
        cell(val.as_ref().map(|v| v.1.worst)),
    ]);
    write_rows(
        path.as_ref(),
        &strings(&["entry", "abs_rms_fit", "rel_rms_fit", "abs_rms_validation", "rel_rms_validation"]),
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::passivity::{adaptive_check, CheckConfig};

    fn read(path: &Path) -> Vec<Vec<String>> {
        let mut r = csv::Reader::from_path(path).unwrap();
        r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
    }

    #[test]
    fn passive_report_has_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let rep = adaptive_check(&fixtures::single_pole(0.5), &CheckConfig::default()).unwrap();
        let path = dir.path().join("v.csv");
        export_report(&rep, &path, ReportFormat::Csv).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("theta,omega_low_rad_s"));
    }

    #[test]
    fn one_violation_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = CheckConfig {
            kappa: 1,
            ..CheckConfig::default()
        };
        let m = fixtures::single_pole(2.0);
        let mut rep = adaptive_check(&m, &cfg).unwrap();
        rep.samples.truncate(1);
        let path = dir.path().join("v.csv");
        export_report(&rep, &path, ReportFormat::Csv).unwrap();
        let rows = read(&path);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].len(), 5);
        let hi: f64 = rows[0][2].parse().unwrap();
        assert!((hi - 3f64.sqrt()).abs() <= 1e-6);
        assert_eq!(rows[0][4].parse::<f64>().unwrap(), 2.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = fixtures::random_model(3, 2, 1, 2, 2, 1.2);
        let rep = adaptive_check(&m, &CheckConfig::default()).unwrap();
        let path = dir.path().join("r.json");
        export_report(&rep, &path, ReportFormat::Json).unwrap();
        let back = import_report_json(&path).unwrap();
        assert_eq!(back, rep);
        assert!(back.samples[0].bands.last().unwrap().omega_high.is_infinite());
    }

    #[test]
    fn eval_rows_match_model() {
        let dir = tempfile::tempdir().unwrap();
        let m = fixtures::single_pole(2.0);
        let path = dir.path().join("e.csv");
        export_eval_csv(&m, &[0.0, 0.5], &[0.5, 2.0], true, &path).unwrap();
        let rows = read(&path);
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0][3].parse::<f64>().unwrap(), 2.0);
        assert_eq!(rows[2][0], "inf");
        assert_eq!(rows[2][3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(rows[0][2], "0");
        assert_eq!(rows[3][2], "1");
    }

    #[test]
    fn fit_report_shape() {
        let dir = tempfile::tempdir().unwrap();
        let m = fixtures::random_model(1, 2, 1, 1, 2, 0.9);
        let d = fixtures::dataset_from_model(&m, &[0.1, 0.2, 0.3], &[0.0, 0.5, 1.0]);
        let path = dir.path().join("f.csv");
        export_fit_report_csv(&m, &d, &FitSplit::alternating(3), &path).unwrap();
        let rows = read(&path);
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[4][0], "worst");
        assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() <= 1e-12));
    }
}
