//! Tabulated scattering data on a frequency × parameter grid.
//!
//! On disk a dataset is a JSON manifest plus one CSV file per parameter
//! value:
//!
//! ```text
//! {
//!   "parameter_name": "radius", "parameter_unit": "um", "ports": 2,
//!   "parameter_values": [400.0, 425.0, …],
//!   "files": ["link_m0.csv", "link_m1.csv", …]
//! }
//! ```
//!
//! Each CSV has the header `freq_hz,ReS11,ImS11,ReS12,ImS12,…` with the
//! matrix entries in row-major port order. File paths are resolved relative
//! to the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParamModel;

const FREQ_MATCH_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledDataset {
    ports: usize,
    freqs_hz: Vec<f64>,
    params: Vec<f64>,
    // samples[m * k̄ + k]
    samples: Vec<DMatrix<Complex64>>,
    parameter_name: String,
    parameter_unit: String,
}

impl SampledDataset {
    /// Builds a dataset from a grid laid out parameter-major:
    /// `samples[m * freqs.len() + k]` is the matrix at `(f_k, ϑ_m)`.
    pub fn new(
        ports: usize,
        freqs_hz: Vec<f64>,
        params: Vec<f64>,
        samples: Vec<DMatrix<Complex64>>,
    ) -> Result<Self> {
        if ports == 0 {
            return Err(Error::InvalidData("dataset needs at least one port".into()));
        }
        if freqs_hz.is_empty() || params.is_empty() {
            return Err(Error::InvalidData("empty frequency or parameter axis".into()));
        }
        if samples.len() != freqs_hz.len() * params.len() {
            return Err(Error::InvalidData(format!(
                "grid has {} samples, expected {}x{}",
                samples.len(),
                freqs_hz.len(),
                params.len()
            )));
        }
        check_strictly_ascending(&freqs_hz, "frequency")?;
        check_strictly_ascending(&params, "parameter")?;
        if freqs_hz[0] < 0.0 {
            return Err(Error::InvalidData("negative frequency".into()));
        }
        for (idx, s) in samples.iter().enumerate() {
            if s.shape() != (ports, ports) {
                return Err(Error::InvalidData(format!(
                    "sample {idx} is {:?}, expected {ports}x{ports}",
                    s.shape()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                let (m, k) = (idx / freqs_hz.len(), idx % freqs_hz.len());
                return Err(Error::InvalidData(format!(
                    "non-finite entry at frequency index {k}, parameter index {m}"
                )));
            }
        }
        Ok(Self {
            ports,
            freqs_hz,
            params,
            samples,
            parameter_name: "theta".into(),
            parameter_unit: String::new(),
        })
    }

    pub fn with_parameter_label(mut self, name: &str, unit: &str) -> Self {
        self.parameter_name = name.into();
        self.parameter_unit = unit.into();
        self
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn n_freqs(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn f_max(&self) -> f64 {
        *self.freqs_hz.last().expect("non-empty axis")
    }

    pub fn f_min(&self) -> f64 {
        self.freqs_hz[0]
    }

    pub fn parameter_name(&self) -> &str {
        &self.parameter_name
    }

    pub fn parameter_unit(&self) -> &str {
        &self.parameter_unit
    }

    /// Sample at frequency index `k`, parameter index `m`.
    pub fn sample(&self, k: usize, m: usize) -> &DMatrix<Complex64> {
        &self.samples[m * self.freqs_hz.len() + k]
    }

    /// Writes the manifest and one CSV per parameter value next to it.
    pub fn save(&self, manifest_path: impl AsRef<Path>) -> Result<()> {
        let manifest_path = manifest_path.as_ref();
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let stem = manifest_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset");
        let mut files = Vec::with_capacity(self.params.len());
        for m in 0..self.params.len() {
            let name = format!("{stem}_m{m}.csv");
            let path = dir.join(&name);
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::parse(&path, e))?;
            w.write_record(csv_header(self.ports)).map_err(|e| Error::parse(&path, e))?;
            for (k, f) in self.freqs_hz.iter().enumerate() {
                let s = self.sample(k, m);
                let mut row = vec![fmt_f64(*f)];
                for i in 0..self.ports {
                    for j in 0..self.ports {
                        row.push(fmt_f64(s[(i, j)].re));
                        row.push(fmt_f64(s[(i, j)].im));
                    }
                }
                w.write_record(&row).map_err(|e| Error::parse(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            files.push(name);
        }
        let manifest = Manifest {
            parameter_name: self.parameter_name.clone(),
            parameter_unit: self.parameter_unit.clone(),
            ports: self.ports,
            parameter_values: self.params.clone(),
            files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(manifest_path, text + "\n").map_err(|e| Error::io(manifest_path, e))
    }
}

fn check_strictly_ascending(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite {what} value")));
    }
    for w in v.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidData(format!(
                "{what} axis is not strictly ascending at {} -> {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub(crate) fn csv_header(ports: usize) -> Vec<String> {
    let mut h = vec!["freq_hz".to_string()];
    for i in 1..=ports {
        for j in 1..=ports {
            h.push(format!("ReS{i}{j}"));
            h.push(format!("ImS{i}{j}"));
        }
    }
    h
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    parameter_name: String,
    parameter_unit: String,
    ports: usize,
    parameter_values: Vec<f64>,
    files: Vec<String>,
}

/// Loads and validates a dataset from its manifest.
///
/// Rows inside each CSV may appear in any order; they are sorted by
/// frequency. Parameter files are sorted by parameter value. All files must
/// share one frequency axis to within 1e-9 relative.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<SampledDataset> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::parse(manifest_path, e))?;
    if manifest.files.len() != manifest.parameter_values.len() {
        return Err(Error::parse(
            manifest_path,
            format!(
                "{} files listed for {} parameter values",
                manifest.files.len(),
                manifest.parameter_values.len()
            ),
        ));
    }
    if manifest.ports == 0 {
        return Err(Error::parse(manifest_path, "ports must be positive"));
    }
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let p = manifest.ports;

    let mut columns: Vec<(f64, PathBuf)> = manifest
        .parameter_values
        .iter()
        .copied()
        .zip(manifest.files.iter().map(|f| dir.join(f)))
        .collect();
    columns.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut freqs: Option<Vec<f64>> = None;
    let mut samples = Vec::new();
    for (_, path) in &columns {
        let mut rows = read_param_file(path, p)?;
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let these: Vec<f64> = rows.iter().map(|r| r.0).collect();
        match &freqs {
            None => freqs = Some(these),
            Some(f0) => {
                let same = f0.len() == these.len()
                    && f0
                        .iter()
                        .zip(&these)
                        .all(|(a, b)| (a - b).abs() <= FREQ_MATCH_RTOL * a.abs().max(b.abs()));
                if !same {
                    return Err(Error::InvalidData(format!(
                        "frequency axis of {} differs from the first file",
                        path.display()
                    )));
                }
            }
        }
        samples.extend(rows.into_iter().map(|r| r.1));
    }
    let params = columns.iter().map(|c| c.0).collect();
    let ds = SampledDataset::new(p, freqs.unwrap_or_default(), params, samples)?;
    Ok(ds.with_parameter_label(&manifest.parameter_name, &manifest.parameter_unit))
}

fn read_param_file(path: &Path, ports: usize) -> Result<Vec<(f64, DMatrix<Complex64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                _ => unreachable!(),
            },
            _ => Error::parse(path, e),
        })?;
    let ncol = 1 + 2 * ports * ports;
    let header = rdr.headers().map_err(|e| Error::parse(path, e))?.clone();
    if header.len() != ncol {
        return Err(Error::InvalidData(format!(
            "{}: {} columns, expected {ncol} for {ports} ports",
            path.display(),
            header.len()
        )));
    }
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        let row = r + 2; // 1-based, after the header line
        if rec.len() != ncol {
            return Err(Error::InvalidData(format!(
                "{}: row {row} has {} columns, expected {ncol}",
                path.display(),
                rec.len()
            )));
        }
        let mut vals = Vec::with_capacity(ncol);
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(path, format!("row {row}, column {}: `{field}` is not a number", c + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidData(format!(
                    "{}: non-finite value at row {row}, column {} ({})",
                    path.display(),
                    c + 1,
                    header.get(c).unwrap_or("?")
                )));
            }
            vals.push(v);
        }
        let m = DMatrix::from_fn(ports, ports, |i, j| {
            let b = 1 + 2 * (i * ports + j);
            Complex64::new(vals[b], vals[b + 1])
        });
        out.push((vals[0], m));
    }
    if out.is_empty() {
        return Err(Error::InvalidData(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Partition of the parameter samples into fitting and validation columns
/// (zero-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitSplit {
    fit: Vec<usize>,
    validation: Vec<usize>,
}

impl FitSplit {
    pub fn new(fit: Vec<usize>, validation: Vec<usize>, n_params: usize) -> Result<Self> {
        if fit.is_empty() {
            return Err(Error::InvalidConfig("fitting subset is empty".into()));
        }
        for &i in fit.iter().chain(&validation) {
            if i >= n_params {
                return Err(Error::InvalidConfig(format!(
                    "parameter index {i} out of range (m̄ = {n_params})"
                )));
            }
        }
        if fit.iter().any(|i| validation.contains(i)) {
            return Err(Error::InvalidConfig("fit and validation subsets overlap".into()));
        }
        Ok(Self { fit, validation })
    }

    /// Odd-numbered columns (1st, 3rd, …) fit, even-numbered validate.
    pub fn alternating(n_params: usize) -> Self {
        let fit = (0..n_params).step_by(2).collect();
        let validation = (1..n_params).step_by(2).collect();
        Self { fit, validation }
    }

    /// Every column is used for fitting.
    pub fn all(n_params: usize) -> Self {
        Self {
            fit: (0..n_params).collect(),
            validation: Vec::new(),
        }
    }

    pub fn fit(&self) -> &[usize] {
        &self.fit
    }

    pub fn validation(&self) -> &[usize] {
        &self.validation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmsMode {
    Absolute,
    /// Residual RMS divided by the RMS of the data, per matrix entry.
    Relative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmsReport {
    pub per_entry: DMatrix<f64>,
    pub worst: f64,
}

/// Per-entry RMS error of `model` against `data` over all frequencies of the
/// parameter columns in `subset`.
pub fn rms_error(
    model: &ParamModel,
    data: &SampledDataset,
    subset: &[usize],
    mode: RmsMode,
) -> Result<RmsReport> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig("RMS subset is empty".into()));
    }
    if model.ports() != data.ports() {
        return Err(Error::ShapeMismatch(format!(
            "model has {} ports, data has {}",
            model.ports(),
            data.ports()
        )));
    }
    let p = data.ports();
    let mut res2 = DMatrix::<f64>::zeros(p, p);
    let mut dat2 = DMatrix::<f64>::zeros(p, p);
    let mut count = 0usize;
    for &m in subset {
        let theta = data.params()[m];
        for (k, f) in data.freqs_hz().iter().enumerate() {
            let h = model.eval_hz(*f, theta)?;
            let d = data.sample(k, m);
            for i in 0..p {
                for j in 0..p {
                    res2[(i, j)] += (h[(i, j)] - d[(i, j)]).norm_sqr();
                    dat2[(i, j)] += d[(i, j)].norm_sqr();
                }
            }
            count += 1;
        }
    }
    let n = count as f64;
    let per_entry = DMatrix::from_fn(p, p, |i, j| {
        let r = (res2[(i, j)] / n).sqrt();
        match mode {
            RmsMode::Absolute => r,
            RmsMode::Relative => {
                let d = (dat2[(i, j)] / n).sqrt();
                if d > 0.0 {
                    r / d
                } else if r == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    });
    let worst = per_entry.iter().copied().fold(0.0, f64::max);
    Ok(RmsReport { per_entry, worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn tiny() -> SampledDataset {
        let s = |v: f64| DMatrix::from_element(1, 1, Complex64::new(v, -v));
        SampledDataset::new(
            1,
            vec![1.0, 2.0, 3.0],
            vec![0.0, 1.0],
            (0..6).map(|i| s(i as f64 * 0.1)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn save_load_shape_echo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.json");
        let ds = tiny();
        ds.save(&path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.n_freqs(), 3);
        assert_eq!(back.n_params(), 2);
        assert_eq!(back, ds.with_parameter_label("theta", ""));
    }

    #[test]
    fn nan_is_rejected_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        tiny().save(&path).unwrap();
        let csv = dir.path().join("d_m1.csv");
        let text = fs::read_to_string(&csv).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut cols: Vec<&str> = lines[2].split(',').collect();
        cols[2] = "NaN";
        lines[2] = cols.join(",");
        fs::write(&csv, lines.join("\n")).unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
        assert!(err.contains("column 3"), "{err}");
    }

    #[test]
    fn missing_file_and_mismatched_axes() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_dataset(dir.path().join("nope.json")),
            Err(Error::Io { .. })
        ));
        let path = dir.path().join("d.json");
        tiny().save(&path).unwrap();
        let csv = dir.path().join("d_m0.csv");
        let text = fs::read_to_string(&csv).unwrap().replacen("1.0000000000000000e0", "1.5e0", 1);
        fs::write(&csv, text).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::InvalidData(_))));
    }

    #[test]
    fn port_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        tiny().save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace("\"ports\": 1", "\"ports\": 2");
        fs::write(&path, text).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::InvalidData(_))));
    }

    #[test]
    fn row_order_does_not_matter() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        let model = fixtures::random_model(4, 2, 1, 1, 2, 0.8);
        let data = fixtures::dataset_from_model(&model, &[0.01, 0.1, 0.2, 0.3], &[0.0, 0.5, 1.0]);
        let data = fixtures::perturb_dataset(&data, 9, 0.05);
        data.save(&path).unwrap();
        let a = rms_error(&model, &load_dataset(&path).unwrap(), &[0, 1, 2], RmsMode::Absolute).unwrap();
        for m in 0..3 {
            let csv = dir.path().join(format!("d_m{m}.csv"));
            let text = fs::read_to_string(&csv).unwrap();
            let mut lines: Vec<&str> = text.lines().collect();
            lines[1..].reverse();
            fs::write(&csv, lines.join("\n")).unwrap();
        }
        let b = rms_error(&model, &load_dataset(&path).unwrap(), &[0, 1, 2], RmsMode::Absolute).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rms_of_generating_model_is_zero() {
        let model = fixtures::random_model(8, 2, 2, 1, 2, 0.8);
        let data = fixtures::dataset_from_model(&model, &[0.0, 0.05, 0.1, 0.3], &[0.0, 0.3, 0.7, 1.0]);
        let r = rms_error(&model, &data, &[0, 1, 2, 3], RmsMode::Absolute).unwrap();
        assert!(r.worst <= 1e-12);
    }

    #[test]
    fn constant_residual() {
        let zero = fixtures::constant_model(1, 0.0);
        let half = fixtures::constant_model(1, 0.5);
        let data = fixtures::dataset_from_model(&half, &[0.0, 1.0, 2.0], &[0.0, 1.0]);
        let r = rms_error(&zero, &data, &[0, 1], RmsMode::Absolute).unwrap();
        assert_abs_diff_eq!(r.worst, 0.5, epsilon = 1e-15);
        assert!(rms_error(&zero, &data, &[], RmsMode::Absolute).is_err());
    }

    #[test]
    fn relative_equals_absolute_for_unit_rms_data() {
        // |S| = 1 everywhere gives data RMS 1 for every entry.
        let p = 2;
        let samples = (0..6)
            .map(|i| DMatrix::from_fn(p, p, |a, b| Complex64::from_polar(1.0, (i + a + 2 * b) as f64)))
            .collect();
        let data = SampledDataset::new(p, vec![0.0, 1.0, 2.0], vec![0.0, 1.0], samples).unwrap();
        let model = fixtures::constant_model(2, 0.3);
        let a = rms_error(&model, &data, &[0, 1], RmsMode::Absolute).unwrap();
        let r = rms_error(&model, &data, &[0, 1], RmsMode::Relative).unwrap();
        assert!((a.per_entry - r.per_entry).amax() <= 1e-13);
    }

    #[test]
    fn split_conventions() {
        let s = FitSplit::alternating(9);
        assert_eq!(s.fit(), &[0, 2, 4, 6, 8]);
        assert_eq!(s.validation(), &[1, 3, 5, 7]);
        assert!(FitSplit::new(vec![], vec![1], 3).is_err());
        assert!(FitSplit::new(vec![0, 1], vec![1], 3).is_err());
        assert!(FitSplit::new(vec![5], vec![], 3).is_err());
    }

    #[test]
    fn rejects_duplicates() {
        let s = DMatrix::from_element(1, 1, Complex64::new(0.0, 0.0));
        assert!(SampledDataset::new(1, vec![1.0, 1.0], vec![0.0], vec![s.clone(), s]).is_err());
    }
}
