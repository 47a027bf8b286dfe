//! Machine-readable reports: JSON with the full structure and a flat CSV table.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Least-squares fit of ln(value) against ln(scale).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub points: usize,
}

/// Ordinary least squares on (ln x, ln y).
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension("fit abscissae and ordinates differ in length".into()));
    }
    if xs.len() < 3 {
        return Err(Error::Invalid(format!("a fit needs at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Invalid("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("fit abscissae are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(Fit { exponent: slope, intercept, residual: (rss / m).sqrt(), points: xs.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Metadata {
    pub fn for_config(config: &ScenarioConfig) -> Self {
        Metadata {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config_hash: config.hash(),
        }
    }
}

/// One table row: a value at a scale (R, mu or distance), optionally for one density tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub label: String,
    pub scale: f64,
    pub tuple: Option<usize>,
    pub value: f64,
}

impl Record {
    pub fn new(label: impl Into<String>, scale: f64, tuple: Option<usize>, value: f64) -> Self {
        Record { label: label.into(), scale, tuple, value }
    }
}

/// A named pass/fail check against a threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Contract {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Contract { name: name.into(), value, threshold, passed: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Contract { name: name.into(), value, threshold, passed: value >= threshold }
    }

    /// Passes when the flag holds; value is 1 or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Contract { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, passed: ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: String,
    pub metadata: Metadata,
    pub config: ScenarioConfig,
    pub records: Vec<Record>,
    /// Named scalar results, in insertion order.
    pub summary: Vec<(String, f64)>,
    pub fit: Option<Fit>,
    pub contracts: Vec<Contract>,
}

impl Report {
    pub fn new(kind: &str, config: &ScenarioConfig) -> Self {
        Report {
            kind: kind.to_string(),
            metadata: Metadata::for_config(config),
            config: config.clone(),
            records: Vec::new(),
            summary: Vec::new(),
            fit: None,
            contracts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.contracts.iter().all(|c| c.passed)
    }

    pub fn summary_value(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn contract(&self, name: &str) -> Option<&Contract> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }

    /// `label,scale,tuple,value`, one row per record.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let ser = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(["label", "scale", "tuple", "value"]).map_err(ser)?;
        for r in &self.records {
            let tuple = r.tuple.map(|t| t.to_string()).unwrap_or_default();
            w.write_record([r.label.clone(), r.scale.to_string(), tuple, r.value.to_string()]).map_err(ser)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Output formats for [`emit_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Both,
}

/// Writes `<dir>/<kind>.json` and/or `<dir>/<kind>.csv`; returns the written paths.
pub fn emit_report(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if matches!(format, Format::Json | Format::Both) {
        let path = dir.join(format!("{}.json", report.kind));
        let mut text = report.to_json()?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    if matches!(format, Format::Csv | Format::Both) {
        let path = dir.join(format!("{}.csv", report.kind));
        std::fs::write(&path, report.to_csv()?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ScenarioConfig {
        ScenarioConfig::from_toml("n = 1\nk = 2\ndelta = 2.0\n").unwrap()
    }

    #[test]
    fn fit_recovers_power_law() {
        let xs = [4.0, 8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.25)).collect();
        let f = fit_loglog(&xs, &ys).unwrap();
        assert!((f.exponent - 0.25).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!(fit_loglog(&xs[..2], &ys[..2]).is_err());
        assert!(fit_loglog(&xs[..3], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn empty_report_is_valid_json() {
        let r = Report::new("sweep-ar", &config());
        let text = r.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["records"].as_array().unwrap().len(), 0);
        assert_eq!(Report::from_json(&text).unwrap(), r);
        assert_eq!(r.to_csv().unwrap(), "label,scale,tuple,value\n");
    }

    #[test]
    fn round_trip_and_row_count() {
        let mut r = Report::new("sweep-ar", &config());
        for (i, s) in [4.0, 8.0, 16.0].iter().enumerate() {
            for t in 0..3 {
                r.records.push(Record::new("ratio", *s, Some(t), 0.1 * (i * 3 + t) as f64 + 1.0 / 3.0));
            }
            r.records.push(Record::new("max", *s, None, 1.0 / 7.0));
        }
        r.fit = Some(fit_loglog(&[4.0, 8.0, 16.0], &[1.0, 1.1, 1.3]).unwrap());
        r.summary.push(("epsilon".into(), 0.1));
        r.contracts.push(Contract::at_most("epsilon", 0.1, 0.2));
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 1 + r.records.len());
        assert!(csv.lines().nth(1).unwrap().starts_with("ratio,4,0,0.3333333333333333"));
    }

    #[test]
    fn emit_writes_both_files() {
        let dir = std::env::temp_dir().join(format!("mrlab-report-{}", std::process::id()));
        let r = Report::new("offdiag", &config());
        let paths = emit_report(&r, &dir, Format::Both).unwrap();
        assert_eq!(paths.len(), 2);
        let again = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(Report::from_json(&again).unwrap(), r);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
