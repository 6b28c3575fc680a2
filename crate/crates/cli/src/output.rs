//! Output files: CSV/JSON/SVG writers and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sle_core::estimators::PowerLawFit;
use sle_core::loewner::TracePath;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Collects the files of one run; everything is written single-threaded.
pub struct Sink {
    dir: PathBuf,
    name: String,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path, name: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), name: name.to_string(), written: Vec::new() })
    }

    /// Writes `{name}{suffix}` through `body`.
    pub fn write<F>(&mut self, suffix: &str, body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let file = format!("{}{suffix}", self.name);
        let path = self.dir.join(&file);
        let mut out = BufWriter::new(File::create(&path).map_err(|e| CliError::io(&path, e))?);
        body(&mut out).and_then(|_| out.flush()).map_err(|e| CliError::io(&path, e))?;
        self.written.push(file);
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, suffix: &str, doc: &T) -> Result<PathBuf, CliError> {
        self.write(suffix, |out| {
            serde_json::to_writer_pretty(&mut *out, doc)?;
            writeln!(out)
        })
    }

    /// Writes the manifest naming every file written so far.
    pub fn finish(mut self, experiment: &str, params: Value, seed: Option<u64>, started: DateTime<Utc>) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            params,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs: std::mem::take(&mut self.written),
        };
        self.write_json(".manifest.json", &manifest)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub stderr: f64,
    pub r2: f64,
}

impl From<&PowerLawFit> for FitSummary {
    fn from(f: &PowerLawFit) -> Self {
        Self { slope: f.slope, stderr: f.slope_stderr, r2: f.r_squared }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

impl Check {
    pub fn window(estimate: f64, lower: f64, upper: f64) -> Self {
        Self { lower, upper, pass: estimate >= lower && estimate <= upper }
    }
}

/// The self-describing result document of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub schema_version: u32,
    pub experiment: String,
    pub kappa: Option<f64>,
    pub params: Value,
    pub seed: Option<u64>,
    pub points: Vec<Value>,
    pub fit: Option<FitSummary>,
    pub reference: Option<Reference>,
    /// The quantity compared against `reference`.
    pub estimate: Option<f64>,
    pub estimate_stderr: Option<f64>,
    pub check: Option<Check>,
    /// Experiment-specific fields.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, Value>,
}

impl ResultDoc {
    pub fn new(experiment: &str, kappa: Option<f64>, params: Value, seed: Option<u64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            kappa,
            params,
            seed,
            points: Vec::new(),
            fit: None,
            reference: None,
            estimate: None,
            estimate_stderr: None,
            check: None,
            extra: serde_json::Map::new(),
        }
    }

    /// Fills `fit`, `estimate = sign·slope` and `check` against `window`.
    /// A failed fit is recorded as `fit_error` with a failing check, and the
    /// error is handed back so the command can exit after writing its data.
    pub fn record_fit(
        &mut self,
        fit: sle_core::Result<PowerLawFit>,
        sign: f64,
        window: Option<(f64, f64)>,
    ) -> Option<sle_core::SleError> {
        match fit {
            Ok(f) => {
                let est = sign * f.slope;
                self.fit = Some(FitSummary::from(&f));
                self.estimate = Some(est);
                self.estimate_stderr = Some(f.slope_stderr);
                self.check = window.map(|(lo, hi)| Check::window(est, lo, hi));
                None
            }
            Err(e) => {
                self.set("fit_error", e.to_string());
                self.check = window.map(|(lower, upper)| Check { lower, upper, pass: false });
                Some(e)
            }
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.extra.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }
}

const SVG_SIZE: f64 = 800.0;
const SVG_MARGIN: f64 = 10.0;

/// The trace as one SVG polyline, scaled to fit, with `y` pointing up.
pub fn write_svg(trace: &TracePath, out: &mut dyn Write) -> std::io::Result<()> {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &trace.points {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        y0 = y0.min(p.im);
        y1 = y1.max(p.im);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
    let w = (x1 - x0) * scale + 2.0 * SVG_MARGIN;
    let h = (y1 - y0) * scale + 2.0 * SVG_MARGIN;
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#)?;
    write!(out, r#"<polyline fill="none" stroke="black" stroke-width="1" points=""#)?;
    for (k, p) in trace.points.iter().enumerate() {
        let sx = SVG_MARGIN + (p.re - x0) * scale;
        let sy = SVG_MARGIN + (y1 - p.im) * scale;
        if k > 0 {
            write!(out, " ")?;
        }
        write!(out, "{sx:.3},{sy:.3}")?;
    }
    writeln!(out, r#""/>"#)?;
    writeln!(out, "</svg>")
}

#[cfg(test)]
mod tests {
    use super::*;
    use sle_core::loewner::{compute_trace, DrivingPath};

    #[test]
    fn svg_flips_y() {
        let trace = compute_trace(&DrivingPath::zero(2.0, 1.0, 4).unwrap());
        let mut buf = Vec::new();
        write_svg(&trace, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let pts = s.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<f64> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
        // the tip rises, so screen y falls
        assert!(ys.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(ys.len(), 5);
    }

    #[test]
    fn check_window_is_inclusive() {
        assert!(Check::window(1.0, 1.0, 2.0).pass);
        assert!(!Check::window(2.1, 1.0, 2.0).pass);
        assert!(!Check::window(f64::NAN, 1.0, 2.0).pass);
    }
}
