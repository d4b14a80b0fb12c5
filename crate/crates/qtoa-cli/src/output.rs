//! Run artifacts: CSV tables, the JSON manifest, the text summary and the
//! error record.
//!
//! Floats are written as `{:.16e}` (17 significant digits, enough to
//! round-trip every `f64`). Nothing time- or host-dependent goes into any
//! file, so an identical configuration produces byte-identical output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qtoa::numerics::CutSide;
use qtoa::{QtoaError, Warning};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ConfigError;

/// Failure of a run, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or inputs outside the documented domain (exit 2).
    Config(String),
    /// Quadrature, eigensolver or precision failure (exit 3).
    Numerical(QtoaError),
    /// Some units of work failed numerically while the rest completed
    /// (exit 3).
    Partial(String),
    /// Could not write the artifacts (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Partial(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) | CliError::Partial(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Partial(m) | CliError::Io(m) => f.write_str(m),
            CliError::Numerical(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<QtoaError> for CliError {
    fn from(e: QtoaError) -> Self {
        if e.is_input_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e)
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(usize),
    S(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => float(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::I(i)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Signed value next to its magnitude, so comparisons against quoted
/// magnitudes never lose the sign.
pub fn signed(x: f64) -> Value {
    json!({ "signed": x, "magnitude": x.abs() })
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im, "magnitude": z.norm() })
}

/// `(l, N, rule)` and the arithmetic of one spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRecord {
    pub context: String,
    pub l: f64,
    pub nodes: usize,
    pub rule: &'static str,
    pub scheme: qtoa::spectral::Scheme,
    pub precision: qtoa::numerics::Precision,
    pub tol: f64,
    pub rounding_bound: f64,
    pub hermiticity_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WarningRecord {
    pub context: String,
    pub warning: Warning,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub status: &'static str,
    pub command: String,
    pub experiment: String,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub inputs: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub branch_convention: Value,
    pub records: BTreeMap<String, Value>,
    pub spectra: Vec<SpectrumRecord>,
    pub warnings: Vec<WarningRecord>,
    pub files: Vec<String>,
    pub failures: Vec<String>,
}

pub fn branch_convention(side: CutSide) -> Value {
    json!({
        "cut_side": side,
        "cut_label": side.label(),
        "classical_branch": "first crossing T-",
        "sign_convention": "arrival at the origin; launches from q0 < 0 give negative arrival times, \
                            compare magnitudes against quoted positive values",
    })
}

/// Output directory plus the manifest and summary being assembled.
pub struct Run {
    dir: PathBuf,
    pub manifest: Manifest,
    summary: Vec<String>,
}

impl Run {
    pub fn new(dir: &Path, command: &str, experiment: &str, inputs: Value, side: CutSide) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut versions = BTreeMap::new();
        versions.insert("qtoa", qtoa::VERSION);
        versions.insert("qtoa-cli", env!("CARGO_PKG_VERSION"));
        Ok(Run {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                status: "ok",
                command: command.into(),
                experiment: experiment.into(),
                versions,
                inputs,
                tolerances: BTreeMap::new(),
                branch_convention: branch_convention(side),
                records: BTreeMap::new(),
                spectra: Vec::new(),
                warnings: Vec::new(),
                files: Vec::new(),
                failures: Vec::new(),
            },
            summary: Vec::new(),
        })
    }

    pub fn csv<R, C>(&mut self, name: &str, header: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = Vec<C>>,
        C: Into<Cell>,
    {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            let row: Vec<String> = row.into_iter().map(|c| c.into().render()).collect();
            debug_assert_eq!(row.len(), header.len(), "{name}");
            w.write_record(&row)?;
        }
        w.flush()?;
        self.manifest.files.push(name.into());
        Ok(())
    }

    pub fn record(&mut self, key: &str, value: Value) {
        self.manifest.records.insert(key.into(), value);
    }

    pub fn tolerance(&mut self, key: &str, value: f64) {
        self.manifest.tolerances.insert(key.into(), value);
    }

    pub fn warn(&mut self, context: &str, warnings: &[Warning]) {
        for w in warnings {
            eprintln!("warning ({context}): {w:?}");
            self.manifest.warnings.push(WarningRecord {
                context: context.into(),
                warning: w.clone(),
            });
        }
    }

    pub fn spectrum(&mut self, record: SpectrumRecord) {
        self.manifest.spectra.push(record);
    }

    /// Record a failure that does not stop the run (a sweep point, say);
    /// the artifacts are still written but the run exits as a numerical
    /// failure.
    pub fn fail(&mut self, what: String) {
        eprintln!("error: {what}");
        self.manifest.status = "partial-failure";
        self.manifest.failures.push(what);
    }

    /// A line of the human-readable summary (also echoed to stdout).
    pub fn say(&mut self, line: String) {
        println!("{line}");
        self.summary.push(line);
    }

    /// Write `manifest.json` and `summary.txt`; returns the recorded
    /// failures.
    pub fn finish(mut self) -> Result<Vec<String>, CliError> {
        self.manifest.files.push("summary.txt".into());
        let mut text = self.summary.join("\n");
        text.push('\n');
        fs::write(self.dir.join("summary.txt"), text)?;
        let mut json = serde_json::to_string_pretty(&self.manifest)?;
        json.push('\n');
        fs::write(self.dir.join("manifest.json"), json)?;
        Ok(self.manifest.failures)
    }
}

/// Machine-readable record of a failed run, written as `error.json`.
pub fn write_error(dir: &Path, command: &str, err: &CliError) {
    let record = json!({
        "status": "error",
        "command": command,
        "kind": err.kind(),
        "exit_code": err.exit_code(),
        "message": err.to_string(),
    });
    let written = fs::create_dir_all(dir).and_then(|_| {
        let text = serde_json::to_string_pretty(&record).unwrap_or_default() + "\n";
        fs::write(dir.join("error.json"), text)
    });
    if let Err(e) = written {
        eprintln!("could not write error record to {}: {e}", dir.display());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        for x in [0.1, -0.16666351095, 1.0 / 3.0, 7.46e-17, f64::MIN_POSITIVE, 123456789.0] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
        assert_eq!(float(f64::NAN), "nan");
    }

    #[test]
    fn input_errors_map_to_config_exit() {
        assert_eq!(CliError::from(QtoaError::invalid("x")).exit_code(), 2);
        let e = QtoaError::EigensolverFailed {
            index: 0,
            iterations: 30,
            norm: 1.0,
        };
        assert_eq!(CliError::from(e).exit_code(), 3);
    }
}
