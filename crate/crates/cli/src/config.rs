use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// Output format for subcommands that can render plots.
#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    #[value(name = "csv+svg")]
    CsvSvg,
}

impl OutputFormat {
    pub fn svg(self) -> bool {
        self == OutputFormat::CsvSvg
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputFormat::Csv => write!(f, "csv"),
            OutputFormat::CsvSvg => write!(f, "csv+svg"),
        }
    }
}

/// Optional settings read from a JSON config file. Every field can also be
/// set by a command-line flag, and flags win over the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<String>,
    pub xs: Option<Vec<f64>>,
    pub gammas: Option<Vec<f64>>,
    pub gamma_max: Option<f64>,
    pub gamma_step: Option<f64>,
    pub x_step: Option<f64>,
    pub x: Option<f64>,
    pub gamma: Option<f64>,
    pub n_states: Option<usize>,
    pub n_seeds: Option<usize>,
    pub n_theta: Option<usize>,
    pub n_phi: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing config file {}", path.display()))
    }

    pub fn format(&self) -> Result<Option<OutputFormat>> {
        match self.format.as_deref() {
            None => Ok(None),
            Some("csv") => Ok(Some(OutputFormat::Csv)),
            Some("csv+svg") => Ok(Some(OutputFormat::CsvSvg)),
            Some(other) => bail!("config format must be \"csv\" or \"csv+svg\", got {other:?}"),
        }
    }
}

/// Fully resolved global settings: flag > config file > built-in default.
pub struct Globals {
    pub seed: u64,
    pub shots: Option<u64>,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub file: FileConfig,
}

impl Globals {
    /// Shot budget for a subcommand, with a per-command default.
    pub fn shots_or(&self, default: u64) -> u64 {
        self.shots.unwrap_or(default)
    }
}

/// Inclusive evenly spaced grid from 0 to `max` in steps of `step`.
pub fn grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= 0.0) || !max.is_finite() || !step.is_finite() {
        bail!("grid needs max >= 0 and step > 0, got max={max} step={step}");
    }
    let n = (max / step).round() as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

/// Insert `value` into a sorted grid unless an existing point coincides
/// with it to within 1e-12.
pub fn ensure_point(grid: &mut Vec<f64>, value: f64) {
    if grid.iter().all(|&g| (g - value).abs() > 1e-12) {
        grid.push(value);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
}

pub fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(","))
}
