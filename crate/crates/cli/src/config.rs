//! Run configuration: command-line flags over a TOML file over built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use nilpotent_atlas::poly::parse_rat;

use crate::error::{invalid, CliResult, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Parabola,
    Pprime,
    Table1,
    Hamiltonian,
    Compensator,
    Saddlenode,
    Dulac,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Parabola => "parabola",
            Suite::Pprime => "pprime",
            Suite::Table1 => "table1",
            Suite::Hamiltonian => "hamiltonian",
            Suite::Compensator => "compensator",
            Suite::Saddlenode => "saddlenode",
            Suite::Dulac => "dulac",
        }
    }
}

/// Flags shared by every subcommand; unset flags fall back to the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// TOML file with defaults for any of the flags below
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Quadratic coefficient B (exact: "3/2", "1.5", "15e-1")
    #[arg(long = "B", value_name = "B", allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Normal-form parameter a of the rescaled family
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu1bar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu2bar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu3bar: Option<f64>,
    /// Integration tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// "default", "B=1.2,1.5;delta=0:0.2:5" or "7x7" depending on the command
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample count
    #[arg(long)]
    pub n: Option<usize>,
    /// Output directory; without it the primary output goes to stdout
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Half-width of the square searched for finite singular points
    #[arg(long)]
    pub bbox: Option<f64>,
    /// Overlay level curves of the first integral (portrait, Hamiltonian case)
    #[arg(long)]
    pub hcontours: bool,
}

/// A rational given either as a TOML number or as a string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RatText {
    Int(i64),
    Float(f64),
    Text(String),
}

impl RatText {
    fn into_text(self) -> String {
        match self {
            RatText::Int(i) => i.to_string(),
            RatText::Float(x) => x.to_string(),
            RatText::Text(s) => s,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "B")]
    b: Option<RatText>,
    delta: Option<RatText>,
    gamma: Option<RatText>,
    a: Option<f64>,
    mu1bar: Option<f64>,
    mu2bar: Option<f64>,
    mu3bar: Option<f64>,
    tol: Option<f64>,
    grid: Option<String>,
    seed: Option<u64>,
    n: Option<usize>,
    out: Option<PathBuf>,
    suite: Option<Suite>,
    format: Option<Format>,
    bbox: Option<f64>,
    hcontours: Option<bool>,
}

fn read_file(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Validation(format!("config {}: {e}", path.display())))
}

/// Effective configuration, echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(rename = "B")]
    pub b: String,
    pub delta: String,
    pub gamma: String,
    pub a: f64,
    pub mu1bar: f64,
    pub mu2bar: f64,
    pub mu3bar: f64,
    pub tol: f64,
    pub grid: String,
    pub seed: u64,
    pub n: usize,
    pub suite: Option<Suite>,
    pub format: Format,
    pub bbox: f64,
    pub hcontours: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn canonical_rat(name: &str, s: &str) -> CliResult<String> {
    match parse_rat(s) {
        Some(q) => Ok(q.to_string()),
        None => invalid(format!("{name} = {s:?} is not a rational number")),
    }
}

fn finite(name: &str, x: f64) -> CliResult<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        invalid(format!("{name} must be finite, got {x}"))
    }
}

pub fn default_format(command: &str) -> Format {
    match command {
        "portrait" => Format::Svg,
        "scan" | "returnmap" => Format::Csv,
        _ => Format::Json,
    }
}

impl RunConfig {
    pub fn resolve(command: &str, flags: &Flags) -> CliResult<Self> {
        let file = match &flags.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let text = |flag: &Option<String>, file: Option<RatText>, default: &str| {
            flag.clone()
                .or_else(|| file.map(RatText::into_text))
                .unwrap_or_else(|| default.to_string())
        };
        let cfg = RunConfig {
            command: command.to_string(),
            b: canonical_rat("B", &text(&flags.b, file.b, "3/2"))?,
            delta: canonical_rat("delta", &text(&flags.delta, file.delta, "0"))?,
            gamma: canonical_rat("gamma", &text(&flags.gamma, file.gamma, "0"))?,
            a: finite("a", flags.a.or(file.a).unwrap_or(-0.5))?,
            mu1bar: finite("mu1bar", flags.mu1bar.or(file.mu1bar).unwrap_or(0.0))?,
            mu2bar: finite("mu2bar", flags.mu2bar.or(file.mu2bar).unwrap_or(1.0))?,
            mu3bar: finite("mu3bar", flags.mu3bar.or(file.mu3bar).unwrap_or(0.0))?,
            tol: flags.tol.or(file.tol).unwrap_or(1e-10),
            grid: flags.grid.clone().or(file.grid).unwrap_or_else(|| "default".into()),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            n: flags.n.or(file.n).unwrap_or(100),
            suite: flags.suite.or(file.suite),
            format: flags.format.or(file.format).unwrap_or_else(|| default_format(command)),
            bbox: flags.bbox.or(file.bbox).unwrap_or(10.0),
            hcontours: flags.hcontours || file.hcontours.unwrap_or(false),
            out: flags.out.clone().or(file.out),
        };
        if !(1e-13..=1e-3).contains(&cfg.tol) {
            return invalid(format!("tol = {:e} outside [1e-13, 1e-3]", cfg.tol));
        }
        if !(cfg.bbox > 0.0 && cfg.bbox.is_finite()) {
            return invalid(format!("bbox must be positive, got {}", cfg.bbox));
        }
        Ok(cfg)
    }

    pub fn b_rat(&self) -> BigRational {
        parse_rat(&self.b).expect("canonical")
    }

    pub fn delta_rat(&self) -> BigRational {
        parse_rat(&self.delta).expect("canonical")
    }

    pub fn gamma_rat(&self) -> BigRational {
        parse_rat(&self.gamma).expect("canonical")
    }

    pub fn require_format(&self, allowed: &[Format]) -> CliResult<()> {
        if allowed.contains(&self.format) {
            Ok(())
        } else {
            invalid(format!(
                "{} does not produce {} output",
                self.command,
                self.format.extension()
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "B = 2\ndelta = \"1/10\"\nseed = 9\n").unwrap();
        let flags = Flags {
            config: Some(p),
            b: Some("1.5".into()),
            ..Flags::default()
        };
        let cfg = RunConfig::resolve("classify", &flags).unwrap();
        assert_eq!(cfg.b, "3/2");
        assert_eq!(cfg.delta, "1/10");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.gamma, "0");
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn bad_rational_and_unknown_keys_are_validation_errors() {
        let flags = Flags {
            b: Some("three".into()),
            ..Flags::default()
        };
        assert_eq!(RunConfig::resolve("classify", &flags).unwrap_err().exit_code(), 2);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "beta = 1\n").unwrap();
        let flags = Flags {
            config: Some(p),
            ..Flags::default()
        };
        assert_eq!(RunConfig::resolve("classify", &flags).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn tolerance_is_range_checked() {
        let flags = Flags {
            tol: Some(0.5),
            ..Flags::default()
        };
        assert!(matches!(
            RunConfig::resolve("scan", &flags),
            Err(Failure::Validation(_))
        ));
    }
}
