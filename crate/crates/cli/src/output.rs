//! Report assembly and writing.

use std::path::Path;

use serde_json::{Map, Value};

use nilpotent_atlas::field::SCHEMA_VERSION;

use crate::config::{Format, RunConfig};
use crate::error::CliResult;

/// One produced file.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub format: Format,
    pub contents: String,
}

impl Artifact {
    pub fn new(stem: &str, format: Format, contents: String) -> Self {
        Self {
            name: format!("{stem}.{}", format.extension()),
            format,
            contents,
        }
    }
}

/// `{schema_version, command, config, ...body}` as pretty JSON.
pub fn json_report(cfg: &RunConfig, body: Value) -> String {
    let mut m = Map::new();
    m.insert("schema_version".into(), SCHEMA_VERSION.into());
    m.insert("command".into(), cfg.command.clone().into());
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    if let Value::Object(b) = body {
        m.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("report serializes");
    s.push('\n');
    s
}

/// CSV body preceded by `#` lines carrying the schema version and config.
pub fn csv_report(cfg: &RunConfig, body: &str) -> String {
    format!(
        "# schema_version={SCHEMA_VERSION}\n# config={}\n{body}",
        serde_json::to_string(cfg).expect("config serializes")
    )
}

/// Writes every artifact into `out`, or prints the one in the configured
/// format when no directory is given.
pub fn emit(cfg: &RunConfig, artifacts: &[Artifact]) -> CliResult<()> {
    match &cfg.out {
        Some(dir) => write_all(dir, artifacts),
        None => {
            let a = artifacts
                .iter()
                .find(|a| a.format == cfg.format)
                .or_else(|| artifacts.first());
            if let Some(a) = a {
                print!("{}", a.contents);
            }
            Ok(())
        }
    }
}

fn write_all(dir: &Path, artifacts: &[Artifact]) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.contents)?;
    }
    Ok(())
}
