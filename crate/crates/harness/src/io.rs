//! JSON scenario and config files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use shortfall_core::{ExperimentConfig, ScenarioSpec};

use crate::error::{HarnessError, Result};

fn field_path(path: &str) -> String {
    if path == "." {
        "<root>".into()
    } else {
        path.into()
    }
}

/// Parses JSON, reporting the failing field path on error.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Parse {
        path: origin.to_path_buf(),
        field: field_path(&e.path().to_string()),
        reason: e.inner().to_string(),
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = parse_json(&read(path)?, path)?;
    spec.validate()?;
    Ok(spec)
}

pub fn save_scenario(spec: &ScenarioSpec, path: &Path) -> Result<()> {
    spec.validate()?;
    write_json(spec, path)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = parse_json(&read(path)?, path)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Output(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}
