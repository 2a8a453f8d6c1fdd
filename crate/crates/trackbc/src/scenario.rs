//! Scenario documents (JSON).

use std::path::Path;

use trackbc_core::sim::ScenarioSpec;

use crate::{fsio, Error, Result};

/// Parse and validate a scenario document. Syntax and field errors carry the
/// line they were found on.
pub fn parse_scenario(text: &str, path: &Path) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec =
        serde_json::from_str(text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    parse_scenario(&fsio::read_to_string(path)?, path)
}

pub fn scenario_to_string(spec: &ScenarioSpec) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("scenario serializes");
    s.push('\n');
    s
}
