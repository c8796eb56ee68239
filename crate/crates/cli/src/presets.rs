//! Built-in scenarios.

use std::path::Path;

use crate::scenario::{Scenario, ScenarioError};

pub const NAMES: [&str; 3] = ["scenario1", "scenario2", "scenario3"];

/// Unit-length stand-ins for the scenario 3 road lengths, in `--lengths` format.
pub const SCENARIO3_LENGTHS_TEMPLATE: &str = include_str!("../presets/scenario3_lengths.template.json");

pub fn preset_json(name: &str) -> Option<&'static str> {
    match name {
        "scenario1" => Some(include_str!("../presets/scenario1.json")),
        "scenario2" => Some(include_str!("../presets/scenario2.json")),
        "scenario3" => Some(include_str!("../presets/scenario3.json")),
        _ => None,
    }
}

pub fn preset(name: &str) -> Result<Scenario, ScenarioError> {
    let text = preset_json(name).ok_or_else(|| ScenarioError::UnknownPreset(name.to_string()))?;
    Scenario::from_json(text, name)
}

/// A preset name, or else a path to a scenario file.
pub fn load(source: &str) -> Result<Scenario, ScenarioError> {
    if preset_json(source).is_some() {
        return preset(source);
    }
    let path = Path::new(source);
    if !path.exists() && !source.contains(['/', '.']) {
        return Err(ScenarioError::UnknownPreset(source.to_string()));
    }
    Scenario::from_file(path)
}
