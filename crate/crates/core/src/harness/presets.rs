//! Built-in scenarios. Each is an ordinary scenario file compiled into the
//! binary.

use std::path::Path;

use super::scenario::{parse_scenario, Scenario};
use super::{io_err, HarnessError, HarnessResult};

pub const PRESETS: &[(&str, &str)] = &[
    ("baseline", include_str!("../../presets/baseline.toml")),
    ("tracking", include_str!("../../presets/tracking.toml")),
    ("robustness", include_str!("../../presets/robustness.toml")),
    ("engine_failure", include_str!("../../presets/engine_failure.toml")),
    ("density", include_str!("../../presets/density.toml")),
    ("gain_sweep", include_str!("../../presets/gain_sweep.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn preset(name: &str) -> HarnessResult<Scenario> {
    parse_scenario(preset_text(name).ok_or_else(|| HarnessError::UnknownScenario(name.into()))?)
}

/// Reads `arg` as a scenario file if such a file exists, otherwise looks it
/// up among the presets.
pub fn load_scenario(arg: &str) -> HarnessResult<Scenario> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        parse_scenario(&text)
    } else {
        preset(arg)
    }
}
