//! Built-in scenario configurations.

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*]
    };
}

/// `(name, TOML source)` of every built-in scenario.
pub const BUILTIN: &[(&str, &str)] = builtin![
    "static-ellipse-low",
    "static-ellipse-medium",
    "static-ellipse-high",
    "static-plus-low",
    "static-plus-medium",
    "static-plus-high",
    "linear-ellipse",
    "linear-plus",
    "turn-ellipse",
    "turn-plus",
    "slow-maneuver",
    "fast-maneuver",
    "drone-replay",
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let text = source(name).ok_or_else(|| {
        Error::config(
            "<scenario>",
            format!(
                "unknown scenario `{name}`; known: {}",
                names().collect::<Vec<_>>().join(", ")
            ),
        )
    })?;
    ScenarioConfig::from_toml(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses_and_is_named_after_its_file() {
        for (name, _) in BUILTIN {
            let cfg = builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, *name);
        }
        assert!(builtin("nope").unwrap_err().is_config());
    }
}
