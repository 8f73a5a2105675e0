//! TOML scenario files and dotted `--set` overrides.
//!
//! ```toml
//! [planner]
//! max_expansions = 30
//! selection_rule = "lexicographic"
//!
//! [track]
//! kind = "corridor"
//! ```
//!
//! Every key is optional; missing keys and sections take the documented
//! defaults.

use costvalley_core::config::{ConfigViolation, RawScenario, ScenarioConfig};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("malformed override `{0}`, expected section.key=value")]
    BadOverride(String),
    #[error("override `{key}`: {message}")]
    OverrideType { key: String, message: String },
    #[error("{}", join_violations(.0))]
    Validation(Vec<ConfigViolation>),
}

fn join_violations(v: &[ConfigViolation]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    parts.join("; ")
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses the file into raw sections without validating values.
pub fn parse_raw(text: &str) -> Result<RawScenario, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map_or((1, 1), |span| line_column(text, span.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })
}

/// Applies `section.key=value` overrides in order. Values use TOML syntax;
/// anything that does not parse as a TOML value is taken as a bare string,
/// so `track.kind=oval` works without quotes.
pub fn apply_overrides(raw: RawScenario, overrides: &[String]) -> Result<RawScenario, ConfigError> {
    if overrides.is_empty() {
        return Ok(raw);
    }
    let mut table = toml::Table::try_from(&raw).expect("raw scenario serializes");
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::BadOverride(item.clone()))?;
        let key = key.trim();
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
        let slot = table
            .get_mut(section)
            .and_then(toml::Value::as_table_mut)
            .and_then(|t| t.get_mut(field))
            .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
        *slot = parse_value(value.trim());
    }
    RawScenario::deserialize(toml::Value::Table(table)).map_err(|e| {
        // the first override whose key the message mentions is the culprit
        let message = e.message().trim().to_string();
        let key = overrides
            .iter()
            .filter_map(|o| o.split_once('=').map(|(k, _)| k.trim()))
            .find(|k| k.rsplit('.').next().is_some_and(|f| message.contains(f)))
            .unwrap_or_else(|| overrides[0].split('=').next().unwrap_or_default())
            .to_string();
        ConfigError::OverrideType { key, message }
    })
}

fn parse_value(text: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// Parses and validates a config file with no overrides.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    load_config(text, &[])
}

pub fn load_config(text: &str, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let raw = apply_overrides(parse_raw(text)?, overrides)?;
    ScenarioConfig::from_raw(&raw).map_err(ConfigError::Validation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use costvalley_core::sim::TrackKind;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(parse_config("").unwrap(), ScenarioConfig::default());
        assert_eq!(parse_raw("").unwrap(), RawScenario::default());
    }

    #[test]
    fn parse_error_has_position() {
        let err = parse_raw("[grid]\nsize_cells = 101\nresolution = = 2\n").unwrap_err();
        match err {
            ConfigError::Parse { line, column, .. } => assert_eq!((line, column), (3, 14)),
            e => panic!("{e}"),
        }
        let err = parse_raw("[grid]\nsize_cels = 3\n").unwrap_err();
        assert!(
            matches!(
                err,
                ConfigError::Parse {
                    line: 2,
                    column: 1,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn half_width_zero_names_the_constraint() {
        let err = parse_config("[planner]\nhalf_width = 0\n").unwrap_err();
        let ConfigError::Validation(v) = &err else {
            panic!("{err}")
        };
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].key(), "planner.half_width");
        assert!(err.to_string().contains("planner.half_width ≥ 1"));
    }

    #[test]
    fn overrides() {
        let set = |items: &[&str]| -> Vec<String> { items.iter().map(|s| s.to_string()).collect() };
        let cfg = load_config(
            "",
            &set(&[
                "track.kind=corridor",
                "run.laps=1",
                "inflation.sigma=2",
                "planner.selection_rule=\"literal_pseudocode\"",
            ]),
        )
        .unwrap();
        assert_eq!(cfg.track_kind, TrackKind::Corridor);
        assert_eq!(cfg.inflation.sigma(), 2.0);
        assert!(matches!(
            load_config("", &set(&["planner.depth=3"])),
            Err(ConfigError::UnknownKey(k)) if k == "planner.depth"
        ));
        assert!(matches!(
            load_config("", &set(&["planner"])),
            Err(ConfigError::BadOverride(_))
        ));
        assert!(matches!(
            load_config("", &set(&["run.laps=many"])),
            Err(ConfigError::OverrideType { key, .. }) if key == "run.laps"
        ));
    }

    #[test]
    fn expansions_checked_against_grid_size() {
        let overrides = vec!["planner.max_expansions=40".to_string()];
        let err = load_config("[grid]\nsize_cells = 65\n", &overrides).unwrap_err();
        let ConfigError::Validation(v) = err else {
            panic!()
        };
        assert_eq!(
            v,
            [ConfigViolation::ConfigExceedsGrid {
                max_expansions: 40,
                size_cells: 65
            }]
        );
    }
}
