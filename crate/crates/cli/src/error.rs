//! Error type of the command-line tool and its exit-code table.

use std::path::PathBuf;

use costvalley_core::config::ConfigViolation;
use costvalley_core::perception::PerceptionError;
use costvalley_core::planner::PlannerError;
use serde_json::json;

use crate::config_file::ConfigError;
use crate::formats::FormatError;
use crate::pgm::PgmError;

/// Process exit status. The numeric values are stable.
///
/// | code | meaning |
/// |-----:|---------|
/// | 0 | success |
/// | 1 | internal error |
/// | 2 | bad invocation (unknown flag, unknown `--set` key, malformed override) |
/// | 3 | config file does not parse |
/// | 4 | config fails validation |
/// | 5 | file could not be read or written |
/// | 6 | input file is malformed (PGM, CSV, trace log) |
/// | 7 | planner rejected the grid |
/// | 8 | ground segmentation failed |
/// | 9 | replay disagrees with the recorded trace |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitCode {
    Success = 0,
    Internal = 1,
    Usage = 2,
    ConfigParse = 3,
    ConfigInvalid = 4,
    Io = 5,
    InputFormat = 6,
    Planner = 7,
    Perception = 8,
    ReplayMismatch = 9,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Config { path: PathBuf, source: ConfigError },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Pgm { path: PathBuf, source: PgmError },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("planner: {0}")]
    Planner(#[from] PlannerError),
    #[error("perception: {0}")]
    Perception(#[from] PerceptionError),
    #[error("replay diverged from the log at tick {tick}: {what}")]
    ReplayMismatch { tick: u64, what: &'static str },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::Usage,
            Self::Config { source, .. } => match source {
                ConfigError::Parse { .. } => ExitCode::ConfigParse,
                ConfigError::UnknownKey(_) | ConfigError::BadOverride(_) => ExitCode::Usage,
                ConfigError::OverrideType { .. } | ConfigError::Validation(_) => {
                    ExitCode::ConfigInvalid
                }
            },
            Self::Io { .. } => ExitCode::Io,
            Self::Pgm { .. } | Self::Format { .. } => ExitCode::InputFormat,
            Self::Planner(_) => ExitCode::Planner,
            Self::Perception(_) => ExitCode::Perception,
            Self::ReplayMismatch { .. } => ExitCode::ReplayMismatch,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Config { source, .. } => match source {
                ConfigError::Parse { .. } => "config_parse",
                ConfigError::UnknownKey(_) => "unknown_key",
                ConfigError::BadOverride(_) => "bad_override",
                ConfigError::OverrideType { .. } | ConfigError::Validation(_) => "config_invalid",
            },
            Self::Io { .. } => "io",
            Self::Pgm { .. } | Self::Format { .. } => "input_format",
            Self::Planner(PlannerError::ConfigExceedsGrid { .. }) => "config_exceeds_grid",
            Self::Planner(_) => "planner",
            Self::Perception(_) => "perception",
            Self::ReplayMismatch { .. } => "replay_mismatch",
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> serde_json::Value {
        let mut rec = json!({
            "error": self.kind(),
            "exit_code": self.exit_code() as u8,
            "message": self.to_string(),
        });
        let extra = match self {
            Self::Config { path, source } => {
                let mut v = json!({ "path": path });
                match source {
                    ConfigError::Parse { line, column, .. } => {
                        v["line"] = json!(line);
                        v["column"] = json!(column);
                    }
                    ConfigError::UnknownKey(key) | ConfigError::OverrideType { key, .. } => {
                        v["key"] = json!(key);
                    }
                    ConfigError::Validation(violations) => {
                        v["violations"] = violations.iter().map(violation_record).collect();
                    }
                    ConfigError::BadOverride(_) => {}
                }
                v
            }
            Self::Io { path, .. } | Self::Pgm { path, .. } | Self::Format { path, .. } => {
                json!({ "path": path })
            }
            Self::ReplayMismatch { tick, .. } => json!({ "tick": tick }),
            _ => json!({}),
        };
        if let (Some(rec), Some(extra)) = (rec.as_object_mut(), extra.as_object()) {
            rec.extend(extra.clone());
        }
        rec
    }
}

fn violation_record(v: &ConfigViolation) -> serde_json::Value {
    json!({ "key": v.key(), "message": v.to_string() })
}
