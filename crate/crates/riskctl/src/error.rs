use serde_json::{json, Value};
use thiserror::Error;

use riskgrid::dsl::{ParseError, RulebaseErrors};
use riskgrid::kb::KbError;
use riskgrid::project::ProjectErrors;

/// Every failure the CLI or the service can report. Exit codes and HTTP
/// statuses are derived from the variant alone.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    /// Parse, validation and mismatch errors. Each entry carries `error` and
    /// `message` keys.
    #[error("{}", render_invalid(.0))]
    Invalid(Vec<Value>),
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Corrupt(String),
}

fn render_invalid(items: &[Value]) -> String {
    items
        .iter()
        .map(|v| v["message"].as_str().unwrap_or("invalid input").to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

impl AppError {
    pub fn invalid(kind: &str, message: impl Into<String>) -> Self {
        AppError::Invalid(vec![json!({ "error": kind, "message": message.into() })])
    }

    pub fn io(path: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        AppError::Io {
            path: path.to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } => 1,
            AppError::Invalid(_) | AppError::NotFound(_) => 2,
            AppError::Conflict(_) | AppError::Corrupt(_) => 3,
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            AppError::Invalid(_) => 400,
            AppError::NotFound(_) => 404,
            AppError::Conflict(_) => 409,
            AppError::Io { .. } | AppError::Corrupt(_) => 500,
        }
    }

    /// Body of an error response: `{"errors": [...]}`.
    pub fn to_json(&self) -> Value {
        let errors = match self {
            AppError::Invalid(items) => items.clone(),
            AppError::Io { .. } => vec![json!({ "error": "io", "message": self.to_string() })],
            AppError::NotFound(_) => {
                vec![json!({ "error": "not_found", "message": self.to_string() })]
            }
            AppError::Conflict(_) => {
                vec![json!({ "error": "conflict", "message": self.to_string() })]
            }
            AppError::Corrupt(_) => {
                vec![json!({ "error": "corrupt", "message": self.to_string() })]
            }
        };
        json!({ "errors": errors })
    }
}

impl From<ProjectErrors> for AppError {
    fn from(errors: ProjectErrors) -> Self {
        AppError::Invalid(
            errors
                .0
                .iter()
                .map(|e| {
                    let mut v = serde_json::to_value(e).expect("project errors serialize");
                    v["message"] = Value::String(e.to_string());
                    v
                })
                .collect(),
        )
    }
}

impl From<ParseError> for AppError {
    fn from(err: ParseError) -> Self {
        AppError::Invalid(vec![json!({
            "error": "parse",
            "line": err.line(),
            "message": err.to_string(),
        })])
    }
}

impl From<RulebaseErrors> for AppError {
    fn from(errors: RulebaseErrors) -> Self {
        AppError::Invalid(
            errors
                .0
                .iter()
                .map(|e| json!({ "error": "rulebase", "message": e.to_string() }))
                .collect(),
        )
    }
}

impl From<KbError> for AppError {
    fn from(err: KbError) -> Self {
        match err {
            KbError::VersionConflict { .. } => AppError::Conflict(err.to_string()),
            KbError::Corrupt(_) | KbError::SeedCorrupt(_) | KbError::Replay { .. } => {
                AppError::Corrupt(err.to_string())
            }
            KbError::Io {
                ref path,
                ref source,
            } => AppError::io(path, source),
            KbError::Parse(parse) => parse.into(),
            KbError::Invalid(ref errors) => AppError::Invalid(
                errors
                    .iter()
                    .map(|e| json!({ "error": "validation", "message": e.to_string() }))
                    .collect(),
            ),
            KbError::UnknownRule(_)
            | KbError::RetiredRule(_)
            | KbError::IdMismatch { .. }
            | KbError::DuplicateFactor(_)
            | KbError::InvalidFactor(_)
            | KbError::ReadOnly(_) => AppError::invalid("kb_update", err.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taxonomy_is_total() {
        let cases = [
            (AppError::io("x", "denied"), 1, 500),
            (AppError::invalid("parse", "bad"), 2, 400),
            (AppError::NotFound("project p".into()), 2, 404),
            (AppError::Conflict("stale".into()), 3, 409),
            (AppError::Corrupt("torn".into()), 3, 500),
        ];
        for (err, code, status) in cases {
            assert_eq!((err.exit_code(), err.status()), (code, status), "{err}");
            assert!(err.to_json()["errors"]
                .as_array()
                .is_some_and(|a| !a.is_empty()));
        }
    }

    #[test]
    fn kb_errors_map() {
        let conflict: AppError = KbError::VersionConflict {
            expected: 1,
            actual: 2,
        }
        .into();
        assert_eq!(conflict.status(), 409);
        let unknown: AppError = KbError::UnknownRule(99).into();
        assert_eq!(unknown.exit_code(), 2);
    }
}
