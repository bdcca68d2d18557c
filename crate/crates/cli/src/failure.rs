use std::fmt;

use serde::Serialize;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Io,
    Parse,
    Validation,
    Numerical,
}

impl FailureKind {
    pub fn exit_code(self) -> u8 {
        match self {
            FailureKind::Io => 1,
            FailureKind::Parse => 2,
            FailureKind::Validation => 3,
            FailureKind::Numerical => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
    pub details: Vec<String>,
}

impl Failure {
    pub fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into(), details: Vec::new() }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(FailureKind::Parse, message)
    }

    pub fn validation(details: Vec<String>) -> Self {
        Self {
            kind: FailureKind::Validation,
            message: details.join("; "),
            details,
        }
    }

    pub fn io(err: anyhow::Error) -> Self {
        Self::new(FailureKind::Io, format!("{err:#}"))
    }

    pub fn exit_code(&self) -> u8 {
        self.kind.exit_code()
    }

    /// Machine-readable form written to stderr and `error.json`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "exit_code": self.exit_code(),
                "message": self.message,
                "details": self.details,
            }
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

impl std::error::Error for Failure {}

impl From<coopfront::Error> for Failure {
    fn from(err: coopfront::Error) -> Self {
        let kind = if err.is_numerical() { FailureKind::Numerical } else { FailureKind::Validation };
        Self::new(kind, err.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_and_json_shape() {
        assert_eq!(Failure::parse("x").exit_code(), 2);
        assert_eq!(Failure::validation(vec!["y".into()]).exit_code(), 3);
        let numerical = Failure::from(coopfront::Error::Divergence("z".into()));
        assert_eq!(numerical.exit_code(), 4);
        let domain = Failure::from(coopfront::Error::Domain("w".into()));
        assert_eq!(domain.kind, FailureKind::Validation);
        let json = numerical.to_json();
        assert_eq!(json["error"]["kind"], "numerical");
        assert_eq!(json["error"]["exit_code"], 4);
    }
}
