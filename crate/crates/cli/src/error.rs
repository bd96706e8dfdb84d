use std::path::Path;

use serde::Serialize;

/// Machine-readable failure printed as JSON on stderr.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip)]
    pub numerical: bool,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            error: "ConfigError".into(),
            message: message.into(),
            path: None,
            numerical: false,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError {
            error: "IoError".into(),
            message: format!("{}: {err}", path.display()),
            path: Some(path.display().to_string()),
            numerical: false,
        }
    }

    /// 1 for numerical failures, 2 for configuration and I/O.
    pub fn exit_code(&self) -> i32 {
        if self.numerical {
            1
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl From<perfcem::Error> for CliError {
    fn from(e: perfcem::Error) -> Self {
        CliError {
            error: e.kind().into(),
            message: e.to_string(),
            path: None,
            numerical: e.is_numerical(),
        }
    }
}
