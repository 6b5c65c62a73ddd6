use thiserror::Error;

/// Errors surfaced by the command line, sorted by exit code: configuration
/// mistakes (2), solver failures (3), I/O problems (4).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Config { key: Option<String>, message: String },
    #[error("{message}")]
    Solver { message: String },
    #[error("{message}")]
    Io { message: String },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self::Config {
            key: None,
            message: message.into(),
        }
    }

    pub fn config_key(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    pub fn solver(err: impl std::fmt::Display) -> Self {
        Self::Solver {
            message: err.to_string(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::Io {
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Solver { .. } => 3,
            Self::Io { .. } => 4,
        }
    }

    /// Machine-readable error record for stderr.
    pub fn to_json(&self) -> String {
        let (kind, key, message) = match self {
            Self::Config { key, message } => ("config", key.as_deref(), message.as_str()),
            Self::Solver { message } => ("solver", None, message.as_str()),
            Self::Io { message } => ("io", None, message.as_str()),
        };
        let mut fields = format!("\"kind\": \"{}\"", kind);
        if let Some(key) = key {
            fields.push_str(&format!(", \"key\": \"{}\"", crate::output::json_escape(key)));
        }
        fields.push_str(&format!(
            ", \"message\": \"{}\"",
            crate::output::json_escape(message)
        ));
        format!("{{\"error\": {{{fields}}}}}")
    }
}
