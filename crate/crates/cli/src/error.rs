use std::path::{Path, PathBuf};

use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error{}: {message}", file.as_ref().map(|f| format!(" in {}", f.display())).unwrap_or_default())]
    Parse {
        file: Option<PathBuf>,
        message: String,
        key: Option<String>,
    },
    #[error("invalid config value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("missing config key `{key}`")]
    Missing { key: String },
    #[error("{module}: {source}")]
    Numeric {
        module: &'static str,
        source: lrd_core::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn invalid(key: &str, message: impl std::fmt::Display) -> Self {
        CliError::Invalid {
            key: key.into(),
            message: message.to_string(),
        }
    }

    pub fn missing(key: &str) -> Self {
        CliError::Missing { key: key.into() }
    }

    pub fn numeric(module: &'static str) -> impl FnOnce(lrd_core::Error) -> Self {
        move |source| CliError::Numeric { module, source }
    }

    pub fn from_toml(e: toml::de::Error) -> Self {
        let message = e.message().trim().to_string();
        // serde reports absent fields as "missing field `name`"
        let key = message
            .split_once("missing field `")
            .and_then(|(_, rest)| rest.split_once('`'))
            .map(|(k, _)| k.to_string());
        CliError::Parse {
            file: None,
            message,
            key,
        }
    }

    pub fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Parse { message, key, .. } => CliError::Parse {
                file: Some(path.to_path_buf()),
                message,
                key,
            },
            other => other,
        }
    }

    /// The config key the error is about, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            CliError::Parse { key, .. } => key.as_deref(),
            CliError::Invalid { key, .. } | CliError::Missing { key } => Some(key),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "config_parse",
            CliError::Invalid { .. } => "config_invalid",
            CliError::Missing { .. } => "config_missing_key",
            CliError::Numeric { .. } => "numeric",
            CliError::Csv(_) => "csv",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> Value {
        let mut v = json!({
            "status": "error",
            "kind": self.kind(),
            "message": self.to_string(),
        });
        if let Some(k) = self.key() {
            v["key"] = json!(k);
        }
        if let CliError::Parse { file: Some(f), .. } | CliError::Io { path: f, .. } = self {
            v["file"] = json!(f.display().to_string());
        }
        if let CliError::Numeric { module, source } = self {
            v["module"] = json!(module);
            if let Some(t) = tolerance_of(source) {
                v["tolerance"] = json!(t);
            }
        }
        v
    }
}

fn tolerance_of(e: &lrd_core::Error) -> Option<f64> {
    match e {
        lrd_core::Error::TruncationTooSmall { tolerance, .. }
        | lrd_core::Error::TailNotCertifiable { tolerance, .. } => Some(*tolerance),
        _ => None,
    }
}
