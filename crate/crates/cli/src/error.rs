use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sirc_mfg_core::Error),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("no convergence after {iterations} iterations (last relative change {last_change:.3e})")]
    NotConverged { iterations: usize, last_change: f64 },
}

impl CliError {
    pub fn read(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Read { path: path.into(), source }
    }

    pub fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Write { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) if e.is_validation() => "validation",
            CliError::Core(_) => "numerical",
            CliError::Schema(_) => "schema",
            CliError::Usage(_) => "usage",
            CliError::Read { .. } => "input",
            CliError::Write { .. } => "output",
            CliError::NotConverged { .. } => "non_convergence",
        }
    }

    /// 2: bad input, 3: numerical failure, 4: no convergence.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "numerical" | "output" => 3,
            "non_convergence" => 4,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
