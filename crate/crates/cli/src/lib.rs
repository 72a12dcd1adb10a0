//! Command-line front end: TOML problem files in, JSON results and text reports out.

pub mod commands;
pub mod problem;
pub mod report;

use thiserror::Error;

pub use commands::{run, verify, Command, Outcome, Settings};
pub use problem::{Overrides, Problem};

/// Environment variable overriding the default working precision in bits.
pub const PRECISION_ENV: &str = "RESONANT_FORMS_PRECISION";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("positivity conditions fail: {0}")]
    Positivity(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Positivity(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn render_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}
