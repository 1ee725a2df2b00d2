use std::path::PathBuf;

use super::HarnessError;
use crate::dsl::{self, Document};

/// Directory that overrides the built-in fixture documents.
pub const FIXTURES_ENV: &str = "BTFSM_FIXTURES";

pub const FIXTURE_NAMES: [&str; 2] = ["fetch_task.pol", "fetch_five.pol"];

const FETCH_TASK: &str = include_str!("../../fixtures/fetch_task.pol");
const FETCH_FIVE: &str = include_str!("../../fixtures/fetch_five.pol");

/// Text of a shipped fixture, read from `$BTFSM_FIXTURES/<name>` when that
/// variable is set.
pub fn fixture_text(name: &str) -> Result<String, HarnessError> {
    if let Some(dir) = std::env::var_os(FIXTURES_ENV) {
        let path = PathBuf::from(dir).join(name);
        return std::fs::read_to_string(&path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        });
    }
    match name {
        "fetch_task.pol" => Ok(FETCH_TASK.to_string()),
        "fetch_five.pol" => Ok(FETCH_FIVE.to_string()),
        other => Err(HarnessError::Usage(format!("no fixture named `{other}`"))),
    }
}

pub fn load_fixture(name: &str) -> Result<Document, HarnessError> {
    Ok(dsl::parse(&fixture_text(name)?)?)
}
