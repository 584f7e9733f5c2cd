//! JSON-lines policy bundles: one transaction per line, applied fail-fast.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::digest::Hash32;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::ids::AccountId;
use crate::tx::{Transaction, TxPayload};

/// A bundle line. Unsigned entries are signed with the sender's registered
/// key; `submitted_at` defaults to the next slot time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub sender: AccountId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<u64>,
    #[serde(flatten)]
    pub payload: TxPayload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<Hash32>,
}

/// Parses one line; blank lines and `#` comments yield `None`.
pub fn parse_bundle_line(line_no: usize, line: &str) -> Result<Option<BundleEntry>> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    serde_json::from_str(trimmed).map(Some).map_err(|e| Error::parse(line_no, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleFailure {
    /// Transactions applied before the failing line.
    pub applied: usize,
    pub line: usize,
    pub code: String,
    pub message: String,
}

impl BundleFailure {
    fn new(applied: usize, line: usize, err: &Error) -> Self {
        BundleFailure { applied, line, code: err.code().into(), message: err.to_string() }
    }
}

impl fmt::Display for BundleFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {} ({} applied)", self.line, self.message, self.applied)
    }
}

impl std::error::Error for BundleFailure {}

/// Applies each line in its own block and stops at the first line that
/// fails to parse, is rejected by the ledger, or fails policy checks.
pub fn load_bundle(engine: &mut Engine, text: &str) -> std::result::Result<usize, BundleFailure> {
    let mut applied = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let entry = match parse_bundle_line(line_no, line) {
            Ok(Some(e)) => e,
            Ok(None) => continue,
            Err(e) => return Err(BundleFailure::new(applied, line_no, &e)),
        };
        let at = entry.submitted_at.unwrap_or_else(|| engine.next_slot().timestamp_ms);
        let tx = match entry.signature {
            Some(signature) => {
                Transaction { sender: entry.sender, submitted_at: at, payload: entry.payload, signature }
            }
            None => {
                engine.sign(&entry.sender, at, entry.payload).map_err(|e| BundleFailure::new(applied, line_no, &e))?
            }
        };
        let result = engine.execute(tx).map_err(|e| BundleFailure::new(applied, line_no, &e))?;
        if let crate::audit::TxOutcome::Failed { code, message } = result.outcome {
            return Err(BundleFailure { applied, line: line_no, code, message });
        }
        applied += 1;
    }
    Ok(applied)
}
