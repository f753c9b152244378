//! The sweep ledger: one JSON object per line for each finished row, so an
//! interrupted sweep can resume. A final line without a newline is a write
//! that was cut short and is ignored.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    /// Position of the tuple in the sweep's deterministic order.
    pub index: usize,
    /// Parameter tuple, rendered for matching on resume.
    pub key: String,
    /// CSV fields of the finished row.
    pub fields: Vec<String>,
}

impl LedgerEntry {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("ledger entries serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("ledger line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("ledger line {line}: index {index} recorded twice")]
    Duplicate { line: usize, index: usize },
}

pub fn parse_ledger(text: &str) -> Result<Vec<LedgerEntry>, LedgerError> {
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut out: Vec<LedgerEntry> = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: LedgerEntry = serde_json::from_str(line).map_err(|e| LedgerError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(entry.index) {
            return Err(LedgerError::Duplicate {
                line: i + 1,
                index: entry.index,
            });
        }
        out.push(entry);
    }
    Ok(out)
}
