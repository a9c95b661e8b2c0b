//! Response parsing, accuracy scoring and the accuracy/delta report tables.

mod parse;
mod report;
mod tenths;

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::options::OptionLetter;
use crate::taskforge::PromptMode;

pub use parse::{parse_answer, render_answer, ParsedAnswer};
pub use report::{compute_deltas, emit_report, ReportFormat, ReportRow, ReportTable, RowKey};
pub use tenths::{ParseTenthsError, Tenths};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("no response records")]
    Empty,
    #[error("duplicate instance_id {0:?}")]
    DuplicateId(String),
    #[error("records mix modes {0} and {1}")]
    MixedModes(String, String),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("unknown report format {0:?} (csv, json, markdown)")]
    UnknownFormat(String),
    #[error("invalid report table: {0}")]
    Table(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ScoreError>;

/// One model answer, as written by the model adapter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRecord {
    pub instance_id: String,
    pub mode: PromptMode,
    pub raw_text: String,
    /// Filled by the scorer; the adapter may leave it out or set
    /// `INVALID-TIMEOUT`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<ParsedAnswer>,
    pub ground_truth: OptionLetter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    /// e.g. `known` / `unknown`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<String>,
    /// e.g. `shapes`, `maze`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
}

impl ResponseRecord {
    /// The adapter's timeout marker wins; anything else is re-parsed.
    pub fn answer(&self) -> ParsedAnswer {
        match self.parsed {
            Some(ParsedAnswer::InvalidTimeout) => ParsedAnswer::InvalidTimeout,
            _ => parse_answer(&self.raw_text, self.mode),
        }
    }

    pub fn key(&self) -> RowKey {
        RowKey {
            model_id: self.model_id.clone().unwrap_or_else(|| "model".into()),
            subset: self.subset.clone().unwrap_or_else(|| "all".into()),
            task: self.task.clone().unwrap_or_else(|| "all".into()),
        }
    }
}

/// Reads line-delimited response records; blank lines are skipped.
pub fn read_records(reader: impl BufRead) -> Result<Vec<ResponseRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| ScoreError::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub n: u64,
    pub correct: u64,
    pub invalid: u64,
}

impl Counts {
    pub fn accuracy(&self) -> Tenths {
        Tenths::percent(self.correct, self.n)
    }

    fn add(&mut self, answer: ParsedAnswer, gt: OptionLetter) {
        self.n += 1;
        match answer {
            ParsedAnswer::Letter(l) if l == gt => self.correct += 1,
            ParsedAnswer::Letter(_) => {}
            ParsedAnswer::Invalid | ParsedAnswer::InvalidTimeout => self.invalid += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub mode: PromptMode,
    pub overall: Counts,
    pub accuracy: Tenths,
    pub by_group: BTreeMap<RowKey, Counts>,
}

/// Scores one run (one prompting mode). INVALID answers count as wrong.
pub fn score_run(records: &[ResponseRecord]) -> Result<RunScore> {
    let first = records.first().ok_or(ScoreError::Empty)?;
    let mut seen = BTreeSet::new();
    let mut overall = Counts::default();
    let mut by_group: BTreeMap<RowKey, Counts> = BTreeMap::new();
    for r in records {
        if r.mode != first.mode {
            return Err(ScoreError::MixedModes(
                format!("{:?}", first.mode).to_lowercase(),
                format!("{:?}", r.mode).to_lowercase(),
            ));
        }
        if !seen.insert(r.instance_id.as_str()) {
            return Err(ScoreError::DuplicateId(r.instance_id.clone()));
        }
        let a = r.answer();
        overall.add(a, r.ground_truth);
        by_group.entry(r.key()).or_default().add(a, r.ground_truth);
    }
    Ok(RunScore {
        mode: first.mode,
        overall,
        accuracy: overall.accuracy(),
        by_group,
    })
}

/// Records with `parsed` filled in from the scorer's parser.
pub fn with_parsed(records: &[ResponseRecord]) -> Vec<ResponseRecord> {
    records
        .iter()
        .map(|r| ResponseRecord {
            parsed: Some(r.answer()),
            ..r.clone()
        })
        .collect()
}
