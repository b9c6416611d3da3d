//! Append-only ledger of recoverable data problems.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    ParseVersion,
    ParseRequirement,
    Resolve,
    Advisory,
    Timeline,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::ParseVersion,
        Stage::ParseRequirement,
        Stage::Resolve,
        Stage::Advisory,
        Stage::Timeline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::ParseVersion => "parse-version",
            Stage::ParseRequirement => "parse-requirement",
            Stage::Resolve => "resolve",
            Stage::Advisory => "advisory",
            Stage::Timeline => "timeline",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WarningRecord {
    pub stage: Stage,
    pub subject: String,
    pub reason: String,
}

impl WarningRecord {
    pub fn new(stage: Stage, subject: impl Into<String>, reason: impl Into<String>) -> Self {
        WarningRecord {
            stage,
            subject: subject.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct WarningLedger {
    records: Vec<WarningRecord>,
}

impl WarningLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, stage: Stage, subject: impl Into<String>, reason: impl Into<String>) {
        self.records.push(WarningRecord::new(stage, subject, reason));
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = WarningRecord>) {
        self.records.extend(records);
    }

    pub fn records(&self) -> &[WarningRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, stage: Stage) -> usize {
        self.records.iter().filter(|w| w.stage == stage).count()
    }

    /// Per-stage counts with every stage present, zero or not.
    pub fn counts_by_stage(&self) -> BTreeMap<&'static str, usize> {
        Stage::ALL
            .iter()
            .map(|&s| (s.as_str(), self.count(s)))
            .collect()
    }
}
