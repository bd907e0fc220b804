use std::collections::BTreeMap;

use super::{Agent, AgentAction, AgentError, Observation};
use crate::dynamics::Side;
use crate::engine::MessageRecord;

/// Replays one side's broadcasts from a recorded message log, keyed by round.
#[derive(Debug, Clone)]
pub struct TranscriptAgent {
    side: Side,
    entries: BTreeMap<u32, AgentAction>,
    label: String,
}

impl TranscriptAgent {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a MessageRecord>, side: Side) -> Self {
        let entries = records
            .into_iter()
            .filter(|m| m.side == side)
            .map(|m| (m.round, AgentAction::new(m.text.clone(), m.potency)))
            .collect();
        TranscriptAgent { side, entries, label: "transcript".into() }
    }

    /// Parses a `messages.jsonl` log and keeps the entries for `side`.
    pub fn from_jsonl(text: &str, side: Side) -> Result<Self, AgentError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: MessageRecord = serde_json::from_str(line)
                .map_err(|e| AgentError::InvalidInput { line: i + 1, reason: e.to_string() })?;
            records.push(rec);
        }
        Ok(Self::from_records(&records, side))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn remaining(&self) -> usize {
        self.entries.len()
    }
}

impl Agent for TranscriptAgent {
    fn act(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        if let Some(action) = self.entries.remove(&obs.round) {
            return Ok(action);
        }
        match self.entries.range(obs.round..).next() {
            Some((&next, _)) => Err(AgentError::RoundMismatch { side: self.side, round: obs.round, next }),
            None => Err(AgentError::TranscriptExhausted { side: self.side, round: obs.round }),
        }
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}
