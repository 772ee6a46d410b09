//! The continual evaluation loop: per-route streams that escalate the
//! difficulty level until the interviewee fails, and the orchestration of
//! all activated routes of a network.

mod network;
mod stream;
pub mod supervisor;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::backend::ChatBackend;
use crate::protocol::{DigestOptions, Message};
use crate::sandbox::CodeRunner;
use crate::tasks::{Generator, QAPair, TaskId};

pub use network::{run_network, stream_specs, NetworkRun, StreamFailure};
pub use stream::{run_stream, StreamOutcome, StreamProgress, StreamSpec};
pub use supervisor::{supervise, Directive, Reviewer, SupervisorVerdict, VerdictCategory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOptions {
    /// Questions per level.
    pub q_total: u32,
    /// First level, `a`.
    pub initial_level: u32,
    pub level_cap: u32,
    /// Regenerations allowed per question.
    pub retry_budget: u32,
    /// Stop at the first wrong answer instead of the first level with
    /// accuracy zero.
    pub strict_stop: bool,
    pub digest_rounds: usize,
    pub digest_max_chars: usize,
    /// Streams run concurrently.
    pub workers: usize,
    pub seed: u64,
    pub max_new_tokens: u32,
    pub temperature: f64,
    /// Earlier problems listed in "different from" interviewer prompts.
    pub recent_window: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            q_total: 10,
            initial_level: 1,
            level_cap: 30,
            retry_budget: 3,
            strict_stop: false,
            digest_rounds: DigestOptions::default().rounds,
            digest_max_chars: DigestOptions::default().max_chars,
            workers: 4,
            seed: 0,
            max_new_tokens: crate::backend::DEFAULT_MAX_NEW_TOKENS,
            temperature: 0.0,
            recent_window: 5,
        }
    }
}

impl EngineOptions {
    pub fn validate(&self) -> Result<(), String> {
        let mut errs = Vec::new();
        if self.q_total == 0 {
            errs.push("q_total must be at least 1".to_string());
        }
        if self.initial_level == 0 {
            errs.push("initial_level must be at least 1".to_string());
        }
        if self.level_cap < self.initial_level {
            errs.push(format!(
                "level_cap {} is below initial_level {}",
                self.level_cap, self.initial_level
            ));
        }
        if self.workers == 0 {
            errs.push("workers must be at least 1".to_string());
        }
        if self.max_new_tokens == 0 {
            errs.push("max_new_tokens must be at least 1".to_string());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            errs.push(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs.join("; "))
        }
    }

    pub fn digest(&self) -> DigestOptions {
        DigestOptions {
            rounds: self.digest_rounds,
            max_chars: self.digest_max_chars,
        }
    }
}

/// Seed for one generation attempt.
pub fn derive_seed(run_seed: u64, stream_id: &str, level: u32, round: u32, attempt: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(stream_id.as_bytes());
    h.update([0]);
    h.update(level.to_le_bytes());
    h.update(round.to_le_bytes());
    h.update(attempt.to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Backends by model reference.
#[derive(Clone, Default)]
pub struct Backends {
    map: BTreeMap<String, Arc<dyn ChatBackend>>,
}

impl std::fmt::Debug for Backends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.map.keys()).finish()
    }
}

impl Backends {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, model_ref: impl Into<String>, backend: Arc<dyn ChatBackend>) {
        self.map.insert(model_ref.into(), backend);
    }

    pub fn with(mut self, model_ref: impl Into<String>, backend: Arc<dyn ChatBackend>) -> Self {
        self.insert(model_ref, backend);
        self
    }

    pub fn get(&self, model_ref: &str) -> Option<&Arc<dyn ChatBackend>> {
        self.map.get(model_ref)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }
}

/// Everything a run needs besides the network.
#[derive(Clone)]
pub struct Engine {
    pub generator: Generator,
    pub backends: Backends,
    pub runner: Option<Arc<dyn CodeRunner>>,
    pub options: EngineOptions,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("backends", &self.backends)
            .field("runner", &self.runner.is_some())
            .field("options", &self.options)
            .finish_non_exhaustive()
    }
}

/// One supervised generation attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub attempt: u32,
    pub category: VerdictCategory,
    pub directive: Directive,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// Everything that happened in one round. Stream progress is a fold over
/// these, so a resumed stream replays exactly what was committed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub stream_id: String,
    pub task: TaskId,
    pub level: u32,
    pub round: u32,
    pub attempts: Vec<AttemptLog>,
    pub qa: QAPair,
    /// Interviewer reply the pair was built from.
    pub generation: String,
    pub messages: Vec<Message>,
    pub correct: bool,
    pub unparseable: bool,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("store: {0}")]
    Store(String),
    #[error("unknown backend {0:?}")]
    UnknownBackend(String),
    #[error("{0}")]
    Invalid(String),
}

/// Receives committed rounds and stream states.
pub trait StreamSink: Send + Sync {
    fn commit_round(&self, record: &RoundRecord) -> Result<(), EngineError>;
    fn update_state(&self, progress: &StreamProgress) -> Result<(), EngineError>;
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl StreamSink for NullSink {
    fn commit_round(&self, _: &RoundRecord) -> Result<(), EngineError> {
        Ok(())
    }

    fn update_state(&self, _: &StreamProgress) -> Result<(), EngineError> {
        Ok(())
    }
}

/// Stops a run early. Streams halted this way stay `Running` and can be
/// resumed.
#[derive(Debug, Default)]
pub struct RunControl {
    cancel: AtomicBool,
    budget: Option<u64>,
    used: AtomicU64,
}

impl RunControl {
    pub fn new() -> Self {
        Self::default()
    }

    /// Halt once this many rounds have been committed across the run.
    pub fn halt_after_rounds(rounds: u64) -> Self {
        Self {
            budget: Some(rounds),
            ..Self::default()
        }
    }

    pub fn cancel(&self) {
        self.cancel.store(true, Ordering::SeqCst);
    }

    pub fn is_halted(&self) -> bool {
        self.cancel.load(Ordering::SeqCst) || self.budget.is_some_and(|b| self.used.load(Ordering::SeqCst) >= b)
    }

    /// Claims one round; `false` once halted.
    fn claim_round(&self) -> bool {
        if self.cancel.load(Ordering::SeqCst) {
            return false;
        }
        match self.budget {
            None => true,
            Some(b) => self
                .used
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |u| (u < b).then_some(u + 1))
                .is_ok(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_every_coordinate() {
        let base = derive_seed(1, "E->I", 1, 1, 0);
        assert_eq!(base, derive_seed(1, "E->I", 1, 1, 0));
        for other in [
            derive_seed(2, "E->I", 1, 1, 0),
            derive_seed(1, "E->J", 1, 1, 0),
            derive_seed(1, "E->I", 2, 1, 0),
            derive_seed(1, "E->I", 1, 2, 0),
            derive_seed(1, "E->I", 1, 1, 1),
        ] {
            assert_ne!(base, other);
        }
    }

    #[test]
    fn round_budget() {
        let c = RunControl::halt_after_rounds(2);
        assert!(c.claim_round());
        assert!(c.claim_round());
        assert!(!c.claim_round());
        assert!(c.is_halted());
    }

    #[test]
    fn options_validation() {
        assert!(EngineOptions::default().validate().is_ok());
        let bad = EngineOptions {
            q_total: 0,
            level_cap: 0,
            ..EngineOptions::default()
        };
        let msg = bad.validate().unwrap_err();
        assert!(msg.contains("q_total") && msg.contains("level_cap"));
    }
}
