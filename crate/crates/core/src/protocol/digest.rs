//! Bounded summaries of upstream transcripts handed to a downstream
//! interviewer.

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::message::Transcript;

/// Lower-cased, whitespace-collapsed SHA-256 of a query, plus its image
/// refs. Two queries collide iff they read the same after normalization.
pub fn query_hash(text: &str, images: &[String]) -> String {
    let norm = text
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ");
    let mut h = Sha256::new();
    h.update(norm.as_bytes());
    for img in images {
        h.update([0u8]);
        h.update(img.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigestOptions {
    /// Rounds kept per upstream transcript.
    pub rounds: usize,
    /// Characters kept per question or answer.
    pub max_chars: usize,
}

impl Default for DigestOptions {
    fn default() -> Self {
        Self {
            rounds: 3,
            max_chars: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigestEntry {
    pub stream_id: String,
    pub step: u32,
    pub round: u32,
    pub question: String,
    pub answer: String,
    pub correct: bool,
    pub question_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub stream_id: String,
    pub rounds: usize,
    pub correct: usize,
    pub unparseable: usize,
    pub last_level: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digest {
    pub entries: Vec<DigestEntry>,
    pub summaries: Vec<StreamSummary>,
}

fn clip(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => s[..i].to_string(),
        None => s.to_string(),
    }
}

impl Digest {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.summaries.is_empty()
    }

    pub fn question_hashes(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.question_hash.as_str())
    }

    /// Plain-text form prepended to the interviewer prompt.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.summaries {
            out.push_str(&format!(
                "[{}] {} rounds, {} correct, {} unparseable, last level {}\n",
                s.stream_id, s.rounds, s.correct, s.unparseable, s.last_level
            ));
        }
        for e in &self.entries {
            out.push_str(&format!(
                "[{} level {} round {}] {}\nQ: {}\nA: {}\n",
                e.stream_id,
                e.step,
                e.round,
                if e.correct { "correct" } else { "wrong" },
                e.question,
                e.answer
            ));
        }
        out
    }
}

/// Keeps the last `opts.rounds` exchanges of each upstream transcript and
/// a verdict tally. Output size is bounded by
/// `rounds * upstream.len() * 2 * max_chars` plus summary lines.
pub fn aggregate_messages(upstream: &[&Transcript], opts: DigestOptions) -> Digest {
    let mut digest = Digest::default();
    for t in upstream {
        let exchanges = t.exchanges();
        if exchanges.is_empty() {
            continue;
        }
        digest.summaries.push(StreamSummary {
            stream_id: t.stream_id.clone(),
            rounds: exchanges.len(),
            correct: exchanges.iter().filter(|e| e.verdict.correct).count(),
            unparseable: exchanges.iter().filter(|e| e.verdict.unparseable).count(),
            last_level: exchanges.last().map(|e| e.verdict.step).unwrap_or(0),
        });
        let skip = exchanges.len().saturating_sub(opts.rounds);
        for e in &exchanges[skip..] {
            digest.entries.push(DigestEntry {
                stream_id: t.stream_id.clone(),
                step: e.verdict.step,
                round: e.verdict.round,
                question: clip(e.question, opts.max_chars),
                answer: clip(e.answer, opts.max_chars),
                correct: e.verdict.correct,
                question_hash: query_hash(e.question, &[]),
            });
        }
    }
    digest
}
