use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleTag {
    System,
    User,
    Assistant,
}

impl RoleTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RoleTag::System => "system",
            RoleTag::User => "user",
            RoleTag::Assistant => "assistant",
        }
    }
}

/// What a message is for within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    GenerationPrompt,
    GenerationReply,
    SupervisorPrompt,
    SupervisorReply,
    Question,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub sender: String,
    pub recipient: String,
    pub role_tag: RoleTag,
    pub kind: MessageKind,
    pub body: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<String>,
    pub step: u32,
    pub round: u32,
    pub timestamp_ms: u64,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl Message {
    pub fn new(
        sender: impl Into<String>,
        recipient: impl Into<String>,
        role_tag: RoleTag,
        kind: MessageKind,
        body: impl Into<String>,
        step: u32,
        round: u32,
    ) -> Self {
        Self {
            sender: sender.into(),
            recipient: recipient.into(),
            role_tag,
            kind,
            body: body.into(),
            images: Vec::new(),
            step,
            round,
            timestamp_ms: now_ms(),
        }
    }

    pub fn with_images(mut self, images: Vec<String>) -> Self {
        self.images = images;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundVerdict {
    pub step: u32,
    pub round: u32,
    pub correct: bool,
    pub unparseable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranscriptError {
    #[error("message at ({step}, {round}) precedes the last committed ({last_step}, {last_round})")]
    OutOfOrder {
        step: u32,
        round: u32,
        last_step: u32,
        last_round: u32,
    },
    #[error("empty message body")]
    EmptyBody,
    #[error("round ({step}, {round}) already has a verdict")]
    DuplicateVerdict { step: u32, round: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub stream_id: String,
    pub interviewee: String,
    pub interviewer: String,
    pub messages: Vec<Message>,
    pub verdicts: Vec<RoundVerdict>,
}

impl Transcript {
    pub fn new(stream_id: impl Into<String>, interviewee: impl Into<String>, interviewer: impl Into<String>) -> Self {
        Self {
            stream_id: stream_id.into(),
            interviewee: interviewee.into(),
            interviewer: interviewer.into(),
            ..Self::default()
        }
    }

    /// Appends a message; (step, round) may repeat within a round but
    /// never move backwards.
    pub fn push(&mut self, msg: Message) -> Result<(), TranscriptError> {
        if msg.body.is_empty() {
            return Err(TranscriptError::EmptyBody);
        }
        if let Some(last) = self.messages.last() {
            if (msg.step, msg.round) < (last.step, last.round) {
                return Err(TranscriptError::OutOfOrder {
                    step: msg.step,
                    round: msg.round,
                    last_step: last.step,
                    last_round: last.round,
                });
            }
        }
        self.messages.push(msg);
        Ok(())
    }

    pub fn record_verdict(&mut self, v: RoundVerdict) -> Result<(), TranscriptError> {
        if let Some(last) = self.verdicts.last() {
            if (v.step, v.round) <= (last.step, last.round) {
                return Err(TranscriptError::DuplicateVerdict {
                    step: v.step,
                    round: v.round,
                });
            }
        }
        self.verdicts.push(v);
        Ok(())
    }

    /// Question/answer bodies of each round that has a verdict.
    pub fn exchanges(&self) -> Vec<Exchange<'_>> {
        self.verdicts
            .iter()
            .map(|v| {
                let find = |kind| {
                    self.messages
                        .iter()
                        .rev()
                        .find(|m| m.step == v.step && m.round == v.round && m.kind == kind)
                        .map(|m| m.body.as_str())
                };
                Exchange {
                    verdict: *v,
                    question: find(MessageKind::Question).unwrap_or(""),
                    answer: find(MessageKind::Answer).unwrap_or(""),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exchange<'a> {
    pub verdict: RoundVerdict,
    pub question: &'a str,
    pub answer: &'a str,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(step: u32, round: u32) -> Message {
        Message::new("I1", "E1", RoleTag::User, MessageKind::Question, "q", step, round)
    }

    #[test]
    fn ordering_enforced() {
        let mut t = Transcript::new("s", "E1", "I1");
        t.push(msg(1, 1)).unwrap();
        t.push(msg(1, 1)).unwrap();
        t.push(msg(2, 1)).unwrap();
        assert!(matches!(t.push(msg(1, 3)), Err(TranscriptError::OutOfOrder { .. })));
        let mut empty = msg(3, 1);
        empty.body.clear();
        assert_eq!(t.push(empty), Err(TranscriptError::EmptyBody));
    }

    #[test]
    fn one_verdict_per_round() {
        let mut t = Transcript::new("s", "E1", "I1");
        let v = RoundVerdict {
            step: 1,
            round: 1,
            correct: true,
            unparseable: false,
        };
        t.record_verdict(v).unwrap();
        assert!(t.record_verdict(v).is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let m = msg(1, 2).with_images(vec!["images/ab.png".into()]);
        let line = serde_json::to_string(&m).unwrap();
        assert!(line.contains("\"role_tag\":\"user\""));
        assert_eq!(serde_json::from_str::<Message>(&line).unwrap(), m);
    }
}
