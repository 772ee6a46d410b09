//! Chat backends. Every role talks to its model through [`ChatBackend`];
//! the scripted backend answers from a capability profile, the HTTP
//! backend from a live chat-completion endpoint.

mod http;
mod limiter;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::RoleTag;
use crate::tasks::TaskId;

pub use http::{HttpBackend, HttpConfig};
pub use limiter::{Limiter, LimiterConfig};
pub use scripted::{CapabilityProfile, CorrectnessRule, InterviewerFaults, ScriptedBackend};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: RoleTag,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<String>,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: RoleTag::System,
            content: content.into(),
            images: Vec::new(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: RoleTag::User,
            content: content.into(),
            images: Vec::new(),
        }
    }

    pub fn with_images(mut self, images: Vec<String>) -> Self {
        self.images = images;
        self
    }
}

/// Replies a scripted backend may choose from. Carried beside the request
/// and never sent over the wire.
#[derive(Debug, Clone, PartialEq)]
pub enum ScriptHint {
    Interviewee {
        task: TaskId,
        level: u32,
        correct: String,
        wrong: String,
    },
    Interviewer {
        task: TaskId,
        level: u32,
        ideal: String,
        miscalibrated: Option<String>,
        malformed: String,
        previous: Option<String>,
    },
    Supervisor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub model_name: String,
    #[serde(skip)]
    pub hint: Option<ScriptHint>,
}

pub const DEFAULT_MAX_NEW_TOKENS: u32 = 4096;

impl ChatRequest {
    pub fn new(model_name: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        Self {
            messages,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            temperature: 0.0,
            model_name: model_name.into(),
            hint: None,
        }
    }

    pub fn with_hint(mut self, hint: ScriptHint) -> Self {
        self.hint = Some(hint);
        self
    }

    pub fn has_images(&self) -> bool {
        self.messages.iter().any(|m| !m.images.is_empty())
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.messages.is_empty() {
            return Err(BackendError::InvalidRequest("no messages".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(BackendError::InvalidRequest("max_new_tokens is zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub text: String,
    pub usage: Usage,
}

impl ChatReply {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            usage: Usage::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited")]
    RateLimited { retry_after_ms: Option<u64> },
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("malformed server reply: {0}")]
    MalformedServerReply(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("backend {backend} cannot handle {what}")]
    Capability { backend: String, what: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<BackendError> },
}

impl BackendError {
    /// Worth another attempt with the same request.
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            BackendError::Timeout | BackendError::RateLimited { .. } | BackendError::Transport(_)
        )
    }
}

pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;

    fn supports_images(&self) -> bool;

    fn chat(&self, req: &ChatRequest) -> Result<ChatReply, BackendError>;
}

/// Rejects image requests on text-only backends before anything is sent.
pub fn check_capability(backend: &dyn ChatBackend, req: &ChatRequest) -> Result<(), BackendError> {
    req.validate()?;
    if req.has_images() && !backend.supports_images() {
        return Err(BackendError::Capability {
            backend: backend.name().to_string(),
            what: "image inputs".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hint_stays_off_the_wire() {
        let req = ChatRequest::new("m", vec![ChatMessage::user("hi")]).with_hint(ScriptHint::Supervisor);
        let v = serde_json::to_value(&req).unwrap();
        assert!(v.get("hint").is_none());
        assert_eq!(v["messages"][0]["role"], "user");
        assert_eq!(v["temperature"], 0.0);
    }

    #[test]
    fn request_validation() {
        assert!(ChatRequest::new("m", vec![]).validate().is_err());
        let mut r = ChatRequest::new("m", vec![ChatMessage::user("x")]);
        r.max_new_tokens = 0;
        assert!(r.validate().is_err());
    }
}
