//! Rule-based supervision of generated QA pairs, with an optional model
//! reviewer that can veto.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::backend::{ChatBackend, ChatMessage, ChatRequest, ScriptHint};
use crate::protocol::tagged::{parse_tagged, FieldKind, TagSpec};
use crate::protocol::templates::{render_prompt, slots, TemplateId};
use crate::tasks::{recalibrate, QAPair, TaskError, TaskParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictCategory {
    Ok,
    FormatViolation,
    RedundantQuestion,
    CalibrationMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directive {
    Accept,
    Regenerate,
    Abort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisorVerdict {
    pub category: VerdictCategory,
    pub detail: String,
    pub directive: Directive,
    /// The pair to use: the calibrated pair on `Accept`, the pair with the
    /// oracle truth on `CalibrationMismatch`.
    pub qa: Option<QAPair>,
}

impl SupervisorVerdict {
    fn reject(category: VerdictCategory, detail: String, attempts_left: u32) -> Self {
        let directive = if attempts_left == 0 {
            Directive::Abort
        } else {
            Directive::Regenerate
        };
        Self {
            category,
            detail,
            directive,
            qa: None,
        }
    }

    /// The pair may go to the interviewee.
    pub fn usable(&self) -> Option<&QAPair> {
        match self.category {
            VerdictCategory::Ok | VerdictCategory::CalibrationMismatch => self.qa.as_ref(),
            _ => None,
        }
    }
}

/// A model asked to review each question.
#[derive(Clone, Copy)]
pub struct Reviewer<'a> {
    pub backend: &'a dyn ChatBackend,
    pub model_name: &'a str,
    pub max_new_tokens: u32,
}

/// The review request for `qa`.
pub fn review_request(qa: &QAPair, model_name: &str, max_new_tokens: u32) -> ChatRequest {
    let s = slots(&[
        ("task", qa.task.to_string()),
        ("level", qa.level.to_string()),
        ("question", qa.query.text.clone()),
    ]);
    let mut req = ChatRequest::new(
        model_name,
        vec![
            ChatMessage::system(render_prompt(TemplateId::SupervisorSystem, &s).expect("no slots")),
            ChatMessage::user(render_prompt(TemplateId::SupervisorUser, &s).expect("slots supplied")),
        ],
    )
    .with_hint(ScriptHint::Supervisor);
    req.max_new_tokens = max_new_tokens;
    req
}

/// Checks one generated pair. `built` is the result of parsing and
/// building the interviewer's material; `history` holds query hashes
/// already asked on this stream.
///
/// Rules run in order: material faults, calibration, repeated query
/// (on the calibrated query), then the optional reviewer. A reviewer
/// failure is logged and ignored.
pub fn supervise(
    built: Result<&QAPair, &TaskError>,
    history: &BTreeSet<String>,
    attempts_left: u32,
    params: &TaskParams,
    reviewer: Option<Reviewer<'_>>,
) -> SupervisorVerdict {
    let qa = match built {
        Ok(qa) => qa,
        Err(e) => return SupervisorVerdict::reject(VerdictCategory::FormatViolation, e.to_string(), attempts_left),
    };
    let (calibrated, disagreement) = match recalibrate(qa, params) {
        Ok(r) => (r.qa, r.disagreement),
        Err(TaskError::OracleUnavailable(_)) => (qa.clone(), false),
        Err(e) => return SupervisorVerdict::reject(VerdictCategory::FormatViolation, e.to_string(), attempts_left),
    };
    let hash = calibrated.query.hash();
    if history.contains(&hash) {
        return SupervisorVerdict::reject(
            VerdictCategory::RedundantQuestion,
            format!("query {} was already asked", &hash[..12]),
            attempts_left,
        );
    }
    if disagreement {
        let claimed = qa.provenance.claimed.as_ref().map_or_else(String::new, |c| c.render());
        return SupervisorVerdict {
            category: VerdictCategory::CalibrationMismatch,
            detail: format!("claimed {claimed}, oracle {}", calibrated.truth.render()),
            directive: Directive::Regenerate,
            qa: Some(calibrated),
        };
    }
    if let Some(r) = reviewer {
        let req = review_request(&calibrated, r.model_name, r.max_new_tokens);
        match r.backend.chat(&req) {
            Ok(reply) => {
                let schema = [TagSpec::xml("Judgment", FieldKind::YesNo)];
                match parse_tagged(&reply.text, &schema).map(|f| f.yes_no("Judgment")) {
                    Ok(Some(true)) => {
                        return SupervisorVerdict::reject(
                            VerdictCategory::FormatViolation,
                            "supervisor model vetoed the question".into(),
                            attempts_left,
                        )
                    }
                    Ok(_) => {}
                    Err(e) => log::warn!("supervisor reply unreadable, using rules only: {e}"),
                }
            }
            Err(e) => log::warn!("supervisor backend failed, using rules only: {e}"),
        }
    }
    SupervisorVerdict {
        category: VerdictCategory::Ok,
        detail: String::new(),
        directive: Directive::Accept,
        qa: Some(calibrated),
    }
}
