use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_capability, BackendError, ChatBackend, ChatReply, ChatRequest, ScriptHint};
use crate::tasks::TaskId;

/// Probability of a correct answer at a level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorrectnessRule {
    /// Correct exactly at levels `1..=k`.
    Threshold {
        k: u32,
    },
    /// `clamp(intercept + slope * level, 0, 1)`.
    Linear {
        intercept: f64,
        slope: f64,
    },
    Always,
    Never,
    /// `probs[level - 1]`, and the last entry beyond the table.
    Table {
        probs: Vec<f64>,
    },
}

impl CorrectnessRule {
    pub fn probability(&self, level: u32) -> f64 {
        match self {
            CorrectnessRule::Threshold { k } => f64::from(u8::from(level <= *k)),
            CorrectnessRule::Linear { intercept, slope } => (intercept + slope * f64::from(level)).clamp(0.0, 1.0),
            CorrectnessRule::Always => 1.0,
            CorrectnessRule::Never => 0.0,
            CorrectnessRule::Table { probs } => {
                let i = (level.max(1) as usize - 1).min(probs.len().saturating_sub(1));
                probs.get(i).copied().unwrap_or(0.0)
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            CorrectnessRule::Linear { intercept, slope } => {
                if !intercept.is_finite() || !slope.is_finite() {
                    return Err("linear rule needs finite coefficients".into());
                }
                if *slope > 0.0 {
                    return Err(format!("slope {slope} makes the rule increase with level"));
                }
            }
            CorrectnessRule::Table { probs } => {
                if probs.is_empty() {
                    return Err("probability table is empty".into());
                }
                if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err("table probabilities must lie in [0, 1]".into());
                }
                if probs.windows(2).any(|w| w[1] > w[0]) {
                    return Err("table probabilities must not increase with level".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// How often a scripted interviewer hands in bad material.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterviewerFaults {
    pub malformed_rate: f64,
    pub miscalibration_rate: f64,
    pub duplicate_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapabilityProfile {
    pub default: CorrectnessRule,
    pub per_task: BTreeMap<TaskId, CorrectnessRule>,
    /// Share of interviewee replies sent without the required tags.
    pub format_violation_rate: f64,
    pub interviewer: InterviewerFaults,
    /// Share of supervisor checks answered with a veto.
    pub supervisor_veto_rate: f64,
    pub images: bool,
    pub seed: u64,
}

impl Default for CapabilityProfile {
    fn default() -> Self {
        Self {
            default: CorrectnessRule::Always,
            per_task: BTreeMap::new(),
            format_violation_rate: 0.0,
            interviewer: InterviewerFaults::default(),
            supervisor_veto_rate: 0.0,
            images: true,
            seed: 0,
        }
    }
}

impl CapabilityProfile {
    pub fn threshold(k: u32) -> Self {
        Self {
            default: CorrectnessRule::Threshold { k },
            ..Self::default()
        }
    }

    pub fn rule(&self, task: TaskId) -> &CorrectnessRule {
        self.per_task.get(&task).unwrap_or(&self.default)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.default.validate()?;
        for (task, rule) in &self.per_task {
            rule.validate().map_err(|e| format!("{task}: {e}"))?;
        }
        let rates = [
            ("format_violation_rate", self.format_violation_rate),
            ("interviewer.malformed_rate", self.interviewer.malformed_rate),
            ("interviewer.miscalibration_rate", self.interviewer.miscalibration_rate),
            ("interviewer.duplicate_rate", self.interviewer.duplicate_rate),
            ("supervisor_veto_rate", self.supervisor_veto_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(format!("{name} {r} outside [0, 1]"));
            }
        }
        let f = &self.interviewer;
        if f.malformed_rate + f.miscalibration_rate + f.duplicate_rate > 1.0 {
            return Err("interviewer fault rates sum above 1".into());
        }
        Ok(())
    }
}

/// Deterministic stand-in for a model. Decisions are drawn from a hash of
/// the profile seed and the full request, so the same request always gets
/// the same reply.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    name: String,
    profile: CapabilityProfile,
}

impl ScriptedBackend {
    pub fn new(name: impl Into<String>, profile: CapabilityProfile) -> Self {
        Self {
            name: name.into(),
            profile,
        }
    }

    pub fn profile(&self) -> &CapabilityProfile {
        &self.profile
    }

    fn draw(&self, req: &ChatRequest, salt: &str) -> f64 {
        let mut h = Sha256::new();
        h.update(self.profile.seed.to_le_bytes());
        h.update(salt.as_bytes());
        for m in &req.messages {
            h.update(m.role.as_str().as_bytes());
            h.update([0]);
            h.update(m.content.as_bytes());
            h.update([0]);
            for i in &m.images {
                h.update(i.as_bytes());
                h.update([0]);
            }
        }
        match &req.hint {
            Some(ScriptHint::Interviewee { correct, wrong, .. }) => {
                h.update(correct.as_bytes());
                h.update(wrong.as_bytes());
            }
            Some(ScriptHint::Interviewer { ideal, .. }) => h.update(ideal.as_bytes()),
            _ => {}
        }
        let d = h.finalize();
        let x = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
        (x >> 11) as f64 / (1u64 << 53) as f64
    }
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports_images(&self) -> bool {
        self.profile.images
    }

    fn chat(&self, req: &ChatRequest) -> Result<ChatReply, BackendError> {
        check_capability(self, req)?;
        let text = match &req.hint {
            Some(ScriptHint::Interviewee {
                task,
                level,
                correct,
                wrong,
            }) => {
                if self.draw(req, "format") < self.profile.format_violation_rate {
                    "I am not sure how to answer this.".to_string()
                } else if self.draw(req, "answer") < self.profile.rule(*task).probability(*level) {
                    correct.clone()
                } else {
                    wrong.clone()
                }
            }
            Some(ScriptHint::Interviewer {
                ideal,
                miscalibrated,
                malformed,
                previous,
                ..
            }) => {
                let f = &self.profile.interviewer;
                let u = self.draw(req, "interviewer");
                if u < f.malformed_rate {
                    malformed.clone()
                } else if u < f.malformed_rate + f.miscalibration_rate && miscalibrated.is_some() {
                    miscalibrated.clone().expect("checked")
                } else if u < f.malformed_rate + f.miscalibration_rate + f.duplicate_rate && previous.is_some() {
                    previous.clone().expect("checked")
                } else {
                    ideal.clone()
                }
            }
            Some(ScriptHint::Supervisor) => {
                let veto = self.draw(req, "supervisor") < self.profile.supervisor_veto_rate;
                let j = if veto { "yes" } else { "no" };
                format!("<Judgment>{j}</Judgment>\n<Analysis>scripted review</Analysis>")
            }
            None => {
                return Err(BackendError::Capability {
                    backend: self.name.clone(),
                    what: "requests without a script hint".into(),
                })
            }
        };
        Ok(ChatReply::text(text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ChatMessage;

    fn ask(b: &ScriptedBackend, level: u32, q: &str) -> String {
        let req = ChatRequest::new("m", vec![ChatMessage::user(q)]).with_hint(ScriptHint::Interviewee {
            task: TaskId::Btt,
            level,
            correct: "<answer> 1 2 3 </answer>".into(),
            wrong: "<answer> 3 2 1 </answer>".into(),
        });
        b.chat(&req).unwrap().text
    }

    #[test]
    fn threshold_profile() {
        let b = ScriptedBackend::new("s", CapabilityProfile::threshold(3));
        assert_eq!(ask(&b, 2, "q"), "<answer> 1 2 3 </answer>");
        assert_eq!(ask(&b, 3, "q"), "<answer> 1 2 3 </answer>");
        assert_eq!(ask(&b, 4, "q"), "<answer> 3 2 1 </answer>");
    }

    #[test]
    fn deterministic_and_seeded() {
        let mut p = CapabilityProfile {
            default: CorrectnessRule::Linear {
                intercept: 1.0,
                slope: -0.5,
            },
            ..CapabilityProfile::default()
        };
        let a = ScriptedBackend::new("a", p.clone());
        let runs: Vec<String> = (0..40).map(|i| ask(&a, 1, &format!("q{i}"))).collect();
        let again: Vec<String> = (0..40).map(|i| ask(&a, 1, &format!("q{i}"))).collect();
        assert_eq!(runs, again);
        let right = runs.iter().filter(|r| r.contains("1 2 3")).count();
        assert!((10..=30).contains(&right), "{right}");
        p.seed = 99;
        let b = ScriptedBackend::new("b", p);
        let other: Vec<String> = (0..40).map(|i| ask(&b, 1, &format!("q{i}"))).collect();
        assert_ne!(runs, other);
    }

    #[test]
    fn format_violations() {
        let b = ScriptedBackend::new(
            "f",
            CapabilityProfile {
                format_violation_rate: 1.0,
                ..CapabilityProfile::default()
            },
        );
        assert!(!ask(&b, 1, "q").contains("<answer>"));
    }

    #[test]
    fn rules_validate() {
        assert!(CorrectnessRule::Linear {
            intercept: 1.0,
            slope: 0.1
        }
        .validate()
        .is_err());
        assert!(CorrectnessRule::Table { probs: vec![0.5, 0.9] }.validate().is_err());
        assert_eq!(CorrectnessRule::Table { probs: vec![1.0, 0.5] }.probability(7), 0.5);
        let p = CapabilityProfile {
            interviewer: InterviewerFaults {
                malformed_rate: 0.6,
                miscalibration_rate: 0.6,
                duplicate_rate: 0.0,
            },
            ..CapabilityProfile::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn text_only_rejects_images() {
        let b = ScriptedBackend::new(
            "t",
            CapabilityProfile {
                images: false,
                ..CapabilityProfile::default()
            },
        );
        let req = ChatRequest::new(
            "m",
            vec![ChatMessage::user("x").with_images(vec!["images/a.png".into()])],
        )
        .with_hint(ScriptHint::Supervisor);
        assert!(matches!(b.chat(&req), Err(BackendError::Capability { .. })));
    }
}
