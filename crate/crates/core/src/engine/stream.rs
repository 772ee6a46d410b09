//! One evaluation stream: a route and a task, escalated level by level.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::supervisor::{supervise, Directive, Reviewer};
use super::{derive_seed, AttemptLog, Engine, EngineError, EngineOptions, RoundRecord, RunControl, StreamSink};
use crate::backend::{ChatBackend, ChatMessage, ChatRequest, ScriptHint};
use crate::metrics::{LevelTally, MetricsError, PerformanceCurve, StreamStatus};
use crate::network::AgentNode;
use crate::protocol::{
    render_prompt, slots, Digest, Message, MessageKind, RoleTag, RoundVerdict, TemplateId, Transcript,
};
use crate::tasks::{
    parse_answer, parse_material, render_answer, render_malformed, render_material, verify, QAPair, TaskError, TaskId,
    VerifyContext,
};

/// What a stream evaluates.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    /// Route id, `from->to`.
    pub stream_id: String,
    pub task: TaskId,
    pub interviewee: AgentNode,
    pub interviewer: AgentNode,
    pub supervisor: Option<AgentNode>,
}

/// Where a stream stands. Built only by folding committed rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamProgress {
    pub stream_id: String,
    pub task: TaskId,
    pub initial: u32,
    /// Completed levels.
    pub levels: Vec<LevelTally>,
    /// The level under way.
    pub current: LevelTally,
    /// Next round to play, from 1.
    pub round: u32,
    pub status: StreamStatus,
    pub history: BTreeSet<String>,
    pub recent: VecDeque<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous_generation: Option<String>,
    pub regenerations: u64,
    pub rounds: u64,
    #[serde(skip)]
    pub transcript: Transcript,
}

impl StreamProgress {
    pub fn new(spec: &StreamSpec, options: &EngineOptions) -> Self {
        Self {
            stream_id: spec.stream_id.clone(),
            task: spec.task,
            initial: options.initial_level,
            levels: Vec::new(),
            current: LevelTally {
                level: options.initial_level,
                correct: 0,
                unparseable: 0,
                q_total: options.q_total,
            },
            round: 1,
            status: StreamStatus::Running,
            history: BTreeSet::new(),
            recent: VecDeque::new(),
            previous_generation: None,
            regenerations: 0,
            rounds: 0,
            transcript: Transcript::new(
                spec.stream_id.clone(),
                spec.interviewee.node_id.clone(),
                spec.interviewer.node_id.clone(),
            ),
        }
    }

    pub fn level(&self) -> u32 {
        self.current.level
    }

    /// Folds one committed round in. At the end of a level the stop rule
    /// runs: accuracy zero (or any miss when strict) terminates, the cap
    /// caps, anything else moves up a level.
    pub fn apply(&mut self, rec: &RoundRecord, options: &EngineOptions) -> Result<(), EngineError> {
        if rec.stream_id != self.stream_id || rec.task != self.task {
            return Err(EngineError::Invalid(format!(
                "round for {}/{} applied to {}/{}",
                rec.stream_id, rec.task, self.stream_id, self.task
            )));
        }
        if rec.level != self.current.level || rec.round != self.round {
            return Err(EngineError::Invalid(format!(
                "{}: expected level {} round {}, got level {} round {}",
                self.stream_id, self.current.level, self.round, rec.level, rec.round
            )));
        }
        if !matches!(self.status, StreamStatus::Running | StreamStatus::Failed(_)) {
            return Err(EngineError::Invalid(format!(
                "{}: stream already {}",
                self.stream_id,
                self.status.as_str()
            )));
        }
        for m in &rec.messages {
            self.transcript
                .push(m.clone())
                .map_err(|e| EngineError::Invalid(format!("{}: {e}", self.stream_id)))?;
        }
        self.transcript
            .record_verdict(RoundVerdict {
                step: rec.level,
                round: rec.round,
                correct: rec.correct,
                unparseable: rec.unparseable,
            })
            .map_err(|e| EngineError::Invalid(format!("{}: {e}", self.stream_id)))?;
        self.history.insert(rec.qa.query.hash());
        self.recent.push_back(rec.qa.summary());
        while self.recent.len() > options.recent_window {
            self.recent.pop_front();
        }
        self.previous_generation = Some(rec.generation.clone());
        self.regenerations += rec.attempts.len().saturating_sub(1) as u64;
        self.rounds += 1;
        self.status = StreamStatus::Running;
        if rec.correct {
            self.current.correct += 1;
        } else if rec.unparseable {
            self.current.unparseable += 1;
        }
        if self.round < self.current.q_total {
            self.round += 1;
            return Ok(());
        }
        let done = self.current;
        self.levels.push(done);
        let missed = done.correct < done.q_total;
        if done.correct == 0 || (options.strict_stop && missed) {
            self.status = StreamStatus::Terminated;
        } else if done.level >= options.level_cap {
            self.status = StreamStatus::Capped;
        }
        self.current = LevelTally {
            level: done.level + 1,
            correct: 0,
            unparseable: 0,
            q_total: done.q_total,
        };
        self.round = 1;
        Ok(())
    }

    pub fn curve(&self) -> Result<PerformanceCurve, MetricsError> {
        PerformanceCurve::new(
            self.stream_id.clone(),
            self.task,
            self.initial,
            self.levels.clone(),
            self.status.clone(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct StreamOutcome {
    pub progress: StreamProgress,
    /// Stopped by the run control with the stream still running.
    pub halted: bool,
}

fn fail(progress: &mut StreamProgress, reason: String) {
    log::warn!("{}: {reason}", progress.stream_id);
    progress.status = StreamStatus::Failed(reason);
}

/// Plays rounds until the stream reaches a final status, fails, or the
/// run control halts it. `progress` may come from a resumed run.
pub fn run_stream(
    engine: &Engine,
    spec: &StreamSpec,
    digest: &Digest,
    mut progress: StreamProgress,
    sink: &dyn StreamSink,
    control: &RunControl,
) -> Result<StreamOutcome, EngineError> {
    if let StreamStatus::Failed(_) = progress.status {
        progress.status = StreamStatus::Running;
    }
    let interviewer = engine
        .backends
        .get(&spec.interviewer.model_ref)
        .ok_or_else(|| EngineError::UnknownBackend(spec.interviewer.model_ref.clone()))?;
    let interviewee = engine
        .backends
        .get(&spec.interviewee.model_ref)
        .ok_or_else(|| EngineError::UnknownBackend(spec.interviewee.model_ref.clone()))?;
    let supervisor = match &spec.supervisor {
        Some(node) => Some(
            engine
                .backends
                .get(&node.model_ref)
                .ok_or_else(|| EngineError::UnknownBackend(node.model_ref.clone()))?,
        ),
        None => None,
    };
    if progress.status == StreamStatus::Running {
        if spec.task.uses_images() && !interviewee.supports_images() {
            fail(
                &mut progress,
                format!("{} needs images but {} is text-only", spec.task, interviewee.name()),
            );
        } else if spec.task.needs_sandbox() && engine.runner.is_none() {
            fail(&mut progress, "no code runner configured".into());
        }
    }
    let mut halted = false;
    while progress.status == StreamStatus::Running {
        if !control.claim_round() {
            halted = true;
            break;
        }
        let round = Round {
            engine,
            spec,
            digest,
            interviewer: interviewer.as_ref(),
            interviewee: interviewee.as_ref(),
            supervisor: supervisor.map(|b| {
                (
                    b.as_ref(),
                    spec.supervisor.as_ref().expect("checked").model_ref.as_str(),
                )
            }),
        };
        match round.play(&progress) {
            Ok(Some(rec)) => {
                sink.commit_round(&rec)?;
                progress.apply(&rec, &engine.options)?;
            }
            Ok(None) => progress.status = StreamStatus::ExhaustedLevel,
            Err(reason) => fail(&mut progress, reason),
        }
        sink.update_state(&progress)?;
    }
    Ok(StreamOutcome { progress, halted })
}

struct Round<'a> {
    engine: &'a Engine,
    spec: &'a StreamSpec,
    digest: &'a Digest,
    interviewer: &'a dyn ChatBackend,
    interviewee: &'a dyn ChatBackend,
    supervisor: Option<(&'a dyn ChatBackend, &'a str)>,
}

impl Round<'_> {
    fn request(&self, model: &str, messages: Vec<ChatMessage>, hint: ScriptHint) -> ChatRequest {
        let mut req = ChatRequest::new(model, messages).with_hint(hint);
        req.max_new_tokens = self.engine.options.max_new_tokens;
        req.temperature = self.engine.options.temperature;
        req
    }

    /// `Ok(None)` when the task cannot generate this level.
    fn play(&self, progress: &StreamProgress) -> Result<Option<RoundRecord>, String> {
        let opts = &self.engine.options;
        let gen = &self.engine.generator;
        let spec = self.spec;
        let (task, level, round) = (spec.task, progress.level(), progress.round);
        let (ier, iee) = (&spec.interviewer, &spec.interviewee);

        let recent: Vec<String> = progress.recent.iter().cloned().collect();
        let (system, mut user) = gen.interviewer_prompts(task, level, &recent);
        if !self.digest.is_empty() {
            let pre = render_prompt(TemplateId::DigestPreamble, &slots(&[("digest", self.digest.render())]))
                .map_err(|e| e.to_string())?;
            user = format!("{pre}\n\n{user}");
        }
        let mut seen = progress.history.clone();
        seen.extend(self.digest.question_hashes().map(str::to_string));

        let mut messages = Vec::new();
        let mut attempts = Vec::new();
        let mut accepted = None;
        for attempt in 0..=opts.retry_budget {
            let seed = derive_seed(opts.seed, &spec.stream_id, level, round, attempt);
            let ideal = match gen.procedural_material(task, level, seed) {
                Ok(m) => m,
                Err(TaskError::LevelOutOfRange { .. }) => return Ok(None),
                Err(e) => return Err(format!("level {level} round {round}: {e}")),
            };
            let hint = ScriptHint::Interviewer {
                task,
                level,
                ideal: render_material(&ideal),
                miscalibrated: gen.miscalibrated(&ideal, seed).map(|m| render_material(&m)),
                malformed: render_malformed(&ideal),
                previous: progress.previous_generation.clone(),
            };
            let req = self.request(
                &ier.model_ref,
                vec![ChatMessage::system(system.clone()), ChatMessage::user(user.clone())],
                hint,
            );
            let reply = self
                .interviewer
                .chat(&req)
                .map_err(|e| format!("interviewer {}: {e}", ier.node_id))?;
            messages.push(Message::new(
                &spec.stream_id,
                &ier.node_id,
                RoleTag::User,
                MessageKind::GenerationPrompt,
                user.clone(),
                level,
                round,
            ));
            messages.push(Message::new(
                &ier.node_id,
                &spec.stream_id,
                RoleTag::Assistant,
                MessageKind::GenerationReply,
                if reply.text.is_empty() {
                    " "
                } else {
                    reply.text.as_str()
                },
                level,
                round,
            ));
            let built = parse_material(task, &reply.text).and_then(|mut m| {
                m.adopt_reference(&ideal);
                gen.build(task, level, round, seed, m, &ier.model_ref, attempt)
            });
            if let Err(e) = &built {
                if !e.is_material_fault() {
                    return Err(format!("level {level} round {round}: {e}"));
                }
            }
            let reviewer = self.supervisor.map(|(backend, model_name)| Reviewer {
                backend,
                model_name,
                max_new_tokens: opts.max_new_tokens,
            });
            let verdict = supervise(
                built.as_ref(),
                &seen,
                opts.retry_budget - attempt,
                gen.params(),
                reviewer,
            );
            attempts.push(AttemptLog {
                attempt,
                category: verdict.category,
                directive: verdict.directive,
                detail: verdict.detail.clone(),
            });
            if let Some(qa) = verdict.usable() {
                accepted = Some((qa.clone(), reply.text));
                break;
            }
            if verdict.directive == Directive::Abort {
                return Err(format!(
                    "supervisor abort at level {level} round {round} after {} attempts: {}",
                    attempt + 1,
                    verdict.detail
                ));
            }
        }
        let (qa, generation): (QAPair, String) = accepted.ok_or_else(|| "no usable question".to_string())?;

        let hint = ScriptHint::Interviewee {
            task,
            level,
            correct: render_answer(&qa, true),
            wrong: render_answer(&qa, false),
        };
        let question = ChatMessage::user(qa.query.text.clone()).with_images(qa.query.images.clone());
        let req = self.request(&iee.model_ref, vec![question], hint);
        let reply = self
            .interviewee
            .chat(&req)
            .map_err(|e| format!("interviewee {}: {e}", iee.node_id))?;
        messages.push(
            Message::new(
                &ier.node_id,
                &iee.node_id,
                RoleTag::User,
                MessageKind::Question,
                qa.query.text.clone(),
                level,
                round,
            )
            .with_images(qa.query.images.clone()),
        );
        messages.push(Message::new(
            &iee.node_id,
            &ier.node_id,
            RoleTag::Assistant,
            MessageKind::Answer,
            if reply.text.is_empty() {
                " "
            } else {
                reply.text.as_str()
            },
            level,
            round,
        ));
        let (correct, unparseable) = match parse_answer(task, &reply.text) {
            Err(_) => (false, true),
            Ok(answer) => {
                let mut ctx = VerifyContext::new(gen.params());
                if let Some(r) = &self.engine.runner {
                    ctx = ctx.with_runner(r.as_ref());
                }
                let ok = verify(&qa, &answer, &ctx).map_err(|e| format!("verify level {level} round {round}: {e}"))?;
                (ok, false)
            }
        };
        Ok(Some(RoundRecord {
            stream_id: spec.stream_id.clone(),
            task,
            level,
            round,
            attempts,
            qa,
            generation,
            messages,
            correct,
            unparseable,
        }))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::backend::{CapabilityProfile, ScriptedBackend};
    use crate::engine::{Backends, NullSink};
    use crate::tasks::Generator;

    fn engine(profile: CapabilityProfile, q_total: u32) -> Engine {
        let backends = Backends::new()
            .with("m", Arc::new(ScriptedBackend::new("m", profile)))
            .with("i", Arc::new(ScriptedBackend::new("i", CapabilityProfile::default())));
        Engine {
            generator: Generator::default(),
            backends,
            runner: None,
            options: EngineOptions {
                q_total,
                ..EngineOptions::default()
            },
        }
    }

    fn spec(task: TaskId) -> StreamSpec {
        StreamSpec {
            stream_id: "E->I".into(),
            task,
            interviewee: AgentNode::interviewee("E", "m"),
            interviewer: AgentNode::interviewer("I", "i", task),
            supervisor: None,
        }
    }

    fn run(e: &Engine, s: &StreamSpec) -> StreamOutcome {
        let p = StreamProgress::new(s, &e.options);
        run_stream(e, s, &Digest::default(), p, &NullSink, &RunControl::new()).unwrap()
    }

    #[test]
    fn threshold_stream_stops_after_k() {
        let e = engine(CapabilityProfile::threshold(3), 4);
        let out = run(&e, &spec(TaskId::ArithOper));
        let c = out.progress.curve().unwrap();
        assert_eq!(c.status, StreamStatus::Terminated);
        assert_eq!(c.acc(), vec![1.0, 1.0, 1.0, 0.0]);
        assert_eq!(c.cell(), "3/3");
    }

    #[test]
    fn image_task_needs_capable_interviewee() {
        let e = engine(
            CapabilityProfile {
                images: false,
                ..CapabilityProfile::threshold(2)
            },
            2,
        );
        let out = run(&e, &spec(TaskId::Cu));
        assert!(matches!(out.progress.status, StreamStatus::Failed(_)));
        assert!(out.progress.levels.is_empty());
    }

    #[test]
    fn code_task_needs_runner() {
        let e = engine(CapabilityProfile::threshold(2), 2);
        let out = run(&e, &spec(TaskId::CodeGen));
        assert_eq!(
            out.progress.status,
            StreamStatus::Failed("no code runner configured".into())
        );
    }

    #[test]
    fn halt_and_replay() {
        let e = engine(CapabilityProfile::threshold(2), 3);
        let s = spec(TaskId::Btt);
        let full = run(&e, &s);
        let ctl = RunControl::halt_after_rounds(4);
        let p = StreamProgress::new(&s, &e.options);
        let part = run_stream(&e, &s, &Digest::default(), p, &NullSink, &ctl).unwrap();
        assert!(part.halted);
        assert_eq!(part.progress.rounds, 4);
        let rest = run_stream(&e, &s, &Digest::default(), part.progress, &NullSink, &RunControl::new()).unwrap();
        assert_eq!(rest.progress.curve().unwrap(), full.progress.curve().unwrap());
        assert_eq!(rest.progress.history, full.progress.history);
    }

    #[test]
    fn apply_rejects_out_of_order() {
        let e = engine(CapabilityProfile::threshold(2), 2);
        let s = spec(TaskId::SpsNode);
        let mut p = StreamProgress::new(&s, &e.options);
        let qa = e.generator.procedural(TaskId::SpsNode, 1, 2, 0).unwrap();
        let rec = RoundRecord {
            stream_id: s.stream_id.clone(),
            task: s.task,
            level: 1,
            round: 2,
            attempts: vec![],
            qa,
            generation: String::new(),
            messages: vec![],
            correct: true,
            unparseable: false,
        };
        assert!(p.apply(&rec, &e.options).is_err());
    }
}
