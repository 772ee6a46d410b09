//! Interviewee answer parsing, grading, and truth calibration.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::build::{calibrate_needles, code_padding, render_query};
use super::code::{assemble, unmet_requirements};
use super::qa::{Answer, QAPair, TaskInstance, Truth};
use super::{TaskError, TaskId, TaskParams};
use crate::oracles::{count_needles, format_sequence, Decimal};
use crate::protocol::tagged::{parse_tagged, FieldKind, TagError, TagSpec};
use crate::sandbox::{CodeRunner, ExecRequest, ExecStatus, SandboxError};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("no code runner configured")]
    SandboxUnavailable,
    #[error("sandbox: {0}")]
    Sandbox(#[from] SandboxError),
}

/// What grading needs besides the QA pair and the answer.
#[derive(Clone, Copy)]
pub struct VerifyContext<'a> {
    pub params: &'a TaskParams,
    pub runner: Option<&'a dyn CodeRunner>,
}

impl<'a> VerifyContext<'a> {
    pub fn new(params: &'a TaskParams) -> Self {
        Self { params, runner: None }
    }

    pub fn with_runner(mut self, runner: &'a dyn CodeRunner) -> Self {
        self.runner = Some(runner);
        self
    }
}

fn answer_schema(task: TaskId) -> &'static [TagSpec] {
    use FieldKind::*;
    const JUDGMENT: &[TagSpec] = &[TagSpec::xml("Judgment", YesNo)];
    const NUMBER: &[TagSpec] = &[TagSpec::labeled("Number", Integer)];
    const TEXT: &[TagSpec] = &[TagSpec::xml("text", Text)];
    const DECIMAL: &[TagSpec] = &[TagSpec::xml("answer", Decimal)];
    const SEQUENCE: &[TagSpec] = &[TagSpec::xml("answer", IntList)];
    const INTEGER: &[TagSpec] = &[TagSpec::xml("answer", Integer)];
    const GEN: &[TagSpec] = &[TagSpec::xml("code_function", Code), TagSpec::xml("code_main", Code)];
    const DEBUG: &[TagSpec] = &[TagSpec::xml("code_function", Code)];
    match task {
        TaskId::Iqp => JUDGMENT,
        TaskId::Cu | TaskId::Sp => NUMBER,
        TaskId::StuDisrupt | TaskId::StuMask => TEXT,
        TaskId::ArithScale | TaskId::ArithOper => DECIMAL,
        TaskId::Btt => SEQUENCE,
        TaskId::SpsNode | TaskId::SpsEdge => INTEGER,
        TaskId::CodeGen => GEN,
        TaskId::CodeDebug => DEBUG,
    }
}

/// Extracts the answer of `task` from an interviewee reply.
pub fn parse_answer(task: TaskId, body: &str) -> Result<Answer, TagError> {
    let f = parse_tagged(body, answer_schema(task))?;
    let text = |tag: &str| f.text(tag).unwrap_or_default().to_string();
    Ok(match task {
        TaskId::Iqp => Answer::Judgment(f.yes_no("Judgment").unwrap_or_default()),
        TaskId::Cu | TaskId::Sp => Answer::Count(f.integer("Number").unwrap_or_default()),
        TaskId::StuDisrupt | TaskId::StuMask => Answer::Text(text("text")),
        TaskId::ArithScale | TaskId::ArithOper => {
            Answer::Number(f.decimal("answer").cloned().unwrap_or_else(Decimal::zero))
        }
        TaskId::Btt => Answer::Sequence(f.int_list("answer").unwrap_or_default().to_vec()),
        TaskId::SpsNode | TaskId::SpsEdge => Answer::Count(f.integer("answer").unwrap_or_default()),
        TaskId::CodeGen => Answer::Code {
            function: text("code_function"),
            main: Some(text("code_main")),
        },
        TaskId::CodeDebug => Answer::Code {
            function: text("code_function"),
            main: None,
        },
    })
}

/// Fraction of original words recovered at the same position.
pub fn word_recovery(original: &str, answer: &str) -> f64 {
    let a: Vec<&str> = original.split_whitespace().collect();
    let b: Vec<&str> = answer.split_whitespace().collect();
    let denom = a.len().max(b.len());
    if denom == 0 {
        return 1.0;
    }
    let hits = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    hits as f64 / denom as f64
}

fn parse_ratio(exact: &str) -> Option<BigRational> {
    let (n, d) = exact.split_once('/')?;
    let d: num_bigint::BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n.parse().ok()?, d))
}

fn number_matches(answer: &Decimal, exact: &str, rendered: &str, precision: u32, tolerance: f64) -> bool {
    if tolerance > 0.0 {
        if let Some(truth) = parse_ratio(exact) {
            let diff = (answer.to_rational() - &truth).abs();
            let scale = truth.abs();
            return if scale.is_zero() {
                diff.is_zero()
            } else {
                (diff / scale).to_f64().is_some_and(|r| r <= tolerance)
            };
        }
    }
    match rendered.parse::<Decimal>() {
        Ok(r) => answer.round_to(precision).to_rational() == r.to_rational(),
        Err(_) => false,
    }
}

fn run_program(program: String, qa: &QAPair, ctx: &VerifyContext<'_>) -> Result<Option<String>, VerifyError> {
    let runner = ctx.runner.ok_or(VerifyError::SandboxUnavailable)?;
    let req = ExecRequest::new(program, ctx.params.code_timeout_ms, ctx.params.code_memory_mb);
    let res = runner.execute(&req)?;
    log::debug!(
        "{} level {} round {}: runner {:?}",
        qa.task,
        qa.level,
        qa.round,
        res.status
    );
    Ok((res.status == ExecStatus::Ok).then_some(res.stdout))
}

/// Grades `answer` against the truth of `qa`. An answer of the wrong
/// shape is simply wrong.
pub fn verify(qa: &QAPair, answer: &Answer, ctx: &VerifyContext<'_>) -> Result<bool, VerifyError> {
    let p = ctx.params;
    let ok = match (&qa.truth, answer) {
        (Truth::Judgment(t), Answer::Judgment(a)) => t == a,
        (Truth::Count(t), Answer::Count(a)) => u64::try_from(*a).is_ok_and(|a| a == *t),
        (Truth::Text(t), Answer::Text(a)) => word_recovery(t, a) >= p.stu_threshold,
        (
            Truth::Number {
                exact,
                rendered,
                precision,
            },
            Answer::Number(a),
        ) => number_matches(a, exact, rendered, *precision, p.relative_tolerance),
        (Truth::Sequence(t), Answer::Sequence(a)) => t == a,
        (Truth::Output(expected), Answer::Code { function, main }) => {
            let (main, requirements) = match &qa.instance {
                TaskInstance::CodeGen { requirements, .. } => {
                    (main.clone().unwrap_or_default(), requirements.as_slice())
                }
                TaskInstance::CodeDebug { main: m, .. } => (m.clone(), &[][..]),
                _ => return Ok(false),
            };
            if function.trim().is_empty() && main.trim().is_empty() {
                return Ok(false);
            }
            let program = assemble(function, &main);
            if !unmet_requirements(&program, requirements).is_empty() {
                return Ok(false);
            }
            match run_program(program, qa, ctx)? {
                Some(stdout) => stdout.trim() == expected.trim(),
                None => false,
            }
        }
        _ => false,
    };
    Ok(ok)
}

fn python_literal(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// Reply body a scripted interviewee sends, right or wrong on purpose.
pub fn render_answer(qa: &QAPair, correct: bool) -> String {
    match (&qa.truth, &qa.instance) {
        (Truth::Judgment(t), _) => {
            let j = if *t == correct { "yes" } else { "no" };
            format!("<Judgment>{j}</Judgment>\n<Analysis>compared both images</Analysis>")
        }
        (Truth::Count(t), _) => {
            let n = if correct { *t } else { t + 1 };
            match qa.task {
                TaskId::Cu | TaskId::Sp => format!("Number: <{n}>"),
                _ => format!("The shortest path is\n<answer> {n} </answer>"),
            }
        }
        (Truth::Text(t), TaskInstance::Stu { perturbed, .. }) => {
            let text = if correct {
                t.clone()
            } else if perturbed != t {
                perturbed.clone()
            } else {
                format!("{t} extra")
            };
            format!("<text>{text}</text>")
        }
        (Truth::Number { exact, rendered, .. }, _) => {
            let value = if correct {
                rendered.clone()
            } else {
                let r = parse_ratio(exact).unwrap_or_default() + BigRational::from_integer(1.into());
                crate::oracles::render_rational(&r, rendered.split_once('.').map_or(0, |(_, f)| f.len() as u32))
            };
            format!("<answer> {value} </answer>")
        }
        (Truth::Sequence(t), _) => {
            let mut seq = t.clone();
            if !correct {
                seq.reverse();
                if &seq == t {
                    seq.push(seq.last().copied().unwrap_or_default() + 1);
                }
            }
            format!("<answer> {} </answer>", format_sequence(&seq))
        }
        (Truth::Output(out), TaskInstance::CodeGen { reference, .. }) => {
            let (function, main) = match (correct, reference) {
                (true, Some(r)) => (code_padding(qa, &r.function), r.main.clone()),
                (true, None) => (
                    code_padding(qa, "def solve():\n    return None"),
                    format!("print({})", python_literal(out)),
                ),
                (false, _) => (
                    code_padding(qa, "def solve():\n    return None"),
                    format!("print({})", python_literal(&format!("{out} wrong"))),
                ),
            };
            format!("<code_function>\n{function}\n</code_function>\nif __name__ == '__main__':\n<code_main>\n{main}\n</code_main>")
        }
        (Truth::Output(_), TaskInstance::CodeDebug { function, masked, .. }) => {
            let code = if correct { function } else { masked };
            format!("<code_function>\n{code}\n</code_function>")
        }
        _ => String::new(),
    }
}

/// Whether the query of `qa` gives its own answer away.
pub fn reveals_truth(qa: &QAPair) -> bool {
    match (&qa.instance, &qa.truth) {
        (TaskInstance::Arith { question, .. }, Truth::Number { rendered, .. }) => {
            let bare = rendered.trim_end_matches('0').trim_end_matches('.');
            contains_number(question, rendered) || contains_number(question, bare)
        }
        (TaskInstance::Sp { string }, Truth::Count(n)) => contains_number(string, &n.to_string()),
        (TaskInstance::Btt { preorder, inorder }, Truth::Sequence(post)) => post == preorder || post == inorder,
        _ => false,
    }
}

/// `needle` appears in `hay` not flanked by further digits or a point.
fn contains_number(hay: &str, needle: &str) -> bool {
    if needle.is_empty() || needle == "-" {
        return false;
    }
    let numeric = |c: char| c.is_ascii_digit() || c == '.';
    hay.match_indices(needle).any(|(i, _)| {
        let before = hay[..i].chars().next_back();
        let after = hay[i + needle.len()..].chars().next();
        !before.is_some_and(numeric) && !after.is_some_and(numeric)
    })
}

/// A QA pair after its truth was checked against the interviewer's claim.
#[derive(Debug, Clone, PartialEq)]
pub struct Recalibration {
    pub qa: QAPair,
    pub disagreement: bool,
}

/// Recomputes the truth of `qa` with the oracle and flags disagreement
/// with what the interviewer claimed. For the needle task the string is
/// repaired to hold the requested number of needles instead.
pub fn recalibrate(qa: &QAPair, params: &TaskParams) -> Result<Recalibration, TaskError> {
    if !qa.task.has_oracle() {
        return Err(TaskError::OracleUnavailable(qa.task));
    }
    let mut out = qa.clone();
    let mut disagreement = false;
    if let TaskInstance::Sp { string } = &qa.instance {
        if count_needles(string, '-') != params.sp_needles {
            disagreement = true;
            let fixed = calibrate_needles(string, params.sp_needles, qa.seed);
            out.truth = Truth::Count(count_needles(&fixed, '-') as u64);
            out.instance = TaskInstance::Sp { string: fixed };
            out.query = render_query(&out.instance);
        }
    } else if let Some(claimed) = &qa.provenance.claimed {
        disagreement = claimed.render() != qa.truth.render();
    }
    out.provenance.calibrated = true;
    out.provenance.disagreement = disagreement;
    Ok(Recalibration { qa: out, disagreement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{Generator, Material};

    fn gen() -> Generator {
        Generator::new(TaskParams {
            image_side: 48,
            ..TaskParams::default()
        })
    }

    #[test]
    fn scripted_answers_grade_as_intended() {
        let g = gen();
        let params = g.params().clone();
        let ctx = VerifyContext::new(&params);
        for task in TaskId::ALL.into_iter().filter(|t| !t.needs_sandbox()) {
            for seed in 0..4 {
                let qa = g.procedural(task, 2, 1, seed).unwrap();
                for want in [true, false] {
                    let body = render_answer(&qa, want);
                    let a = parse_answer(task, &body).unwrap_or_else(|e| panic!("{task}: {e}: {body}"));
                    assert_eq!(verify(&qa, &a, &ctx).unwrap(), want, "{task} seed {seed}: {body}");
                }
            }
        }
    }

    #[test]
    fn worked_btt_answer() {
        let g = gen();
        let m = Material::Btt {
            preorder: vec![45, 3, 73, 34, 19, 88, 58, 94, 51, 15, 79, 9, 33, 91, 69, 76, 55],
            inorder: vec![73, 3, 19, 34, 88, 45, 94, 58, 15, 51, 79, 9, 91, 33, 69, 55, 76],
            postorder: vec![73, 19, 88, 34, 3, 94, 15, 91, 55, 76, 69, 33, 9, 79, 51, 58, 45],
        };
        let qa = g.build(TaskId::Btt, 3, 1, 0, m, "t", 0);
        // depth of this tree is not the level-3 depth; build from the oracle directly
        assert!(qa.is_err());
        let post = crate::oracles::postorder_from(
            &[45, 3, 73, 34, 19, 88, 58, 94, 51, 15, 79, 9, 33, 91, 69, 76, 55],
            &[73, 3, 19, 34, 88, 45, 94, 58, 15, 51, 79, 9, 91, 33, 69, 55, 76],
        )
        .unwrap();
        assert_eq!(
            post,
            vec![73, 19, 88, 34, 3, 94, 15, 91, 55, 76, 69, 33, 9, 79, 51, 58, 45]
        );
    }

    #[test]
    fn number_grading() {
        let d = |s: &str| s.parse::<Decimal>().unwrap();
        assert!(number_matches(&d("0.3333333"), "1/3", "0.333333", 6, 0.0));
        assert!(number_matches(&d("0.333333"), "1/3", "0.333333", 6, 0.0));
        assert!(!number_matches(&d("0.333334"), "1/3", "0.333333", 6, 0.0));
        assert!(number_matches(&d("3"), "3/1", "3.000000", 6, 0.0));
        assert!(number_matches(&d("0.334"), "1/3", "0.333333", 6, 0.01));
        assert!(!number_matches(&d("0.34"), "1/3", "0.333333", 6, 0.01));
    }

    #[test]
    fn stu_recovery() {
        assert_eq!(word_recovery("a b c d", "a b c d"), 1.0);
        assert_eq!(word_recovery("a b c d", "a x c d"), 0.75);
        assert_eq!(word_recovery("a b c d", "a b c"), 0.75);
    }

    #[test]
    fn calibration_flags_wrong_claims() {
        let g = gen();
        let params = g.params().clone();
        for task in [
            TaskId::ArithScale,
            TaskId::ArithOper,
            TaskId::Btt,
            TaskId::SpsNode,
            TaskId::Sp,
        ] {
            let m = g.procedural_material(task, 2, 11).unwrap();
            let qa = g.build(task, 2, 1, 11, m.clone(), "t", 0).unwrap();
            assert!(!recalibrate(&qa, &params).unwrap().disagreement, "{task}");
            let bad = g.miscalibrated(&m, 11).unwrap();
            let qa = g.build(task, 2, 1, 11, bad, "t", 0).unwrap();
            let r = recalibrate(&qa, &params).unwrap();
            assert!(r.disagreement, "{task}");
            assert!(r.qa.provenance.calibrated);
            if task == TaskId::Sp {
                assert_eq!(r.qa.truth, Truth::Count(4));
            } else {
                assert_eq!(r.qa.truth, qa.truth);
            }
        }
        let stu = g.procedural(TaskId::StuMask, 1, 1, 0).unwrap();
        assert!(matches!(
            recalibrate(&stu, &params),
            Err(TaskError::OracleUnavailable(_))
        ));
    }

    #[test]
    fn reveal_checks() {
        assert!(contains_number("What is 2 + 2 = 4?", "4"));
        assert!(!contains_number("What is 24 + 1?", "4"));
        assert!(!contains_number("1.45", "4"));
    }

    #[test]
    fn code_answers_shape() {
        let g = gen();
        let qa = g.procedural(TaskId::CodeGen, 3, 1, 5).unwrap();
        let body = render_answer(&qa, true);
        let Answer::Code { function, main } = parse_answer(TaskId::CodeGen, &body).unwrap() else {
            panic!()
        };
        let TaskInstance::CodeGen { requirements, .. } = &qa.instance else {
            panic!()
        };
        let program = assemble(&function, main.as_deref().unwrap());
        assert!(unmet_requirements(&program, requirements).is_empty(), "{program}");
        let params = g.params().clone();
        let ctx = VerifyContext::new(&params);
        let a = parse_answer(TaskId::CodeGen, &body).unwrap();
        assert!(matches!(verify(&qa, &a, &ctx), Err(VerifyError::SandboxUnavailable)));
    }
}
