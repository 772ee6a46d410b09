//! Interviewer replies: the raw material a QA pair is built from, in the
//! tagged formats the interviewer prompts ask for.

use super::code::CodeSolution;
use super::{TaskError, TaskId};
use crate::oracles::{format_sequence, Decimal};
use crate::protocol::tagged::{parse_tagged, FieldKind, TagSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Material {
    Iqp {
        prompt: String,
    },
    Cu {
        icon: i64,
        count: i64,
    },
    Stu {
        text: String,
    },
    Sp {
        string: String,
    },
    Arith {
        question: String,
        answer: Decimal,
    },
    Btt {
        preorder: Vec<i64>,
        inorder: Vec<i64>,
        postorder: Vec<i64>,
    },
    Sps {
        network: String,
        source: char,
        target: char,
        path: i64,
    },
    CodeGen {
        problem: String,
        input: String,
        output: String,
        /// Known solution, when the material came from the bundled bank.
        /// Never rendered.
        reference: Option<CodeSolution>,
    },
    CodeDebug {
        problem: String,
        input: String,
        output: String,
        function: String,
        main: String,
    },
}

impl Material {
    /// Copies the reference solution from `ideal` when both describe the
    /// same problem.
    pub fn adopt_reference(&mut self, ideal: &Material) {
        if let (
            Material::CodeGen {
                problem,
                input,
                output,
                reference,
            },
            Material::CodeGen {
                problem: p2,
                input: i2,
                output: o2,
                reference: r2,
            },
        ) = (self, ideal)
        {
            if problem == p2 && input == i2 && output == o2 {
                reference.clone_from(r2);
            }
        }
    }
}

/// The reply an ideal interviewer would send for `m`.
pub fn render_material(m: &Material) -> String {
    match m {
        Material::Iqp { prompt } => format!("<text>{prompt}</text>"),
        Material::Cu { icon, count } => format!("Number1: <{icon}>\nNumber2: <{count}>"),
        Material::Stu { text } => format!("<text>\n{text}\n</text>"),
        Material::Sp { string } => format!("String: <{string}>"),
        Material::Arith { question, answer } => {
            format!("<question> {question} </question>\n<answer> {answer} </answer>")
        }
        Material::Btt {
            preorder,
            inorder,
            postorder,
        } => format!(
            "<preorder> {} </preorder>\n<inorder> {} </inorder>\n<postorder> {} </postorder>",
            format_sequence(preorder),
            format_sequence(inorder),
            format_sequence(postorder)
        ),
        Material::Sps {
            network,
            source,
            target,
            path,
        } => format!(
            "<network>\n{network}\n</network>\n<Node ID1> {source} </Node ID1>\n<Node ID2> {target} </Node ID2>\n<path> {path} </path>"
        ),
        Material::CodeGen {
            problem,
            input,
            output,
            ..
        } => format!("<problem> {problem} </problem>\n<input> {input} </input>\n<output> {output} </output>"),
        Material::CodeDebug {
            problem,
            input,
            output,
            function,
            main,
        } => format!(
            "<problem> {problem} </problem>\n<input> {input} </input>\n<output> {output} </output>\n<code_function>\n{function}\n</code_function>\n<code_main>\n{main}\n</code_main>"
        ),
    }
}

/// A reply with one required field damaged, for exercising the supervisor.
pub fn render_malformed(m: &Material) -> String {
    let good = render_material(m);
    match m {
        Material::Cu { icon, .. } => format!("Number1: <{icon}>\nNumber2: many"),
        Material::Sp { string } => format!("String: {string}"),
        _ => match good.rfind("</") {
            Some(i) => {
                let end = good[i..].find('>').map(|j| i + j + 1).unwrap_or(good.len());
                format!("{}{}", &good[..i], &good[end..])
            }
            None => String::new(),
        },
    }
}

fn schema(task: TaskId) -> &'static [TagSpec] {
    use FieldKind::*;
    const IQP: &[TagSpec] = &[TagSpec::xml("text", Text)];
    const CU: &[TagSpec] = &[
        TagSpec::labeled("Number1", Integer),
        TagSpec::labeled("Number2", Integer),
    ];
    const STU: &[TagSpec] = &[TagSpec::xml("text", Text)];
    const SP: &[TagSpec] = &[TagSpec::labeled("String", Text)];
    const ARITH: &[TagSpec] = &[TagSpec::xml("question", Text), TagSpec::xml("answer", Decimal)];
    const BTT: &[TagSpec] = &[
        TagSpec::xml("preorder", IntList),
        TagSpec::xml("inorder", IntList),
        TagSpec::xml("postorder", IntList),
    ];
    const SPS: &[TagSpec] = &[
        TagSpec::xml("network", Code),
        TagSpec::xml("Node ID1", Letter),
        TagSpec::xml("Node ID2", Letter),
        TagSpec::xml("path", Integer),
    ];
    const GEN: &[TagSpec] = &[
        TagSpec::xml("problem", Text),
        TagSpec::xml("input", Text),
        TagSpec::xml("output", Text),
    ];
    const DEBUG: &[TagSpec] = &[
        TagSpec::xml("problem", Text),
        TagSpec::xml("input", Text),
        TagSpec::xml("output", Text),
        TagSpec::xml("code_function", Code),
        TagSpec::xml("code_main", Code),
    ];
    match task {
        TaskId::Iqp => IQP,
        TaskId::Cu => CU,
        TaskId::StuDisrupt | TaskId::StuMask => STU,
        TaskId::Sp => SP,
        TaskId::ArithScale | TaskId::ArithOper => ARITH,
        TaskId::Btt => BTT,
        TaskId::SpsNode | TaskId::SpsEdge => SPS,
        TaskId::CodeGen => GEN,
        TaskId::CodeDebug => DEBUG,
    }
}

/// Extracts the material of `task` from an interviewer reply.
pub fn parse_material(task: TaskId, body: &str) -> Result<Material, TaskError> {
    let f = parse_tagged(body, schema(task))?;
    let text = |tag: &str| f.text(tag).unwrap_or_default().to_string();
    let list = |tag: &str| f.int_list(tag).unwrap_or_default().to_vec();
    let m = match task {
        TaskId::Iqp => Material::Iqp { prompt: text("text") },
        TaskId::Cu => Material::Cu {
            icon: f.integer("Number1").unwrap_or_default(),
            count: f.integer("Number2").unwrap_or_default(),
        },
        TaskId::StuDisrupt | TaskId::StuMask => Material::Stu { text: text("text") },
        TaskId::Sp => Material::Sp { string: text("String") },
        TaskId::ArithScale | TaskId::ArithOper => Material::Arith {
            question: text("question"),
            answer: f.decimal("answer").cloned().unwrap_or_else(Decimal::zero),
        },
        TaskId::Btt => Material::Btt {
            preorder: list("preorder"),
            inorder: list("inorder"),
            postorder: list("postorder"),
        },
        TaskId::SpsNode | TaskId::SpsEdge => Material::Sps {
            network: text("network"),
            source: f.letter("Node ID1").unwrap_or('?'),
            target: f.letter("Node ID2").unwrap_or('?'),
            path: f.integer("path").unwrap_or_default(),
        },
        TaskId::CodeGen => Material::CodeGen {
            problem: text("problem"),
            input: text("input"),
            output: text("output"),
            reference: None,
        },
        TaskId::CodeDebug => Material::CodeDebug {
            problem: text("problem"),
            input: text("input"),
            output: text("output"),
            function: text("code_function"),
            main: text("code_main"),
        },
    };
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_arith_reply() {
        let m = parse_material(
            TaskId::ArithScale,
            "<question> What is 123.456 × 789.123? </question>\n<answer> 97406.100088 </answer>",
        )
        .unwrap();
        match m {
            Material::Arith { question, answer } => {
                assert_eq!(question, "What is 123.456 × 789.123?");
                assert_eq!(answer.to_string(), "97406.100088");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn worked_sps_reply() {
        let body = "<network>\nA: B(3), C(1), F(8)\nB: A(3), D(5), E(7)\nC: A(1), D(2)\nD: B(5), C(2), E(1)\nE: B(7), D(1), F(4)\nF: A(8), E(4)\n</network>\n<Node ID1> A </Node ID1> \n<Node ID2> E </Node ID2> \n<path> 4 </path> \n";
        let m = parse_material(TaskId::SpsNode, body).unwrap();
        assert_eq!(
            m,
            Material::Sps {
                network: "A: B(3), C(1), F(8)\nB: A(3), D(5), E(7)\nC: A(1), D(2)\nD: B(5), C(2), E(1)\nE: B(7), D(1), F(4)\nF: A(8), E(4)".into(),
                source: 'A',
                target: 'E',
                path: 4
            }
        );
    }

    #[test]
    fn render_parse_roundtrip_and_malformed() {
        let samples = [
            (
                TaskId::Iqp,
                Material::Iqp {
                    prompt: "a hill".into(),
                },
            ),
            (TaskId::Cu, Material::Cu { icon: 67, count: 11 }),
            (
                TaskId::StuMask,
                Material::Stu {
                    text: "Some text here.".into(),
                },
            ),
            (
                TaskId::Sp,
                Material::Sp {
                    string: "a-D#fG%kL-qW!zXe@R-tY&".into(),
                },
            ),
            (
                TaskId::Btt,
                Material::Btt {
                    preorder: vec![2, 1, 3],
                    inorder: vec![1, 2, 3],
                    postorder: vec![1, 3, 2],
                },
            ),
            (
                TaskId::CodeDebug,
                Material::CodeDebug {
                    problem: "p".into(),
                    input: "x = 1".into(),
                    output: "2".into(),
                    function: "def f(x):\n    return x + 1".into(),
                    main: "print(f(1))".into(),
                },
            ),
        ];
        for (task, m) in samples {
            let body = render_material(&m);
            assert_eq!(parse_material(task, &body).unwrap(), m, "{task}");
            assert!(
                matches!(parse_material(task, &render_malformed(&m)), Err(TaskError::Format(_))),
                "{task}: {}",
                render_malformed(&m)
            );
        }
    }
}
