use serde::{Deserialize, Serialize};

use super::code::{CodeSolution, Requirement};
use super::TaskId;
use crate::oracles::{format_sequence, Decimal};

/// What the interviewee is shown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<String>,
}

impl Query {
    pub fn hash(&self) -> String {
        crate::protocol::query_hash(&self.text, &self.images)
    }
}

/// Ground truth, typed per task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Truth {
    Judgment(bool),
    Count(u64),
    Text(String),
    /// `exact` is a reduced fraction `p/q`; `rendered` is the decimal
    /// at `precision` fractional digits.
    Number {
        exact: String,
        rendered: String,
        precision: u32,
    },
    Sequence(Vec<i64>),
    Output(String),
}

impl Truth {
    pub fn render(&self) -> String {
        match self {
            Truth::Judgment(true) => "yes".into(),
            Truth::Judgment(false) => "no".into(),
            Truth::Count(n) => n.to_string(),
            Truth::Text(s) | Truth::Output(s) => s.clone(),
            Truth::Number { rendered, .. } => rendered.clone(),
            Truth::Sequence(seq) => format_sequence(seq),
        }
    }
}

/// Everything needed to rebuild the query and recompute the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task_kind", rename_all = "snake_case")]
pub enum TaskInstance {
    Iqp {
        prompt: String,
        variance: u32,
        reference: String,
        distorted: String,
    },
    Cu {
        icon: u32,
        count: usize,
        grid: u32,
        icon_image: String,
        grid_image: String,
    },
    Stu {
        original: String,
        perturbed: String,
        ratio: f64,
    },
    Sp {
        string: String,
    },
    Arith {
        question: String,
        expression: String,
        precision: u32,
    },
    Btt {
        preorder: Vec<i64>,
        inorder: Vec<i64>,
    },
    Sps {
        network: String,
        source: char,
        target: char,
    },
    CodeGen {
        problem: String,
        input: String,
        output: String,
        requirements: Vec<Requirement>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<CodeSolution>,
    },
    CodeDebug {
        problem: String,
        input: String,
        output: String,
        function: String,
        masked: String,
        main: String,
        ratio: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `procedural` or the interviewer backend name.
    pub generator: String,
    /// Truth as claimed by the interviewer, before calibration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed: Option<Truth>,
    pub calibrated: bool,
    pub disagreement: bool,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub task: TaskId,
    pub level: u32,
    pub round: u32,
    pub seed: u64,
    pub query: Query,
    pub truth: Truth,
    pub instance: TaskInstance,
    pub provenance: Provenance,
}

impl QAPair {
    /// Short description used in "different from these last problems"
    /// prompts and run logs.
    pub fn summary(&self) -> String {
        match &self.instance {
            TaskInstance::Iqp { prompt, variance, .. } => format!("variance {variance}: {prompt}"),
            TaskInstance::Cu { icon, count, grid, .. } => format!("icon {} x{count} on {grid}x{grid}", icon + 1),
            TaskInstance::Stu { original, .. } => original.chars().take(80).collect(),
            TaskInstance::Sp { string } => string.clone(),
            TaskInstance::Arith { expression, .. } => expression.clone(),
            TaskInstance::Btt { preorder, .. } => format!("[{}]", format_sequence(preorder)),
            TaskInstance::Sps {
                source,
                target,
                network,
            } => {
                format!("{source}->{target} on {} nodes", network.lines().count())
            }
            TaskInstance::CodeGen { problem, .. } | TaskInstance::CodeDebug { problem, .. } => problem.clone(),
        }
    }
}

/// An interviewee reply after tag extraction.
#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    Judgment(bool),
    Count(i64),
    Text(String),
    Number(Decimal),
    Sequence(Vec<i64>),
    Code { function: String, main: Option<String> },
}
