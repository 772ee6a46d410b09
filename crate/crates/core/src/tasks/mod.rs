//! The twelve task families: difficulty schedules, QA generation from
//! interviewer material, answer verification, and truth recalibration.

mod build;
pub mod code;
pub mod corpus;
mod images;
mod material;
mod qa;
mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::Generator;
pub use code::{CodeSolution, Construct, Requirement};
pub use images::{DirImageStore, ImageStore, MemoryImageStore};
pub use material::{parse_material, render_malformed, render_material, Material};
pub use qa::{Answer, Provenance, QAPair, Query, TaskInstance, Truth};
pub use verify::{parse_answer, recalibrate, render_answer, verify, Recalibration, VerifyContext, VerifyError};

use crate::oracles::ImageError;
use crate::protocol::TagError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    #[serde(rename = "IQP")]
    Iqp,
    #[serde(rename = "CU")]
    Cu,
    #[serde(rename = "STU_disrupt")]
    StuDisrupt,
    #[serde(rename = "STU_mask")]
    StuMask,
    #[serde(rename = "SP")]
    Sp,
    #[serde(rename = "Arith_scale")]
    ArithScale,
    #[serde(rename = "Arith_oper")]
    ArithOper,
    #[serde(rename = "BTT")]
    Btt,
    #[serde(rename = "SPS_node")]
    SpsNode,
    #[serde(rename = "SPS_edge")]
    SpsEdge,
    #[serde(rename = "CodeGen")]
    CodeGen,
    #[serde(rename = "CodeDebug")]
    CodeDebug,
}

impl TaskId {
    pub const ALL: [TaskId; 12] = [
        TaskId::Iqp,
        TaskId::Cu,
        TaskId::StuDisrupt,
        TaskId::StuMask,
        TaskId::Sp,
        TaskId::ArithScale,
        TaskId::ArithOper,
        TaskId::Btt,
        TaskId::SpsNode,
        TaskId::SpsEdge,
        TaskId::CodeGen,
        TaskId::CodeDebug,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Iqp => "IQP",
            TaskId::Cu => "CU",
            TaskId::StuDisrupt => "STU_disrupt",
            TaskId::StuMask => "STU_mask",
            TaskId::Sp => "SP",
            TaskId::ArithScale => "Arith_scale",
            TaskId::ArithOper => "Arith_oper",
            TaskId::Btt => "BTT",
            TaskId::SpsNode => "SPS_node",
            TaskId::SpsEdge => "SPS_edge",
            TaskId::CodeGen => "CodeGen",
            TaskId::CodeDebug => "CodeDebug",
        }
    }

    /// Queries carry images; text-only backends cannot answer them.
    pub fn uses_images(self) -> bool {
        matches!(self, TaskId::Iqp | TaskId::Cu)
    }

    /// Grading runs the submitted program.
    pub fn needs_sandbox(self) -> bool {
        matches!(self, TaskId::CodeGen | TaskId::CodeDebug)
    }

    /// Truth can be recomputed by an exact oracle.
    pub fn has_oracle(self) -> bool {
        !matches!(
            self,
            TaskId::StuDisrupt | TaskId::StuMask | TaskId::CodeGen | TaskId::CodeDebug
        )
    }

    /// Name of the quantity the level controls.
    pub fn variable_name(self) -> &'static str {
        match self {
            TaskId::Iqp => "noise variance",
            TaskId::Cu => "grid size",
            TaskId::StuDisrupt => "disrupted word ratio",
            TaskId::StuMask => "masked character ratio",
            TaskId::Sp => "string length",
            TaskId::ArithScale => "operand digits",
            TaskId::ArithOper => "operator count",
            TaskId::Btt => "tree depth",
            TaskId::SpsNode => "node count",
            TaskId::SpsEdge => "average degree",
            TaskId::CodeGen => "control-flow requirements",
            TaskId::CodeDebug => "masked identifier ratio",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown task {0:?}")]
pub struct UnknownTask(pub String);

impl FromStr for TaskId {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownTask(s.to_string()))
    }
}

/// Slopes and knobs of the level-to-variable maps. Every field has a
/// default and can be overridden from config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskParams {
    pub stu_ratio_step: f64,
    pub sp_length_step: usize,
    pub sp_needles: usize,
    pub arith_scale_digit_offset: u32,
    pub arith_oper_digits: u32,
    pub sps_node_offset: usize,
    pub sps_node_degree: f64,
    pub sps_edge_offset: u32,
    pub sps_edge_min_nodes: usize,
    pub sps_max_weight: u32,
    pub debug_ratio_step: f64,
    pub image_side: u32,
    pub icon_count: u32,
    /// Share of noise-perception rounds that show two identical images.
    pub iqp_control_ratio: f64,
    pub precision: u32,
    pub relative_tolerance: f64,
    pub stu_threshold: f64,
    pub code_timeout_ms: u64,
    pub code_memory_mb: u64,
}

impl Default for TaskParams {
    fn default() -> Self {
        Self {
            stu_ratio_step: 0.1,
            sp_length_step: 20,
            sp_needles: 4,
            arith_scale_digit_offset: 2,
            arith_oper_digits: 5,
            sps_node_offset: 4,
            sps_node_degree: 3.0,
            sps_edge_offset: 2,
            sps_edge_min_nodes: 12,
            sps_max_weight: 9,
            debug_ratio_step: 0.05,
            image_side: crate::oracles::image::DEFAULT_IMAGE_SIDE,
            icon_count: 128,
            iqp_control_ratio: 0.5,
            precision: 6,
            relative_tolerance: 0.0,
            stu_threshold: 1.0,
            code_timeout_ms: 5000,
            code_memory_mb: 256,
        }
    }
}

impl TaskParams {
    pub fn stu_ratio(&self, level: u32) -> f64 {
        (self.stu_ratio_step * f64::from(level)).min(1.0)
    }

    pub fn debug_ratio(&self, level: u32) -> f64 {
        (self.debug_ratio_step * f64::from(level)).min(1.0)
    }

    pub fn sp_length(&self, level: u32) -> usize {
        self.sp_length_step * level as usize
    }

    pub fn grid(&self, level: u32) -> u32 {
        level + 2
    }

    pub fn arith_scale_digits(&self, level: u32) -> u32 {
        level + self.arith_scale_digit_offset
    }

    pub fn arith_operators(&self, level: u32) -> usize {
        level as usize + 1
    }

    pub fn btt_depth(&self, level: u32) -> u32 {
        level + 2
    }

    /// Inclusive node-count bounds for the traversal task.
    pub fn btt_nodes(&self, level: u32) -> (usize, usize) {
        (1usize << (level + 1), (1usize << (level + 2)) - 1)
    }

    /// (node count, average degree) of the shortest-path graph.
    pub fn sps_shape(&self, task: TaskId, level: u32) -> (usize, f64) {
        if task == TaskId::SpsEdge {
            let degree = f64::from(level + self.sps_edge_offset);
            let nodes = self
                .sps_edge_min_nodes
                .max(level as usize + self.sps_edge_offset as usize + 1);
            (nodes, degree)
        } else {
            let nodes = level as usize + self.sps_node_offset;
            (nodes, self.sps_node_degree.min(nodes as f64 - 1.0))
        }
    }

    /// The task variable at `level`, as plotted against ACC.
    pub fn variable(&self, task: TaskId, level: u32) -> f64 {
        match task {
            TaskId::Iqp => f64::from(level),
            TaskId::Cu => f64::from(self.grid(level)),
            TaskId::StuDisrupt | TaskId::StuMask => self.stu_ratio(level),
            TaskId::Sp => self.sp_length(level) as f64,
            TaskId::ArithScale => f64::from(self.arith_scale_digits(level)),
            TaskId::ArithOper => self.arith_operators(level) as f64,
            TaskId::Btt => f64::from(self.btt_depth(level)),
            TaskId::SpsNode => self.sps_shape(task, level).0 as f64,
            TaskId::SpsEdge => self.sps_shape(task, level).1,
            TaskId::CodeGen => f64::from(level),
            TaskId::CodeDebug => self.debug_ratio(level),
        }
    }

    /// Highest level this task can be generated at, if bounded.
    pub fn max_level(&self, task: TaskId) -> Option<u32> {
        let letters = crate::oracles::graph::NODE_LETTERS.len();
        match task {
            TaskId::Btt => Some(10),
            TaskId::SpsNode => Some((letters - self.sps_node_offset) as u32),
            TaskId::SpsEdge => Some((letters - 1 - self.sps_edge_offset as usize) as u32),
            TaskId::Cu => {
                // the non-target icons must all be distinct
                let mut level = 1;
                while self.icon_count as u64 >= u64::from(self.grid(level + 1)).pow(2) {
                    level += 1;
                }
                Some(level)
            }
            _ => None,
        }
    }
}

/// Level ladder of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultySchedule {
    pub task: TaskId,
    /// First level visited.
    pub initial: u32,
    /// Level increment between escalations.
    pub step: u32,
}

impl DifficultySchedule {
    pub fn new(task: TaskId, initial: u32) -> Self {
        Self { task, initial, step: 1 }
    }

    pub fn variable(&self, params: &TaskParams, level: u32) -> f64 {
        params.variable(self.task, level)
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> {
        let step = self.step.max(1);
        let initial = self.initial;
        (0..).map(move |i| initial + i * step)
    }
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("reply format: {0}")]
    Format(#[from] TagError),
    #[error("requirement not met: {0}")]
    Requirement(String),
    #[error("query reveals its answer")]
    RevealsTruth,
    #[error("generation rejected after {attempts} attempts: {last}")]
    GenerationRejected { attempts: u32, last: String },
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("{0} has no closed-form oracle")]
    OracleUnavailable(TaskId),
    #[error("{task} cannot be generated at level {level}")]
    LevelOutOfRange { task: TaskId, level: u32 },
    #[error("image: {0}")]
    Image(#[from] ImageError),
}

impl TaskError {
    /// Failures in interviewer material; the supervisor asks for a new one.
    pub fn is_material_fault(&self) -> bool {
        matches!(
            self,
            TaskError::Format(_) | TaskError::Requirement(_) | TaskError::RevealsTruth
        )
    }
}
