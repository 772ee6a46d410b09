//! Procedural material, interviewer prompts, and QA construction.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::code::{padding_helper, requirements_for, requirements_text};
use super::corpus;
use super::images::{ImageStore, MemoryImageStore};
use super::material::Material;
use super::qa::{Provenance, QAPair, Query, TaskInstance, Truth};
use super::verify::reveals_truth;
use super::{TaskError, TaskId, TaskParams};
use crate::oracles::graph::NODE_LETTERS;
use crate::oracles::text::{eligible_word_count, word_count};
use crate::oracles::{
    add_gaussian_noise, compose_icon_grid, count_needles, disrupt_words, eval_expression, exact_decimal_product,
    extract_expression, mask_code, mask_text, parse_expression, render_rational, shortest_path, ArithExpr, BinaryTree,
    Decimal, Icon, IconSet, ImageSource, Op, ProceduralScenes, WeightedGraph,
};
use crate::protocol::templates::{render_prompt, slots, TemplateId};

const SP_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ!@#%&";
const MIN_STU_WORDS: usize = 50;

pub(crate) fn material_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn transform_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn requirement(msg: impl Into<String>) -> TaskError {
    TaskError::Requirement(msg.into())
}

/// Builds QA pairs for every task family. Holds the task parameters, the
/// image store that receives rendered images, and the base-image source.
#[derive(Clone)]
pub struct Generator {
    params: TaskParams,
    images: Arc<dyn ImageStore>,
    source: Arc<dyn ImageSource>,
}

impl std::fmt::Debug for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Generator")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl Default for Generator {
    fn default() -> Self {
        Self::new(TaskParams::default())
    }
}

impl Generator {
    pub fn new(params: TaskParams) -> Self {
        Self {
            params,
            images: Arc::new(MemoryImageStore::new()),
            source: Arc::new(ProceduralScenes),
        }
    }

    pub fn with_image_store(mut self, images: Arc<dyn ImageStore>) -> Self {
        self.images = images;
        self
    }

    pub fn with_image_source(mut self, source: Arc<dyn ImageSource>) -> Self {
        self.source = source;
        self
    }

    pub fn params(&self) -> &TaskParams {
        &self.params
    }

    pub fn images(&self) -> &Arc<dyn ImageStore> {
        &self.images
    }

    fn check_level(&self, task: TaskId, level: u32) -> Result<(), TaskError> {
        let too_high = self.params.max_level(task).is_some_and(|m| level > m);
        if level == 0 || too_high {
            return Err(TaskError::LevelOutOfRange { task, level });
        }
        Ok(())
    }

    /// System and user prompts asking an interviewer for material.
    /// `recent` lists summaries of earlier problems to avoid.
    pub fn interviewer_prompts(&self, task: TaskId, level: u32, recent: &[String]) -> (String, String) {
        let p = &self.params;
        let former = if recent.is_empty() {
            "none".to_string()
        } else {
            recent.join("; ")
        };
        let keyword_rng = &mut material_rng(u64::from(level));
        let (system, user, s) = match task {
            TaskId::Iqp => (
                TemplateId::IqpInterviewerSystem,
                TemplateId::IqpInterviewerUser,
                slots(&[(
                    "keyword",
                    *corpus::IMAGE_KEYWORDS.choose(keyword_rng).expect("non-empty"),
                )]),
            ),
            TaskId::Cu => (
                TemplateId::CuInterviewerSystem,
                TemplateId::CuInterviewerUser,
                slots(&[("icon_max", p.icon_count), ("cells", p.grid(level).pow(2))]),
            ),
            TaskId::StuDisrupt | TaskId::StuMask => (
                TemplateId::StuInterviewerSystem,
                TemplateId::StuInterviewerUser,
                slots::<&str>(&[]),
            ),
            TaskId::Sp => (
                TemplateId::SpInterviewerSystem,
                TemplateId::SpInterviewerUser,
                slots(&[("length", p.sp_length(level))]),
            ),
            TaskId::ArithScale => (
                TemplateId::ArithInterviewerSystem,
                TemplateId::ArithScaleInterviewerUser,
                slots(&[("digits", p.arith_scale_digits(level))]),
            ),
            TaskId::ArithOper => (
                TemplateId::ArithInterviewerSystem,
                TemplateId::ArithOperInterviewerUser,
                slots(&[
                    ("digits", p.arith_oper_digits as usize),
                    ("operators", p.arith_operators(level)),
                ]),
            ),
            TaskId::Btt => {
                let (lo, hi) = p.btt_nodes(level);
                let mut s = slots(&[
                    ("depth", p.btt_depth(level) as usize),
                    ("min_nodes", lo),
                    ("max_nodes", hi),
                ]);
                s.insert("last_problems", former.clone());
                (TemplateId::BttInterviewerSystem, TemplateId::BttInterviewerUser, s)
            }
            TaskId::SpsNode | TaskId::SpsEdge => {
                let (nodes, degree) = p.sps_shape(task, level);
                (
                    TemplateId::SpsInterviewerSystem,
                    TemplateId::SpsInterviewerUser,
                    slots(&[("nodes", nodes.to_string()), ("degree", format!("{degree}"))]),
                )
            }
            TaskId::CodeGen => (
                TemplateId::CodeInterviewerSystem,
                TemplateId::CodeGenInterviewerUser,
                slots(&[("former_problems", former.clone())]),
            ),
            TaskId::CodeDebug => (
                TemplateId::CodeInterviewerSystem,
                TemplateId::CodeDebugInterviewerUser,
                slots(&[("former_problems", former.clone())]),
            ),
        };
        (
            render_prompt(system, &s).expect("system prompts have no slots"),
            render_prompt(user, &s).expect("all interviewer slots supplied"),
        )
    }

    /// Material an ideal interviewer would produce, drawn from `seed`.
    pub fn procedural_material(&self, task: TaskId, level: u32, seed: u64) -> Result<Material, TaskError> {
        self.check_level(task, level)?;
        let p = &self.params;
        let rng = &mut material_rng(seed);
        let m = match task {
            TaskId::Iqp => {
                let keyword = corpus::IMAGE_KEYWORDS.choose(rng).expect("non-empty");
                Material::Iqp {
                    prompt: corpus::image_prompt(keyword, rng),
                }
            }
            TaskId::Cu => {
                let cells = i64::from(p.grid(level).pow(2));
                Material::Cu {
                    icon: rng.gen_range(1..=i64::from(p.icon_count)),
                    count: rng.gen_range(1..=cells),
                }
            }
            TaskId::StuDisrupt | TaskId::StuMask => Material::Stu {
                text: corpus::passage(90, rng),
            },
            TaskId::Sp => Material::Sp {
                string: needle_string(p.sp_length(level), p.sp_needles, rng),
            },
            TaskId::ArithScale => {
                let digits = p.arith_scale_digits(level);
                let a = random_decimal(digits, rng);
                let mut b = random_decimal(digits, rng);
                while b == a {
                    b = random_decimal(digits, rng);
                }
                Material::Arith {
                    question: format!("What is {a} × {b}?"),
                    answer: exact_decimal_product(&a, &b),
                }
            }
            TaskId::ArithOper => loop {
                let expr = random_expression(p.arith_operators(level), p.arith_oper_digits, rng);
                let Ok(value) = eval_expression(&expr) else { continue };
                let rendered = render_rational(&value, p.precision);
                let question = expr.to_string();
                if question.contains(&rendered) {
                    continue;
                }
                break Material::Arith {
                    question,
                    answer: rendered.parse().expect("rendered decimal parses"),
                };
            },
            TaskId::Btt => loop {
                let (lo, hi) = p.btt_nodes(level);
                let nodes = rng.gen_range(lo..=hi);
                let id_max = (nodes as i64 * 4).max(99);
                let tree = BinaryTree::random(p.btt_depth(level), nodes, id_max, rng)
                    .map_err(|e| requirement(e.to_string()))?;
                let (pre, ino, post) = (tree.preorder(), tree.inorder(), tree.postorder());
                if post == pre || post == ino {
                    continue;
                }
                break Material::Btt {
                    preorder: pre,
                    inorder: ino,
                    postorder: post,
                };
            },
            TaskId::SpsNode | TaskId::SpsEdge => {
                let (nodes, degree) = p.sps_shape(task, level);
                let max_edges = nodes * (nodes - 1) / 2;
                let edges = ((nodes as f64 * degree / 2.0).round() as usize).clamp(nodes - 1, max_edges);
                let g = WeightedGraph::random_connected(nodes, edges, p.sps_max_weight, rng)
                    .map_err(|e| requirement(e.to_string()))?;
                let letters: Vec<char> = NODE_LETTERS.chars().take(nodes).collect();
                let pair: Vec<char> = letters.choose_multiple(rng, 2).copied().collect();
                let path = shortest_path(&g, pair[0], pair[1]).map_err(|e| requirement(e.to_string()))?;
                Material::Sps {
                    network: g.to_adjacency_text(),
                    source: pair[0],
                    target: pair[1],
                    path: path as i64,
                }
            }
            TaskId::CodeGen => {
                let problem = corpus::code_problem(rng.gen_range(0..corpus::code_problem_count()), rng);
                Material::CodeGen {
                    problem: problem.problem,
                    input: problem.input,
                    output: problem.output,
                    reference: Some(problem.solution),
                }
            }
            TaskId::CodeDebug => {
                let problem = corpus::code_problem(rng.gen_range(0..corpus::code_problem_count()), rng);
                Material::CodeDebug {
                    problem: problem.problem,
                    input: problem.input,
                    output: problem.output,
                    function: problem.solution.function.trim_end().to_string(),
                    main: problem.solution.main.trim_end().to_string(),
                }
            }
        };
        Ok(m)
    }

    /// `m` with a wrong claimed truth, as a careless interviewer would
    /// send it. `None` for tasks whose material carries no claim.
    pub fn miscalibrated(&self, m: &Material, seed: u64) -> Option<Material> {
        let rng = &mut material_rng(seed ^ 0x6d69_7363);
        match m {
            Material::Arith { question, answer } => {
                let bump = Decimal::new(num_bigint::BigInt::from(rng.gen_range(1..=999)), answer.scale().max(1));
                let wrong = format!("{}", answer.to_rational() + bump.to_rational());
                let wrong = render_rational(&wrong.parse().expect("rational"), answer.scale().max(1));
                Some(Material::Arith {
                    question: question.clone(),
                    answer: wrong.parse().expect("rendered decimal parses"),
                })
            }
            Material::Btt {
                preorder,
                inorder,
                postorder,
            } => {
                let mut wrong = postorder.clone();
                wrong.swap(0, postorder.len() - 1);
                Some(Material::Btt {
                    preorder: preorder.clone(),
                    inorder: inorder.clone(),
                    postorder: wrong,
                })
            }
            Material::Sps {
                network,
                source,
                target,
                path,
            } => Some(Material::Sps {
                network: network.clone(),
                source: *source,
                target: *target,
                path: path + rng.gen_range(1..=3),
            }),
            Material::Sp { string } => {
                // drop one needle; calibration puts it back
                let at = string.find('-')?;
                let mut s = string.clone();
                s.remove(at);
                let filler = SP_ALPHABET[rng.gen_range(0..SP_ALPHABET.len())] as char;
                s.insert(at, filler);
                Some(Material::Sp { string: s })
            }
            _ => None,
        }
    }

    /// Turns interviewer material into a QA pair: checks the level
    /// requirements, applies the task's transform, renders the query, and
    /// computes the oracle truth. The interviewer's claim is kept in the
    /// provenance for calibration.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        &self,
        task: TaskId,
        level: u32,
        round: u32,
        seed: u64,
        material: Material,
        generator: &str,
        attempt: u32,
    ) -> Result<QAPair, TaskError> {
        self.check_level(task, level)?;
        let p = &self.params;
        let rng = &mut transform_rng(seed);
        let mut claimed = None;
        let (instance, truth) = match (task, material) {
            (TaskId::Iqp, Material::Iqp { prompt }) => {
                if prompt.trim().is_empty() {
                    return Err(requirement("empty image prompt"));
                }
                let control = rng.gen_bool(p.iqp_control_ratio.clamp(0.0, 1.0));
                let variance = if control { 0 } else { level };
                let base = self.source.render(&prompt, seed, p.image_side)?;
                let distorted = add_gaussian_noise(&base, f64::from(variance), rng)?;
                let instance = TaskInstance::Iqp {
                    prompt,
                    variance,
                    reference: self.images.put(&base)?,
                    distorted: self.images.put(&distorted)?,
                };
                (instance, Truth::Judgment(variance > 0))
            }
            (TaskId::Cu, Material::Cu { icon, count }) => {
                let grid = p.grid(level);
                let cells = i64::from(grid * grid);
                if !(1..=i64::from(p.icon_count)).contains(&icon) {
                    return Err(requirement(format!("icon id {icon} outside 1..={}", p.icon_count)));
                }
                if !(1..=cells).contains(&count) {
                    return Err(requirement(format!("count {count} outside 1..={cells}")));
                }
                let target = Icon(icon as u32 - 1);
                let cell_side = (p.image_side / grid).max(8);
                let composed = compose_icon_grid(
                    &IconSet::new(p.icon_count),
                    target,
                    count as usize,
                    grid,
                    cell_side,
                    rng,
                )?;
                claimed = Some(Truth::Count(count as u64));
                let instance = TaskInstance::Cu {
                    icon: target.0,
                    count: composed.count,
                    grid,
                    icon_image: self.images.put(&target.render(cell_side))?,
                    grid_image: self.images.put(&composed.image)?,
                };
                (instance, Truth::Count(composed.count as u64))
            }
            (TaskId::StuDisrupt | TaskId::StuMask, Material::Stu { text }) => {
                let text = text.trim().to_string();
                if word_count(&text) < MIN_STU_WORDS {
                    return Err(requirement(format!("passage has fewer than {MIN_STU_WORDS} words")));
                }
                let ratio = p.stu_ratio(level);
                let perturbed = if task == TaskId::StuDisrupt {
                    if eligible_word_count(&text) == 0 {
                        return Err(requirement("passage has no scramblable words"));
                    }
                    disrupt_words(&text, ratio, rng)
                } else {
                    mask_text(&text, ratio, rng)
                }
                .map_err(|e| requirement(e.to_string()))?;
                let instance = TaskInstance::Stu {
                    original: text.clone(),
                    perturbed,
                    ratio,
                };
                (instance, Truth::Text(text))
            }
            (TaskId::Sp, Material::Sp { string }) => {
                let target = p.sp_length(level);
                let len = string.chars().count();
                if len.abs_diff(target) > target / 10 {
                    return Err(requirement(format!("string has {len} characters, expected {target}")));
                }
                claimed = Some(Truth::Count(p.sp_needles as u64));
                let count = count_needles(&string, '-') as u64;
                (TaskInstance::Sp { string }, Truth::Count(count))
            }
            (TaskId::ArithScale | TaskId::ArithOper, Material::Arith { question, answer }) => {
                let span =
                    extract_expression(&question).ok_or_else(|| requirement("no arithmetic expression in question"))?;
                let expr = parse_expression(span).map_err(|e| requirement(e.to_string()))?;
                let value = eval_expression(&expr).map_err(|e| requirement(e.to_string()))?;
                let precision = if task == TaskId::ArithScale {
                    check_scale_problem(&expr, p.arith_scale_digits(level))?
                } else {
                    let ops = expr.operator_count();
                    if ops != p.arith_operators(level) {
                        return Err(requirement(format!(
                            "{ops} operators, expected {}",
                            p.arith_operators(level)
                        )));
                    }
                    p.precision
                };
                claimed = Some(number_truth(&answer.to_rational(), precision));
                let instance = TaskInstance::Arith {
                    question: question.trim().to_string(),
                    expression: expr.to_string(),
                    precision,
                };
                (instance, number_truth(&value, precision))
            }
            (
                TaskId::Btt,
                Material::Btt {
                    preorder,
                    inorder,
                    postorder,
                },
            ) => {
                let tree = BinaryTree::from_traversals(&preorder, &inorder).map_err(|e| requirement(e.to_string()))?;
                let depth = p.btt_depth(level);
                if tree.depth() != depth {
                    return Err(requirement(format!(
                        "tree has {} levels, expected {depth}",
                        tree.depth()
                    )));
                }
                let (lo, hi) = p.btt_nodes(level);
                if !(lo..=hi).contains(&tree.len()) {
                    return Err(requirement(format!(
                        "tree has {} nodes, expected {lo}..={hi}",
                        tree.len()
                    )));
                }
                claimed = Some(Truth::Sequence(postorder));
                let post = tree.postorder();
                (TaskInstance::Btt { preorder, inorder }, Truth::Sequence(post))
            }
            (
                TaskId::SpsNode | TaskId::SpsEdge,
                Material::Sps {
                    network,
                    source,
                    target,
                    path,
                },
            ) => {
                let g = WeightedGraph::parse_adjacency(&network).map_err(|e| requirement(e.to_string()))?;
                let (nodes, degree) = p.sps_shape(task, level);
                if task == TaskId::SpsNode && g.node_count() != nodes {
                    return Err(requirement(format!(
                        "graph has {} nodes, expected {nodes}",
                        g.node_count()
                    )));
                }
                if task == TaskId::SpsEdge && (g.average_degree() - degree).abs() > 0.5 {
                    return Err(requirement(format!(
                        "average degree {:.2}, expected {degree}",
                        g.average_degree()
                    )));
                }
                if source == target {
                    return Err(requirement("source and target coincide"));
                }
                let cost = shortest_path(&g, source, target).map_err(|e| requirement(e.to_string()))?;
                claimed = Some(Truth::Count(path.max(0) as u64));
                let instance = TaskInstance::Sps {
                    network: g.to_adjacency_text(),
                    source,
                    target,
                };
                (instance, Truth::Count(cost))
            }
            (
                TaskId::CodeGen,
                Material::CodeGen {
                    problem,
                    input,
                    output,
                    reference,
                },
            ) => {
                if [&problem, &input, &output].iter().any(|s| s.trim().is_empty()) {
                    return Err(requirement("empty problem, input, or output"));
                }
                let requirements = requirements_for(level as usize, rng);
                let instance = TaskInstance::CodeGen {
                    problem,
                    input,
                    output: output.clone(),
                    requirements,
                    reference,
                };
                (instance, Truth::Output(output.trim().to_string()))
            }
            (
                TaskId::CodeDebug,
                Material::CodeDebug {
                    problem,
                    input,
                    output,
                    function,
                    main,
                },
            ) => {
                if [&problem, &input, &output, &function, &main]
                    .iter()
                    .any(|s| s.trim().is_empty())
                {
                    return Err(requirement("empty problem, input, output, or code"));
                }
                let ratio = p.debug_ratio(level);
                let masked = mask_code(&function, ratio, rng).map_err(|e| requirement(e.to_string()))?;
                let instance = TaskInstance::CodeDebug {
                    problem,
                    input,
                    output: output.clone(),
                    function,
                    masked,
                    main,
                    ratio,
                };
                (instance, Truth::Output(output.trim().to_string()))
            }
            (task, m) => return Err(requirement(format!("{task} cannot use {m:?}"))),
        };
        let qa = QAPair {
            task,
            level,
            round,
            seed,
            query: render_query(&instance),
            truth,
            instance,
            provenance: Provenance {
                generator: generator.to_string(),
                claimed,
                calibrated: false,
                disagreement: false,
                attempt,
            },
        };
        if reveals_truth(&qa) {
            return Err(TaskError::RevealsTruth);
        }
        Ok(qa)
    }

    /// Procedural material built straight into a QA pair, without
    /// calibration.
    pub fn procedural(&self, task: TaskId, level: u32, round: u32, seed: u64) -> Result<QAPair, TaskError> {
        let m = self.procedural_material(task, level, seed)?;
        self.build(task, level, round, seed, m, "procedural", 0)
    }
}

/// Oracle truth for a rational at `precision` fractional digits.
pub(crate) fn number_truth(value: &num_rational::BigRational, precision: u32) -> Truth {
    Truth::Number {
        exact: format!("{}/{}", value.numer(), value.denom()),
        rendered: render_rational(value, precision),
        precision,
    }
}

fn check_scale_problem(expr: &ArithExpr, digits: u32) -> Result<u32, TaskError> {
    let mut inner = expr;
    while let ArithExpr::Group(e) = inner {
        inner = e;
    }
    let (lhs, rhs) = match inner {
        ArithExpr::Binary { op: Op::Mul, lhs, rhs } => (lhs, rhs),
        _ => return Err(requirement("expected a product of two numbers")),
    };
    let mut scale = 0;
    for side in [lhs.as_ref(), rhs.as_ref()] {
        let ArithExpr::Number(text) = side else {
            return Err(requirement("operands must be plain numbers"));
        };
        let d: Decimal = text.parse().map_err(|_| requirement(format!("bad operand {text}")))?;
        if d.significant_digits() != digits as usize {
            return Err(requirement(format!("operand {text} does not have {digits} digits")));
        }
        scale += d.scale();
    }
    Ok(scale)
}

/// Interviewee prompt for an instance.
pub(crate) fn render_query(instance: &TaskInstance) -> Query {
    let (id, s, images) = match instance {
        TaskInstance::Iqp {
            reference, distorted, ..
        } => (
            TemplateId::IqpInterviewee,
            slots::<&str>(&[]),
            vec![reference.clone(), distorted.clone()],
        ),
        TaskInstance::Cu {
            icon_image, grid_image, ..
        } => (
            TemplateId::CuInterviewee,
            slots::<&str>(&[]),
            vec![icon_image.clone(), grid_image.clone()],
        ),
        TaskInstance::Stu { perturbed, ratio, .. } => {
            let _ = ratio;
            let id = if perturbed.contains('*') && !perturbed.is_empty() {
                TemplateId::StuMaskInterviewee
            } else {
                TemplateId::StuDisruptInterviewee
            };
            (id, slots(&[("text", perturbed)]), vec![])
        }
        TaskInstance::Sp { string } => (TemplateId::SpInterviewee, slots(&[("text", string)]), vec![]),
        TaskInstance::Arith { question, .. } => {
            (TemplateId::ArithInterviewee, slots(&[("question", question)]), vec![])
        }
        TaskInstance::Btt { preorder, inorder } => (
            TemplateId::BttInterviewee,
            slots(&[
                ("preorder", crate::oracles::format_sequence(preorder)),
                ("inorder", crate::oracles::format_sequence(inorder)),
            ]),
            vec![],
        ),
        TaskInstance::Sps {
            network,
            source,
            target,
        } => (
            TemplateId::SpsInterviewee,
            slots(&[
                ("source", source.to_string()),
                ("target", target.to_string()),
                ("network", network.clone()),
            ]),
            vec![],
        ),
        TaskInstance::CodeGen {
            problem,
            input,
            output,
            requirements,
            ..
        } => (
            TemplateId::CodeGenInterviewee,
            slots(&[
                ("problem", problem.clone()),
                ("input", input.clone()),
                ("output", output.clone()),
                ("requirements", requirements_text(requirements)),
            ]),
            vec![],
        ),
        TaskInstance::CodeDebug {
            problem,
            input,
            output,
            masked,
            ..
        } => (
            TemplateId::CodeDebugInterviewee,
            slots(&[
                ("problem", problem.clone()),
                ("input", input.clone()),
                ("output", output.clone()),
                ("masked_code", masked.clone()),
            ]),
            vec![],
        ),
    };
    Query {
        text: render_prompt(id, &s).expect("interviewee slots supplied"),
        images,
    }
}

/// Random string of `len` characters with exactly `needles` dashes.
fn needle_string<R: Rng + ?Sized>(len: usize, needles: usize, rng: &mut R) -> String {
    let base = len.saturating_sub(needles).max(1);
    let mut chars: Vec<char> = (0..base)
        .map(|_| SP_ALPHABET[rng.gen_range(0..SP_ALPHABET.len())] as char)
        .collect();
    for _ in 0..needles {
        let at = rng.gen_range(0..=chars.len());
        chars.insert(at, '-');
    }
    chars.into_iter().collect()
}

/// Decimal with exactly `digits` significant digits and at least one
/// digit on each side of the point.
fn random_decimal<R: Rng + ?Sized>(digits: u32, rng: &mut R) -> Decimal {
    let digits = digits.max(2) as usize;
    let mut s: Vec<u8> = (0..digits).map(|_| rng.gen_range(b'0'..=b'9')).collect();
    s[0] = rng.gen_range(b'1'..=b'9');
    s[digits - 1] = rng.gen_range(b'1'..=b'9');
    let point = rng.gen_range(1..digits);
    let text = format!(
        "{}.{}",
        std::str::from_utf8(&s[..point]).expect("ascii"),
        std::str::from_utf8(&s[point..]).expect("ascii")
    );
    text.parse().expect("well-formed decimal")
}

fn random_integer<R: Rng + ?Sized>(digits: u32, rng: &mut R) -> String {
    let digits = digits.max(1);
    let lo = 10u64.pow(digits - 1);
    let hi = 10u64.pow(digits) - 1;
    rng.gen_range(lo.max(1)..=hi).to_string()
}

/// Random expression tree with exactly `ops` binary operators.
pub(crate) fn random_expression<R: Rng + ?Sized>(ops: usize, digits: u32, rng: &mut R) -> ArithExpr {
    if ops == 0 {
        return ArithExpr::number(random_integer(digits, rng));
    }
    let left = rng.gen_range(0..ops);
    let op = [Op::Add, Op::Sub, Op::Mul, Op::Div][rng.gen_range(0..4)];
    let lhs = random_expression(left, digits, rng);
    let rhs = random_expression(ops - 1 - left, digits, rng);
    ArithExpr::binary(op, lhs, rhs)
}

/// Inserts or removes dashes so `string` holds exactly `needles` of them,
/// at positions drawn from `seed`.
pub(crate) fn calibrate_needles(string: &str, needles: usize, seed: u64) -> String {
    let rng = &mut transform_rng(seed ^ 0x6e65_6564);
    let mut chars: Vec<char> = string.chars().collect();
    while count_needles(&chars.iter().collect::<String>(), '-') > needles {
        let dashes: Vec<usize> = (0..chars.len()).filter(|&i| chars[i] == '-').collect();
        let at = *dashes.choose(rng).expect("has dashes");
        chars[at] = SP_ALPHABET[rng.gen_range(0..SP_ALPHABET.len())] as char;
    }
    while chars.iter().filter(|&&c| c == '-').count() < needles {
        let others: Vec<usize> = (0..chars.len()).filter(|&i| chars[i] != '-').collect();
        match others.choose(rng) {
            Some(&at) => chars[at] = '-',
            None => chars.push('-'),
        }
    }
    chars.into_iter().collect()
}

pub(crate) fn code_padding(qa: &QAPair, function: &str) -> String {
    match &qa.instance {
        TaskInstance::CodeGen { requirements, .. } if !requirements.is_empty() => {
            format!(
                "{}\n\n\n{}",
                function.trim_end(),
                padding_helper(requirements, function)
            )
        }
        _ => function.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::text::count_needles;

    fn small() -> Generator {
        Generator::new(TaskParams {
            image_side: 48,
            ..TaskParams::default()
        })
    }

    #[test]
    fn btt_level_one_shape() {
        let g = small();
        for seed in 0..20 {
            let qa = g.procedural(TaskId::Btt, 1, 1, seed).unwrap();
            let TaskInstance::Btt { preorder, inorder } = &qa.instance else {
                panic!()
            };
            assert!((4..=7).contains(&preorder.len()));
            let tree = BinaryTree::from_traversals(preorder, inorder).unwrap();
            assert_eq!(tree.depth(), 3);
            assert!(qa.query.text.contains("<preorder> "));
        }
    }

    #[test]
    fn sp_has_four_needles() {
        let g = small();
        for level in 1..5 {
            let qa = g.procedural(TaskId::Sp, level, 1, u64::from(level)).unwrap();
            let TaskInstance::Sp { string } = &qa.instance else {
                panic!()
            };
            assert_eq!(count_needles(string, '-'), 4);
            assert_eq!(string.chars().count(), 20 * level as usize);
            assert_eq!(qa.truth, Truth::Count(4));
        }
    }

    #[test]
    fn arith_oper_level_one_has_two_operators() {
        let g = small();
        for seed in 0..20 {
            let qa = g.procedural(TaskId::ArithOper, 1, 1, seed).unwrap();
            let TaskInstance::Arith { expression, .. } = &qa.instance else {
                panic!()
            };
            assert_eq!(parse_expression(expression).unwrap().operator_count(), 2);
        }
    }

    #[test]
    fn worked_scale_problem_builds() {
        let g = small();
        let m = Material::Arith {
            question: "What is 123.456 × 789.123?".into(),
            answer: "97406.100088".parse().unwrap(),
        };
        let qa = g.build(TaskId::ArithScale, 4, 1, 0, m, "test", 0).unwrap();
        assert_eq!(qa.truth.render(), "97421.969088");
        assert_eq!(qa.provenance.claimed.as_ref().unwrap().render(), "97406.100088");
        assert!(qa.query.text.starts_with("What is 123.456 × 789.123?\nPlease solve"));
    }

    #[test]
    fn requirement_violations() {
        let g = small();
        let wrong_ops = Material::Arith {
            question: "1 + 2".into(),
            answer: "3".parse().unwrap(),
        };
        assert!(matches!(
            g.build(TaskId::ArithOper, 1, 1, 0, wrong_ops, "t", 0),
            Err(TaskError::Requirement(_))
        ));
        let shallow = Material::Btt {
            preorder: vec![2, 1, 3],
            inorder: vec![1, 2, 3],
            postorder: vec![1, 3, 2],
        };
        assert!(matches!(
            g.build(TaskId::Btt, 1, 1, 0, shallow, "t", 0),
            Err(TaskError::Requirement(_))
        ));
        assert!(matches!(
            g.build(TaskId::Cu, 1, 1, 0, Material::Cu { icon: 5, count: 10 }, "t", 0),
            Err(TaskError::Requirement(_))
        ));
        assert!(matches!(
            g.build(TaskId::Sp, 1, 1, 0, Material::Stu { text: "x".into() }, "t", 0),
            Err(TaskError::Requirement(_))
        ));
    }

    #[test]
    fn images_go_to_the_store() {
        let g = small();
        let qa = g.procedural(TaskId::Cu, 1, 1, 4).unwrap();
        assert_eq!(qa.query.images.len(), 2);
        let grid = g.images().get(&qa.query.images[1]).unwrap();
        assert_eq!(grid.width(), 3 * 16);
        let qa = g.procedural(TaskId::Iqp, 2, 1, 4).unwrap();
        let TaskInstance::Iqp { variance, .. } = qa.instance else {
            panic!()
        };
        assert!(variance == 0 || variance == 2);
        assert_eq!(qa.truth, Truth::Judgment(variance > 0));
    }

    #[test]
    fn needle_calibration() {
        assert_eq!(count_needles(&calibrate_needles("abc-def", 4, 1), '-'), 4);
        assert_eq!(count_needles(&calibrate_needles("a-b-c-d-e-f", 4, 1), '-'), 4);
        let s = "a-D#fG%kL-qW!zXe@R-tY&";
        let fixed = calibrate_needles(s, 4, 9);
        assert_eq!(fixed.chars().count(), s.chars().count());
        assert_eq!(count_needles(&fixed, '-'), 4);
    }

    #[test]
    fn level_out_of_range() {
        let g = small();
        assert!(matches!(
            g.procedural(TaskId::Btt, 11, 1, 0),
            Err(TaskError::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            g.procedural(TaskId::Sp, 0, 1, 0),
            Err(TaskError::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn interviewer_prompts_fill_slots() {
        let g = small();
        for task in TaskId::ALL {
            let (system, user) = g.interviewer_prompts(task, 2, &["[1 2 3]".to_string()]);
            assert!(!system.is_empty());
            assert!(!user.contains('{') || task == TaskId::Iqp, "{task}: {user}");
        }
        let (_, user) = g.interviewer_prompts(TaskId::Sp, 3, &[]);
        assert!(user.contains("generate a 60-character-long string"));
    }
}
