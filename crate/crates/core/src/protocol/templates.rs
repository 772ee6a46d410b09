//! Prompt templates for every task and role, with `{slot}` placeholders.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template {template:?} needs slot {{{slot}}}")]
    MissingSlot { template: TemplateId, slot: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateId {
    IqpInterviewerSystem,
    IqpInterviewerUser,
    IqpInterviewee,
    CuInterviewerSystem,
    CuInterviewerUser,
    CuInterviewee,
    StuInterviewerSystem,
    StuInterviewerUser,
    StuDisruptInterviewee,
    StuMaskInterviewee,
    SpInterviewerSystem,
    SpInterviewerUser,
    SpInterviewee,
    ArithInterviewerSystem,
    ArithScaleInterviewerUser,
    ArithOperInterviewerUser,
    ArithInterviewee,
    BttInterviewerSystem,
    BttInterviewerUser,
    BttInterviewee,
    SpsInterviewerSystem,
    SpsInterviewerUser,
    SpsInterviewee,
    CodeInterviewerSystem,
    CodeGenInterviewerUser,
    CodeGenInterviewee,
    CodeDebugInterviewerUser,
    CodeDebugInterviewee,
    SupervisorSystem,
    SupervisorUser,
    DigestPreamble,
}

const ADJACENCY_EXAMPLE: &str = "<network>\nA: B(2), C(4)\nB: A(2), D(3)\nC: A(4), D(1)\nD: B(3), C(1)\n</network>";

impl TemplateId {
    pub fn text(self) -> &'static str {
        use TemplateId::*;
        match self {
            IqpInterviewerSystem => "You are a helpful assistant for prompt generation in text-to-image tasks.",
            IqpInterviewerUser => "Please generate a prompt regarding the generation of {keyword} images. Return text in <text></text> format.",
            IqpInterviewee => "Given two images <image1> and <image2>, please answer if there are any differences in noise between them. Return judgment <yes> or <no> with analysis in format:\n<Judgment>xxx</Judgment>\n<Analysis>xxx</Analysis>",
            CuInterviewerSystem => "You are a helpful assistant.",
            CuInterviewerUser => "Please generate two random numbers from 1 to {icon_max} and from 1 to {cells}, respectively. Return answer in the following format:\nNumber1: <>    # The first one denotes the selected icon's ID.\nNumber2: <>    # The second one denotes the number of the same icons.",
            CuInterviewee => "Given an icon image <image1> and a large grid image <image2>, please answer how many icons <image1> are there in the grid image <image2>? Return number only in format:\nNumber: <>",
            StuInterviewerSystem => "You are an expert in the field of literature, specializing in writing stories, journals, and essays.",
            StuInterviewerUser => "Please generate a piece of text, about 100 words, which can be a story, journal, or essay. Output the text between the <text></text> symbols.",
            StuDisruptInterviewee => "Here is an text with typos: <text>{text}</text>. Please output this exact text, with no changes at all except for fixing the misspellings. Please leave all other stylistic decisions like commas and US vs British spellings as in the original text. Output the revised text between the <text></text> symbols.",
            StuMaskInterviewee => "Here is an text with masks (*): <text>{text}</text>. Please output this exact text, with no changes at all except for filling the masks. Please leave all other stylistic decisions like commas and US vs British spellings as in the original text. Output the revised text between the <text></text> symbols.",
            SpInterviewerSystem => "You are a helpful assistant proficient in generating text.",
            SpInterviewerUser => "Please generate a {length}-character-long string that may include English letters (both uppercase and lowercase) and special characters such as: !, @, #, %, &. Then, insert four '-' characters at random positions in the string. Return string in String: <> format.",
            SpInterviewee => "Here is a long string: <text>{text}</text>. How many '-' characters are there in this string? Return the number in the following format:\nNumber: < >",
            ArithInterviewerSystem => "You are a helpful assistant proficient in mathematics.",
            ArithScaleInterviewerUser => "Please generate a multiplication problem with the correct answer involving two {digits}-digit decimal numbers. The two numbers must be different from those used in previous problems.\n\nReturn question and correct answer in the following format:\n<question> </question>\n<answer> </answer>",
            ArithOperInterviewerUser => "Please generate an arithmetic problem with the following requirements:\n1. Each number should have exactly {digits} significant digits\n2. The numbers should be randomly generated, not following any pattern\n3. The problem should use exactly {operators} operators such as (+,-,×,/)\n4. You can use parentheses () freely to group operations\n5. The numbers should be different from the former problems\n\nReturn question and correct answer in the following format:\n<question> </question>\n<answer> </answer>",
            ArithInterviewee => "{question}\nPlease solve the given math problem and return your answer in <answer> </answer> format.",
            BttInterviewerSystem => "You are a helpful assistant proficient in computer science algorithms.",
            BttInterviewerUser => "Please generate a binary tree traversal problem with the following requirements:\n1. The tree should have exactly {depth} levels\n2. The number of nodes should be between {min_nodes} and {max_nodes}(inclusive)\n3. The sequences should be different from these last problems: {last_problems}\n4. The tree structure should be a valid binary tree\n5. Each node ID should be a unique integer\n\nProvide three types of traversal sequences. Format your response as:\n<preorder> </preorder>\n<inorder> </inorder>\n<postorder> </postorder>",
            BttInterviewee => "Given the preorder and inorder traversals of a binary tree (with node IDs separated by spaces) <preorder> {preorder} </preorder> and <inorder> {inorder} </inorder>, compute its postorder traversal. Please solve the given algorithm problem and return your answer in <answer> </answer> format.",
            SpsInterviewerSystem => "You are a helpful assistant proficient in computer science algorithms.",
            SpsInterviewerUser => "Please generate a shortest path search problem with the following requirements:\n1. The network should be an undirected weighted graph\n2. The network is given in an adjacency list format. For example, for each node, its connected nodes along with the corresponding edge weights are listed as:\n{adjacency_example}\n3. The number of nodes is {nodes}, or the average edge number of each node is {degree}\n5. Node IDs must be uppercase or lowercase English letters.\n\nPlease randomly select two nodes from the graph and compute the weighted shortest path between them (return the number only). Format your response as:\n<network> </network>\n<Node ID1> </Node ID1>\n<Node ID2> </Node ID2>\n<path> </path>",
            SpsInterviewee => "Given the nodes <Node ID1> {source} </Node ID1> and <Node ID2> {target} </Node ID2> of a undirected weighted graph <network>\n{network}\n</network>.\nThe network is given in an adjacency list format. For example, for each node, its connected nodes along with the corresponding edge weights are listed as:\n{adjacency_example}\nPlease calculate the weighted shortest path between them and return your answer in <answer> </answer> format with the number only.",
            CodeInterviewerSystem => "You are a helpful programming assistant and an expert Python programmer.",
            CodeGenInterviewerUser => "Please generate a common coding problem specification without any code and the test input as well as the corresponding printable output in the following format:\n<problem> </problem>\n<input> </input>\n<output> </output>\nNote that the new problem should be different from the {former_problems}.",
            CodeGenInterviewee => "Given a coding question and the test input as well as the corresponding printable output in the following format:\n<problem> {problem} </problem>\n<input> {input} </input>\n<output> {output} </output>\nPlease generate a correct Python program that matches the specification and output requirements. The code must be directly executable, so please import the necessary library files and pay attention to code indentation and line breaks.{requirements} Return the code for two parts in the following format:\n<code_function> </code_function>\nif __name__ == '__main__':\n<code_main> </code_main>",
            CodeDebugInterviewerUser => "First, please generate a common coding problem specification and the test input as well as the corresponding printable output in the following format:\n<problem> </problem>\n<input> </input>\n<output> </output>\nThen, generate a correct Python program that matches the specification and output requirements. The code must be directly executable, so please import the necessary library files and pay attention to code indentation and line breaks. Return the code for two parts in the following format:\n<code_function> </code_function>\nif __name__ == '__main__':\n<code_main> </code_main>\nNote that the new problem should be different from the {former_problems}.",
            CodeDebugInterviewee => "Given a coding question and the test input as well as the corresponding printable output in the following format:\n<problem> {problem} </problem>\n<input> {input} </input>\n<output> {output} </output>\nPlease repair the masked Python code <code_function>\n{masked_code}\n</code_function> to match the specification and output requirements. The code must be directly executable, so please import the necessary library files and pay attention to code indentation and line breaks.\nThen generate a fixed version of the program in the following format:\n<code_function> </code_function>",
            SupervisorSystem => "You are a strict supervisor of an evaluation interview. You check that generated questions are well-formed, meet the stated requirements, and do not repeat earlier questions.",
            SupervisorUser => "Task: {task}\nLevel: {level}\nGenerated question:\n{question}\n\nDoes this question violate the task requirements or repeat an earlier question? Return judgment <yes> or <no> in format:\n<Judgment>xxx</Judgment>\n<Analysis>xxx</Analysis>",
            DigestPreamble => "Dialogue from upstream evaluation routes follows. Use it as context and do not repeat these questions.\n{digest}",
        }
    }

    /// Slot names the template requires, in order of first appearance.
    pub fn slots(self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for piece in scan(self.text()) {
            if let Piece::Slot(name) = piece {
                if !out.contains(&name) {
                    out.push(name);
                }
            }
        }
        out
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Slot(&'a str),
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

fn scan(text: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_slot_name(&after[..close]) => {
                if open > 0 {
                    out.push(Piece::Literal(&rest[..open]));
                }
                out.push(Piece::Slot(&after[..close]));
                rest = &after[close + 1..];
            }
            _ => {
                out.push(Piece::Literal(&rest[..open + 1]));
                rest = after;
            }
        }
    }
    if !rest.is_empty() {
        out.push(Piece::Literal(rest));
    }
    out
}

pub type Slots<'a> = BTreeMap<&'a str, String>;

/// Instantiates `id`, substituting each `{slot}` with its value. The
/// shared adjacency-list example is filled in automatically.
pub fn render_prompt(id: TemplateId, slots: &Slots<'_>) -> Result<String, TemplateError> {
    let mut out = String::new();
    for piece in scan(id.text()) {
        match piece {
            Piece::Literal(s) => out.push_str(s),
            Piece::Slot("adjacency_example") if !slots.contains_key("adjacency_example") => {
                out.push_str(ADJACENCY_EXAMPLE)
            }
            Piece::Slot(name) => match slots.get(name) {
                Some(v) => out.push_str(v),
                None => {
                    return Err(TemplateError::MissingSlot {
                        template: id,
                        slot: name.to_string(),
                    })
                }
            },
        }
    }
    Ok(out)
}

/// Builds a slot map from `(name, value)` pairs.
pub fn slots<'a, V: ToString>(pairs: &[(&'a str, V)]) -> Slots<'a> {
    pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sp_length_slot() {
        let p = render_prompt(TemplateId::SpInterviewerUser, &slots(&[("length", 40)])).unwrap();
        assert!(p.starts_with("Please generate a 40-character-long string"));
    }

    #[test]
    fn slotless_is_verbatim() {
        for id in [
            TemplateId::IqpInterviewee,
            TemplateId::StuInterviewerUser,
            TemplateId::CuInterviewee,
        ] {
            assert_eq!(render_prompt(id, &Slots::new()).unwrap(), id.text());
        }
    }

    #[test]
    fn missing_slot() {
        let err = render_prompt(TemplateId::BttInterviewerUser, &slots(&[("depth", 3)])).unwrap_err();
        assert_eq!(
            err,
            TemplateError::MissingSlot {
                template: TemplateId::BttInterviewerUser,
                slot: "min_nodes".into()
            }
        );
    }

    #[test]
    fn btt_embeds_last_problems() {
        let p = render_prompt(
            TemplateId::BttInterviewerUser,
            &slots(&[
                ("depth", "3"),
                ("min_nodes", "4"),
                ("max_nodes", "7"),
                ("last_problems", "[4 2 1 3]"),
            ]),
        )
        .unwrap();
        assert!(p.contains("different from these last problems: [4 2 1 3]\n"));
        assert!(p.contains("between 4 and 7(inclusive)"));
    }

    #[test]
    fn sps_example_block() {
        let p = render_prompt(
            TemplateId::SpsInterviewee,
            &slots(&[("source", "A"), ("target", "E"), ("network", "A: B(1)\nB: A(1)")]),
        )
        .unwrap();
        assert!(p.contains("<network>\nA: B(2), C(4)\nB: A(2), D(3)\nC: A(4), D(1)\nD: B(3), C(1)\n</network>"));
        assert!(p.contains("<Node ID1> A </Node ID1> and <Node ID2> E </Node ID2>"));
    }

    #[test]
    fn literal_braces_pass_through() {
        assert_eq!(TemplateId::CuInterviewee.slots(), Vec::<&str>::new());
        assert_eq!(
            TemplateId::CodeGenInterviewee.slots(),
            vec!["problem", "input", "output", "requirements"]
        );
    }
}
