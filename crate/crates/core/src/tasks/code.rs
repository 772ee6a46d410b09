//! Code-task helpers: control-flow requirements and program assembly.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSolution {
    pub function: String,
    pub main: String,
}

impl CodeSolution {
    pub fn program(&self) -> String {
        assemble(&self.function, &self.main)
    }
}

/// Joins a function block and a main block into one runnable script.
pub fn assemble(function: &str, main: &str) -> String {
    let mut out = function.trim_end().to_string();
    out.push_str("\n\n\nif __name__ == '__main__':\n");
    for line in main.lines() {
        if line.trim().is_empty() {
            continue;
        }
        out.push_str("    ");
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construct {
    For,
    While,
    If,
    Elif,
    Try,
    Break,
    Lambda,
    Def,
}

impl Construct {
    pub const ALL: [Construct; 8] = [
        Construct::For,
        Construct::While,
        Construct::If,
        Construct::Elif,
        Construct::Try,
        Construct::Break,
        Construct::Lambda,
        Construct::Def,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Construct::For => "for",
            Construct::While => "while",
            Construct::If => "if",
            Construct::Elif => "elif",
            Construct::Try => "try",
            Construct::Break => "break",
            Construct::Lambda => "lambda",
            Construct::Def => "def",
        }
    }

    fn phrase(self) -> &'static str {
        match self {
            Construct::For => "`for` loop",
            Construct::While => "`while` loop",
            Construct::If => "`if` statement",
            Construct::Elif => "`elif` branch",
            Construct::Try => "`try`/`except` block",
            Construct::Break => "`break` statement",
            Construct::Lambda => "`lambda` expression",
            Construct::Def => "function definition (`def`)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub construct: Construct,
    pub at_least: usize,
}

/// `count` requirements spread over the constructs in a seeded order;
/// past eight, the same constructs are demanded more than once.
pub fn requirements_for<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<Requirement> {
    let mut order = Construct::ALL.to_vec();
    order.shuffle(rng);
    let mut out: Vec<Requirement> = Vec::new();
    for i in 0..count {
        let construct = order[i % order.len()];
        match out.iter_mut().find(|r| r.construct == construct) {
            Some(r) => r.at_least += 1,
            None => out.push(Requirement { construct, at_least: 1 }),
        }
    }
    out
}

/// Extra instruction sentence appended to the code-generation prompt.
pub fn requirements_text(reqs: &[Requirement]) -> String {
    if reqs.is_empty() {
        return String::new();
    }
    let items: Vec<String> = reqs
        .iter()
        .map(|r| {
            if r.at_least == 1 {
                format!("at least one {}", r.construct.phrase())
            } else {
                format!("at least {} uses of a {}", r.at_least, r.construct.phrase())
            }
        })
        .collect();
    format!(" The program must contain {}.", items.join(", "))
}

/// Occurrences of `keyword` as a whole word outside string literals and
/// comments.
pub fn keyword_count(code: &str, keyword: &str) -> usize {
    let mut count = 0;
    for line in code.lines() {
        let mut word = String::new();
        let mut quote: Option<char> = None;
        let mut prev = '\0';
        for c in line.chars().chain(std::iter::once(' ')) {
            if let Some(q) = quote {
                if c == q && prev != '\\' {
                    quote = None;
                }
                prev = c;
                continue;
            }
            if c == '#' {
                break;
            }
            if c.is_ascii_alphanumeric() || c == '_' {
                word.push(c);
            } else {
                if word == keyword {
                    count += 1;
                }
                word.clear();
                if c == '"' || c == '\'' {
                    quote = Some(c);
                }
            }
            prev = c;
        }
        if word == keyword {
            count += 1;
        }
    }
    count
}

pub fn unmet_requirements(code: &str, reqs: &[Requirement]) -> Vec<Requirement> {
    reqs.iter()
        .copied()
        .filter(|r| keyword_count(code, r.construct.keyword()) < r.at_least)
        .collect()
}

/// An unused helper function that exercises every demanded construct.
/// Appending it to a correct solution keeps the output unchanged.
pub fn padding_helper(reqs: &[Requirement], existing: &str) -> String {
    let mut body = vec!["    total = 0".to_string()];
    let mut extra_defs = 0;
    for r in reqs {
        let missing = r
            .at_least
            .saturating_sub(keyword_count(existing, r.construct.keyword()));
        let missing = if r.construct == Construct::Def {
            // the helper itself is one definition
            extra_defs = missing.saturating_sub(1);
            0
        } else {
            missing
        };
        for i in 0..missing {
            match r.construct {
                Construct::For => body.push(format!("    for i{i} in range(2):\n        total += i{i}")),
                Construct::While => body.push("    while total > 1000:\n        total -= 1".to_string()),
                Construct::If => body.push("    if total < 0:\n        total = 0".to_string()),
                Construct::Elif => body.push(
                    "    if total == -1:\n        total = 1\n    elif total == -2:\n        total = 2".to_string(),
                ),
                Construct::Try => {
                    body.push("    try:\n        total += 1\n    except ValueError:\n        total -= 1".to_string())
                }
                Construct::Break => body.push("    for _ in range(3):\n        break".to_string()),
                Construct::Lambda => body.push(format!("    step{i} = lambda v: v + 1\n    total = step{i}(total)")),
                Construct::Def => {}
            }
        }
    }
    body.push("    return total".to_string());
    let mut out = String::from("def _requirements_helper():\n");
    out.push_str(&body.join("\n"));
    out.push('\n');
    for i in 0..extra_defs {
        out.push_str(&format!("\n\ndef _requirements_helper_{i}():\n    return {i}\n"));
    }
    out
}
