//! Extraction of tagged fields (`<answer> 4 </answer>`, `Number: <4>`)
//! from free-form model replies.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::oracles::Decimal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("missing tag <{0}>")]
    MissingTag(String),
    #[error("tag <{tag}> holds {value:?}, expected {expected}")]
    TypeMismatch {
        tag: String,
        value: String,
        expected: &'static str,
    },
}

impl TagError {
    pub fn tag(&self) -> &str {
        match self {
            TagError::MissingTag(t) => t,
            TagError::TypeMismatch { tag, .. } => tag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagStyle {
    /// `<tag> value </tag>`
    Xml,
    /// `Label: <value>`
    Labeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Trimmed text; interior whitespace kept.
    Text,
    /// Multi-line code: surrounding blank lines dropped, indentation kept.
    Code,
    Integer,
    Decimal,
    IntList,
    YesNo,
    Letter,
}

impl FieldKind {
    fn expected(self) -> &'static str {
        match self {
            FieldKind::Text | FieldKind::Code => "text",
            FieldKind::Integer => "an integer",
            FieldKind::Decimal => "a decimal number",
            FieldKind::IntList => "a list of integers",
            FieldKind::YesNo => "yes or no",
            FieldKind::Letter => "a single letter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagSpec {
    pub tag: &'static str,
    pub style: TagStyle,
    pub kind: FieldKind,
    pub required: bool,
}

impl TagSpec {
    pub const fn xml(tag: &'static str, kind: FieldKind) -> Self {
        Self {
            tag,
            style: TagStyle::Xml,
            kind,
            required: true,
        }
    }

    pub const fn labeled(tag: &'static str, kind: FieldKind) -> Self {
        Self {
            tag,
            style: TagStyle::Labeled,
            kind,
            required: true,
        }
    }

    pub const fn optional(mut self) -> Self {
        self.required = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Text(String),
    Integer(i64),
    Decimal(Decimal),
    IntList(Vec<i64>),
    YesNo(bool),
    Letter(char),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaggedFields {
    fields: BTreeMap<&'static str, FieldValue>,
}

impl TaggedFields {
    pub fn get(&self, tag: &str) -> Option<&FieldValue> {
        self.fields.get(tag)
    }

    pub fn text(&self, tag: &str) -> Option<&str> {
        match self.fields.get(tag) {
            Some(FieldValue::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn integer(&self, tag: &str) -> Option<i64> {
        match self.fields.get(tag) {
            Some(FieldValue::Integer(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn decimal(&self, tag: &str) -> Option<&Decimal> {
        match self.fields.get(tag) {
            Some(FieldValue::Decimal(v)) => Some(v),
            _ => None,
        }
    }

    pub fn int_list(&self, tag: &str) -> Option<&[i64]> {
        match self.fields.get(tag) {
            Some(FieldValue::IntList(v)) => Some(v),
            _ => None,
        }
    }

    pub fn yes_no(&self, tag: &str) -> Option<bool> {
        match self.fields.get(tag) {
            Some(FieldValue::YesNo(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn letter(&self, tag: &str) -> Option<char> {
        match self.fields.get(tag) {
            Some(FieldValue::Letter(v)) => Some(*v),
            _ => None,
        }
    }
}

/// Raw contents of the last `<tag>...</tag>` pair in `body`.
pub fn find_xml<'a>(body: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let mut found = None;
    let mut from = 0;
    while let Some(start) = body[from..].find(&open).map(|i| from + i + open.len()) {
        match body[start..].find(&close) {
            Some(len) => {
                found = Some(&body[start..start + len]);
                from = start + len + close.len();
            }
            None => break,
        }
    }
    found
}

/// Raw contents of the last `Label: <value>` in `body`.
pub fn find_labeled<'a>(body: &'a str, label: &str) -> Option<&'a str> {
    let key = format!("{label}:");
    let mut found = None;
    let mut from = 0;
    while let Some(at) = body[from..].find(&key).map(|i| from + i + key.len()) {
        let rest = body[at..].trim_start_matches([' ', '\t']);
        let skipped = body.len() - at - rest.len();
        if let Some(inner) = rest.strip_prefix('<') {
            if let Some(end) = inner.find('>') {
                found = Some(&inner[..end]);
            }
        }
        from = at + skipped;
    }
    found
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_blank_lines(s: &str) -> String {
    let lines: Vec<&str> = s.lines().collect();
    let first = lines.iter().position(|l| !l.trim().is_empty());
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    match (first, last) {
        (Some(a), Some(b)) => lines[a..=b].iter().map(|l| l.trim_end()).collect::<Vec<_>>().join("\n"),
        _ => String::new(),
    }
}

fn coerce(spec: &TagSpec, raw: &str) -> Result<FieldValue, TagError> {
    let mismatch = || TagError::TypeMismatch {
        tag: spec.tag.to_string(),
        value: raw.to_string(),
        expected: spec.kind.expected(),
    };
    let norm = collapse_whitespace(raw);
    match spec.kind {
        FieldKind::Text => Ok(FieldValue::Text(raw.trim().to_string())),
        FieldKind::Code => Ok(FieldValue::Text(strip_blank_lines(raw))),
        FieldKind::Integer => norm.parse().map(FieldValue::Integer).map_err(|_| mismatch()),
        FieldKind::Decimal => norm.parse::<Decimal>().map(FieldValue::Decimal).map_err(|_| mismatch()),
        FieldKind::IntList => {
            let items: Result<Vec<i64>, _> = norm
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect();
            match items {
                Ok(v) if !v.is_empty() => Ok(FieldValue::IntList(v)),
                _ => Err(mismatch()),
            }
        }
        FieldKind::YesNo => {
            let t = norm.trim_matches(|c| c == '<' || c == '>').to_ascii_lowercase();
            match t.as_str() {
                "yes" => Ok(FieldValue::YesNo(true)),
                "no" => Ok(FieldValue::YesNo(false)),
                _ => Err(mismatch()),
            }
        }
        FieldKind::Letter => {
            let mut chars = norm.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_alphabetic() => Ok(FieldValue::Letter(c)),
                _ => Err(mismatch()),
            }
        }
    }
}

/// Extracts and type-coerces every field of `schema` from `body`.
/// Surrounding prose is ignored; a missing required tag is an error.
pub fn parse_tagged(body: &str, schema: &[TagSpec]) -> Result<TaggedFields, TagError> {
    let mut out = TaggedFields::default();
    for spec in schema {
        let raw = match spec.style {
            TagStyle::Xml => find_xml(body, spec.tag),
            TagStyle::Labeled => find_labeled(body, spec.tag),
        };
        match raw {
            Some(raw) => {
                out.fields.insert(spec.tag, coerce(spec, raw)?);
            }
            None if spec.required => return Err(TagError::MissingTag(spec.tag.to_string())),
            None => {}
        }
    }
    Ok(out)
}
