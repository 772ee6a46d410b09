//! Exact arithmetic: decimal literals, expression trees, and the
//! rational evaluator used to calibrate arithmetic questions.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
    #[error("unbalanced parenthesis at byte {offset}")]
    UnbalancedParens { offset: usize },
    #[error("invalid decimal literal {0:?}")]
    InvalidDecimal(String),
}

/// A finite decimal number `digits / 10^scale`.
///
/// The scale is kept as written, so `1.50` and `1.5` compare equal but
/// display differently.
#[derive(Debug, Clone)]
pub struct Decimal {
    digits: BigInt,
    scale: u32,
}

impl Decimal {
    pub fn new(digits: BigInt, scale: u32) -> Self {
        Self { digits, scale }
    }

    pub fn zero() -> Self {
        Self::new(BigInt::zero(), 0)
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_zero()
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.digits.clone(), pow10(self.scale))
    }

    /// Number of significant digits in the written form (leading zeros excluded).
    pub fn significant_digits(&self) -> usize {
        let s = self.digits.abs().to_string();
        if s == "0" {
            0
        } else {
            s.len()
        }
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.to_rational() == other.to_rational()
    }
}

impl Eq for Decimal {}

impl FromStr for Decimal {
    type Err = ArithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-').or_else(|| t.strip_prefix('\u{2212}')) {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let valid = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty())
            || !valid(int_part)
            || !valid(frac_part)
            || (body.contains('.') && frac_part.is_empty() && int_part.is_empty())
        {
            return Err(ArithError::InvalidDecimal(s.to_string()));
        }
        let all: String = format!("{int_part}{frac_part}");
        let mut digits: BigInt = all.parse().map_err(|_| ArithError::InvalidDecimal(s.to_string()))?;
        if neg {
            digits = -digits;
        }
        Ok(Decimal::new(digits, frac_part.len() as u32))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.digits.is_negative();
        let mut s = self.digits.abs().to_string();
        let scale = self.scale as usize;
        if scale > 0 {
            if s.len() <= scale {
                s = format!("{}{}", "0".repeat(scale + 1 - s.len()), s);
            }
            s.insert(s.len() - scale, '.');
        }
        if neg {
            write!(f, "-{s}")
        } else {
            f.write_str(&s)
        }
    }
}

/// Exact product of two decimals; the result carries the summed scale.
pub fn exact_decimal_product(a: &Decimal, b: &Decimal) -> Decimal {
    Decimal::new(&a.digits * &b.digits, a.scale + b.scale)
}

pub(crate) fn pow10(n: u32) -> BigInt {
    num_traits::pow(BigInt::from(10u32), n as usize)
}

/// Renders `value` with at most `precision` fractional digits, rounding
/// half to even and trimming trailing zeros.
pub fn render_rational(value: &BigRational, precision: u32) -> String {
    let scaled = value * BigRational::from_integer(pow10(precision));
    let (q, r) = scaled.numer().div_mod_floor(scaled.denom());
    // r in [0, denom): compare 2r with denom for the half-even rule
    let twice: BigInt = &r * 2;
    let den = scaled.denom();
    let rounded = match twice.cmp(den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q.is_even() {
                q
            } else {
                q + 1
            }
        }
    };
    let mut d = Decimal::new(rounded, precision);
    d.trim();
    d.to_string()
}

/// Number of fractional digits needed to write `value` exactly, or `None`
/// when its expansion does not terminate.
pub fn terminating_scale(value: &BigRational) -> Option<u32> {
    let mut den = value.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0u32, 0u32);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    den.is_one().then_some(twos.max(fives))
}

impl Decimal {
    fn trim(&mut self) {
        let ten = BigInt::from(10);
        while self.scale > 0 && (&self.digits % &ten).is_zero() {
            self.digits /= &ten;
            self.scale -= 1;
        }
    }

    /// Rounds half to even at `precision` fractional digits.
    pub fn round_to(&self, precision: u32) -> Decimal {
        if self.scale <= precision {
            return self.clone();
        }
        render_rational(&self.to_rational(), precision)
            .parse()
            .expect("rendered decimal parses")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "×",
            Op::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            Op::Add | Op::Sub => 1,
            Op::Mul | Op::Div => 2,
        }
    }
}

/// Expression tree. `Group` records parentheses written in the source so
/// that rendering reproduces the original token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArithExpr {
    Number(String),
    Binary {
        op: Op,
        lhs: Box<ArithExpr>,
        rhs: Box<ArithExpr>,
    },
    Group(Box<ArithExpr>),
}

impl ArithExpr {
    pub fn number(text: impl Into<String>) -> Self {
        ArithExpr::Number(text.into())
    }

    /// Builds `lhs op rhs`, wrapping operands in groups where the
    /// left-associative grammar would otherwise re-associate them.
    pub fn binary(op: Op, lhs: ArithExpr, rhs: ArithExpr) -> Self {
        let lhs = if lhs.top_precedence() < op.precedence() {
            lhs.grouped()
        } else {
            lhs
        };
        let rhs = if rhs.top_precedence() <= op.precedence() {
            rhs.grouped()
        } else {
            rhs
        };
        ArithExpr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn grouped(self) -> Self {
        ArithExpr::Group(Box::new(self))
    }

    fn top_precedence(&self) -> u8 {
        match self {
            ArithExpr::Binary { op, .. } => op.precedence(),
            _ => u8::MAX,
        }
    }

    pub fn operator_count(&self) -> usize {
        match self {
            ArithExpr::Number(_) => 0,
            ArithExpr::Binary { lhs, rhs, .. } => 1 + lhs.operator_count() + rhs.operator_count(),
            ArithExpr::Group(inner) => inner.operator_count(),
        }
    }

    pub fn literals(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_literals(&mut out);
        out
    }

    fn collect_literals<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ArithExpr::Number(t) => out.push(t),
            ArithExpr::Binary { lhs, rhs, .. } => {
                lhs.collect_literals(out);
                rhs.collect_literals(out);
            }
            ArithExpr::Group(inner) => inner.collect_literals(out),
        }
    }
}

impl fmt::Display for ArithExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithExpr::Number(t) => f.write_str(t),
            ArithExpr::Binary { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            ArithExpr::Group(inner) => write!(f, "({inner})"),
        }
    }
}

/// Evaluates with arbitrary-precision rationals; never overflows.
pub fn eval_expression(expr: &ArithExpr) -> Result<BigRational, ArithError> {
    match expr {
        ArithExpr::Number(t) => Ok(t.parse::<Decimal>()?.to_rational()),
        ArithExpr::Group(inner) => eval_expression(inner),
        ArithExpr::Binary { op, lhs, rhs } => {
            let l = eval_expression(lhs)?;
            let r = eval_expression(rhs)?;
            Ok(match op {
                Op::Add => l + r,
                Op::Sub => l - r,
                Op::Mul => l * r,
                Op::Div => {
                    if r.is_zero() {
                        return Err(ArithError::DivisionByZero);
                    }
                    l / r
                }
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(String),
    Op(Op),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ArithError> {
    let mut out = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some(&(off, c)) = iter.peek() {
        if c.is_whitespace() {
            iter.next();
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut lit = String::new();
            while let Some(&(_, d)) = iter.peek() {
                if d.is_ascii_digit() || d == '.' {
                    lit.push(d);
                    iter.next();
                } else {
                    break;
                }
            }
            if lit.parse::<Decimal>().is_err() || lit.matches('.').count() > 1 {
                return Err(ArithError::SyntaxError {
                    offset: off,
                    message: format!("malformed number {lit:?}"),
                });
            }
            out.push((Token::Num(lit), off));
            continue;
        }
        let tok = match c {
            '+' => Token::Op(Op::Add),
            '-' | '\u{2212}' => Token::Op(Op::Sub),
            '*' | '×' | '\u{00B7}' => Token::Op(Op::Mul),
            '/' | '÷' => Token::Op(Op::Div),
            '(' => Token::LParen,
            ')' => Token::RParen,
            other => {
                return Err(ArithError::SyntaxError {
                    offset: off,
                    message: format!("unexpected character {other:?}"),
                })
            }
        };
        out.push((tok, off));
        iter.next();
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn expr(&mut self) -> Result<ArithExpr, ArithError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ (Op::Add | Op::Sub))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = ArithExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ArithExpr, ArithError> {
        let mut lhs = self.factor()?;
        while let Some(Token::Op(op @ (Op::Mul | Op::Div))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = ArithExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<ArithExpr, ArithError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Num(t)) => {
                self.pos += 1;
                Ok(ArithExpr::Number(t))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token::RParen) => {
                        self.pos += 1;
                        Ok(ArithExpr::Group(Box::new(inner)))
                    }
                    None => Err(ArithError::UnbalancedParens { offset }),
                    Some(_) => Err(ArithError::SyntaxError {
                        offset: self.offset(),
                        message: "expected ')'".into(),
                    }),
                }
            }
            Some(Token::RParen) => Err(ArithError::UnbalancedParens { offset }),
            Some(Token::Op(op)) => Err(ArithError::SyntaxError {
                offset,
                message: format!("unexpected operator {:?}", op.symbol()),
            }),
            None => Err(ArithError::SyntaxError {
                offset,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

pub fn parse_expression(text: &str) -> Result<ArithExpr, ArithError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let expr = parser.expr()?;
    if parser.pos < parser.tokens.len() {
        let offset = parser.offset();
        return Err(match parser.peek() {
            Some(Token::RParen) => ArithError::UnbalancedParens { offset },
            _ => ArithError::SyntaxError {
                offset,
                message: "trailing input".into(),
            },
        });
    }
    Ok(expr)
}

/// Pulls the arithmetic span out of question prose such as
/// `"What is 123.456 × 789.123?"`.
pub fn extract_expression(question: &str) -> Option<&str> {
    let allowed = |c: char| {
        c.is_ascii_digit()
            || c.is_whitespace()
            || matches!(
                c,
                '.' | '+' | '-' | '\u{2212}' | '*' | '×' | '/' | '÷' | '(' | ')' | '\u{00B7}'
            )
    };
    let start = question.find(|c: char| c.is_ascii_digit() || c == '(')?;
    let rest = &question[start..];
    let end = rest.find(|c: char| !allowed(c)).unwrap_or(rest.len());
    let span = rest[..end].trim_end_matches(|c: char| c.is_whitespace() || c == '.');
    (!span.is_empty()).then_some(span.trim())
}
