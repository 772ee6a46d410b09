//! Test-side reference implementations, written without the library's
//! oracles so the two can be compared.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone)]
pub enum Expr {
    Num(String),
    Bin(char, Box<Expr>, Box<Expr>),
}

fn random_literal<R: Rng>(rng: &mut R) -> String {
    let int: u32 = rng.gen_range(1..10_000);
    match rng.gen_range(0..3) {
        0 => int.to_string(),
        _ => {
            let frac_digits = rng.gen_range(1..=3);
            let frac: u32 = rng.gen_range(0..10u32.pow(frac_digits));
            format!("{int}.{frac:0width$}", width = frac_digits as usize)
        }
    }
}

/// Random expression with exactly `ops` operators.
pub fn random_expr<R: Rng>(ops: usize, rng: &mut R) -> Expr {
    if ops == 0 {
        return Expr::Num(random_literal(rng));
    }
    let left = rng.gen_range(0..ops);
    let op = *['+', '-', '*', '/'].choose(rng).unwrap();
    Expr::Bin(
        op,
        Box::new(random_expr(left, rng)),
        Box::new(random_expr(ops - 1 - left, rng)),
    )
}

pub fn decimal_to_rational(s: &str) -> BigRational {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().unwrap();
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    BigRational::new(digits, denom)
}

/// `None` on division by zero.
pub fn eval(e: &Expr) -> Option<BigRational> {
    match e {
        Expr::Num(s) => Some(decimal_to_rational(s)),
        Expr::Bin(op, l, r) => {
            let (a, b) = (eval(l)?, eval(r)?);
            match op {
                '+' => Some(a + b),
                '-' => Some(a - b),
                '*' => Some(a * b),
                _ if b.is_zero() => None,
                _ => Some(a / b),
            }
        }
    }
}

/// Every binary node in parentheses.
pub fn render_full(e: &Expr) -> String {
    match e {
        Expr::Num(s) => s.clone(),
        Expr::Bin(op, l, r) => {
            let sym = if *op == '*' { "×".to_string() } else { op.to_string() };
            format!("({} {sym} {})", render_full(l), render_full(r))
        }
    }
}

/// Half-even rounding of `v` to `places` decimals, rendered with exactly
/// that many fractional digits.
pub fn round_half_even(v: &BigRational, places: u32) -> String {
    let scale = num_traits::pow(BigInt::from(10), places as usize);
    let scaled = v * BigRational::from_integer(scale.clone());
    let floor = scaled.floor();
    let rem = &scaled - &floor;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut n = floor.to_integer();
    if rem > half || (rem == half && (&n % BigInt::from(2)) != BigInt::zero()) {
        n += 1;
    }
    let neg = n < BigInt::zero();
    let mut digits = if neg { (-n).to_string() } else { n.to_string() };
    if places > 0 {
        while digits.len() <= places as usize {
            digits.insert(0, '0');
        }
        digits.insert(digits.len() - places as usize, '.');
    }
    if neg && digits.chars().any(|c| c != '0' && c != '.') {
        digits.insert(0, '-');
    }
    digits
}

#[derive(Debug, Clone)]
pub struct Tree {
    pub id: i64,
    pub left: Option<Box<Tree>>,
    pub right: Option<Box<Tree>>,
}

/// Random binary tree over `n` distinct ids.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Tree {
    let mut ids: Vec<i64> = (1..=(n as i64 * 3)).collect();
    ids.shuffle(rng);
    ids.truncate(n);
    build(&ids, rng)
}

fn build<R: Rng>(ids: &[i64], rng: &mut R) -> Tree {
    let rest = &ids[1..];
    let split = rng.gen_range(0..=rest.len());
    let (l, r) = rest.split_at(split);
    Tree {
        id: ids[0],
        left: (!l.is_empty()).then(|| Box::new(build(l, rng))),
        right: (!r.is_empty()).then(|| Box::new(build(r, rng))),
    }
}

pub fn preorder(t: &Tree, out: &mut Vec<i64>) {
    out.push(t.id);
    if let Some(l) = &t.left {
        preorder(l, out);
    }
    if let Some(r) = &t.right {
        preorder(r, out);
    }
}

pub fn inorder(t: &Tree, out: &mut Vec<i64>) {
    if let Some(l) = &t.left {
        inorder(l, out);
    }
    out.push(t.id);
    if let Some(r) = &t.right {
        inorder(r, out);
    }
}

pub fn postorder(t: &Tree, out: &mut Vec<i64>) {
    if let Some(l) = &t.left {
        postorder(l, out);
    }
    if let Some(r) = &t.right {
        postorder(r, out);
    }
    out.push(t.id);
}

/// All-pairs distances from `A: B(2), C(4)` adjacency text.
pub fn floyd_warshall(adjacency: &str) -> BTreeMap<(char, char), u64> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for line in adjacency.lines() {
        let (u, rest) = line.split_once(':').unwrap();
        let u = u.trim().chars().next().unwrap();
        nodes.push(u);
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (v, w) = item.split_once('(').unwrap();
            let w: u64 = w.trim_end_matches(')').parse().unwrap();
            edges.push((u, v.trim().chars().next().unwrap(), w));
        }
    }
    let n = nodes.len();
    let idx = |c: char| nodes.iter().position(|&x| x == c).unwrap();
    let inf = u64::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (u, v, w) in edges {
        let (a, b) = (idx(u), idx(v));
        d[a][b] = d[a][b].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for (i, &u) in nodes.iter().enumerate() {
        for (j, &v) in nodes.iter().enumerate() {
            if d[i][j] < inf {
                out.insert((u, v), d[i][j]);
            }
        }
    }
    out
}

/// A random scripted network config: line, star or tree over the
/// non-image, non-code tasks, with threshold interviewees.
pub fn random_config<R: Rng>(rng: &mut R) -> String {
    let tasks = ["Arith_scale", "Arith_oper", "BTT", "SPS_node", "SPS_edge", "SP"];
    let topology = *["line", "star", "tree"].choose(rng).unwrap();
    let n = rng.gen_range(1..=4);
    let k = rng.gen_range(1..=4);
    let q = rng.gen_range(1..=3);
    let mut nodes = vec![r#"{ node_id = "E", model_ref = "m", role = "interviewee" }"#.to_string()];
    let mut routes = Vec::new();
    for i in 1..=n {
        let task = tasks.choose(rng).unwrap();
        nodes.push(format!(
            r#"{{ node_id = "I{i}", model_ref = "gen", role = "interviewer", task_binding = "{task}" }}"#
        ));
        let from = match topology {
            "star" => "E".to_string(),
            "line" => {
                if i == 1 {
                    "E".to_string()
                } else {
                    format!("I{}", i - 1)
                }
            }
            _ => {
                let p = rng.gen_range(0..i);
                if p == 0 {
                    "E".to_string()
                } else {
                    format!("I{p}")
                }
            }
        };
        routes.push(format!(r#"{{ from = "{from}", to = "I{i}" }}"#));
    }
    format!(
        r#"[engine]
q_total = {q}
seed = {seed}
workers = {workers}

[backends.m]
kind = "scripted"
default = {{ kind = "threshold", k = {k} }}
format_violation_rate = {fv}

[backends.gen]
kind = "scripted"
interviewer = {{ malformed_rate = 0.1, miscalibration_rate = 0.1, duplicate_rate = 0.1 }}

[network]
topology = "{topology}"
nodes = [{nodes}]
routes = [{routes}]
"#,
        seed = rng.gen::<u32>(),
        workers = rng.gen_range(1..=3),
        fv = if rng.gen_bool(0.3) { 0.1 } else { 0.0 },
        nodes = nodes.join(", "),
        routes = routes.join(", "),
    )
}
