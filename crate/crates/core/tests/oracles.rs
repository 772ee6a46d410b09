//! Oracles against independent reference implementations.

mod common;

use common::*;
use evalnet::oracles::{
    eval_expression, format_sequence, parse_expression, postorder_from, render_rational, shortest_path, ArithExpr, Op,
    WeightedGraph,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn to_lib(e: &Expr) -> ArithExpr {
    match e {
        Expr::Num(s) => ArithExpr::number(s.clone()),
        Expr::Bin(op, l, r) => {
            let op = match op {
                '+' => Op::Add,
                '-' => Op::Sub,
                '*' => Op::Mul,
                _ => Op::Div,
            };
            ArithExpr::binary(op, to_lib(l), to_lib(r))
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn arithmetic_matches_rational_reference(seed in any::<u64>(), ops in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_expr(ops, &mut rng);
        let expect = eval(&e);
        let minimal = to_lib(&e).to_string();
        for text in [render_full(&e), minimal] {
            let parsed = parse_expression(&text).unwrap();
            prop_assert_eq!(parsed.operator_count(), ops);
            match (&expect, eval_expression(&parsed)) {
                (Some(v), Ok(got)) => {
                    prop_assert_eq!(&got, v, "{}", text);
                    prop_assert_eq!(render_rational(&got, 6), trim(&round_half_even(v, 6)));
                }
                (None, Err(_)) => {}
                (e, g) => prop_assert!(false, "{text}: reference {e:?}, library {g:?}"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn postorder_matches_recursive_walk(seed in any::<u64>(), n in 1usize..=63) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        let (mut pre, mut ino, mut post) = (Vec::new(), Vec::new(), Vec::new());
        preorder(&t, &mut pre);
        inorder(&t, &mut ino);
        postorder(&t, &mut post);
        prop_assert_eq!(postorder_from(&pre, &ino).unwrap(), post);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn dijkstra_matches_floyd_warshall(seed in any::<u64>(), nodes in 2usize..=20, density in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_edges = nodes * (nodes - 1) / 2;
        let edges = (nodes - 1) + ((max_edges - (nodes - 1)) as f64 * density) as usize;
        let g = WeightedGraph::random_connected(nodes, edges, 9, &mut rng).unwrap();
        let reference = floyd_warshall(&g.to_adjacency_text());
        let ids: Vec<char> = g.nodes().collect();
        for &s in &ids {
            for &t in &ids {
                prop_assert_eq!(shortest_path(&g, s, t).unwrap(), reference[&(s, t)]);
            }
        }
    }
}

pub const WORKED_GRAPH: &str =
    "A: B(3), C(1), F(8)\nB: A(3), D(5), E(7)\nC: A(1), D(2)\nD: B(5), C(2), E(1)\nE: B(7), D(1), F(4)\nF: A(8), E(4)";

#[test]
fn worked_examples() {
    let product = parse_expression("123.456 × 789.123").unwrap();
    assert_eq!(render_rational(&eval_expression(&product).unwrap(), 6), "97421.969088");
    let g = WeightedGraph::parse_adjacency(WORKED_GRAPH).unwrap();
    assert_eq!(shortest_path(&g, 'A', 'E').unwrap(), 4);
    assert_eq!(floyd_warshall(WORKED_GRAPH)[&('A', 'E')], 4);
    let seq = |s: &str| s.split(' ').map(|x| x.parse().unwrap()).collect::<Vec<i64>>();
    let pre = seq("50 30 20 10 15 13 12 40 35 70 60 80 75 78 76 79 77");
    let ino = seq("12 13 15 10 20 30 35 40 50 60 70 75 76 78 77 79 80");
    assert_eq!(
        format_sequence(&postorder_from(&pre, &ino).unwrap()),
        "12 13 15 10 20 35 40 30 60 76 77 79 78 75 80 70 50"
    );
}
