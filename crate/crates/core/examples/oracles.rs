//! Exact oracles: decimal arithmetic, tree traversal, shortest paths.

use evalnet::oracles::{
    eval_expression, format_sequence, parse_expression, postorder_from, render_rational, shortest_path, WeightedGraph,
};

fn main() {
    for text in ["123.456 × 789.123", "(1.5 + 2.25) ÷ 0.5 - 3", "2 ÷ 3"] {
        let value = eval_expression(&parse_expression(text).unwrap()).unwrap();
        println!("{text} = {}", render_rational(&value, 6));
    }

    let pre = [50, 30, 20, 40, 70, 60, 80];
    let ino = [20, 30, 40, 50, 60, 70, 80];
    println!("postorder: {}", format_sequence(&postorder_from(&pre, &ino).unwrap()));

    let g = WeightedGraph::parse_adjacency("A: B(3), C(1)\nB: A(3), D(1)\nC: A(1), D(5)\nD: B(1), C(5)").unwrap();
    println!("A -> D: {}", shortest_path(&g, 'A', 'D').unwrap());
}
