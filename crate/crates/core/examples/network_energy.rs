//! A line network from a config file: digests flow downstream and the
//! network energy sums activated route AUCs.

use std::collections::BTreeMap;

use evalnet::config::load_config;
use evalnet::engine::{run_network, NullSink, RunControl};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/line.toml").to_string());
    let config = load_config(path.as_ref()).unwrap();
    let engine = config.engine(true).unwrap();
    let mut net = config.network().unwrap();
    let run = run_network(
        &engine,
        &mut net,
        "energy",
        BTreeMap::new(),
        &NullSink,
        &RunControl::new(),
    )
    .unwrap();
    print!("{}", run.report.render_table());
    let sum: f64 = run
        .report
        .rows
        .iter()
        .filter(|r| r.activated)
        .filter_map(|r| r.auc)
        .sum();
    println!("sum of route AUCs {sum}, energy {:?}", run.report.energy);
}
