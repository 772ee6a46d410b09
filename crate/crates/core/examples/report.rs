//! Curves, summary CSV and task correlations across several interviewees.

use std::collections::BTreeMap;

use evalnet::config::Config;
use evalnet::engine::{run_network, NullSink, RunControl};
use evalnet::report::RunReport;
use evalnet::tasks::TaskId;

const CONFIG: &str = r#"
[engine]
q_total = 10

[backends.weak]
kind = "scripted"
default = { kind = "threshold", k = 1 }

[backends.mid]
kind = "scripted"
default = { kind = "threshold", k = 3 }

[backends.strong]
kind = "scripted"
default = { kind = "linear", intercept = 1.0, slope = -0.1 }

[backends.gen]
kind = "scripted"

[network]
topology = "hybrid"
nodes = [
  { node_id = "W", model_ref = "weak", role = "interviewee" },
  { node_id = "M", model_ref = "mid", role = "interviewee" },
  { node_id = "S", model_ref = "strong", role = "interviewee" },
  { node_id = "A", model_ref = "gen", role = "interviewer", task_binding = "Arith_oper" },
  { node_id = "B", model_ref = "gen", role = "interviewer", task_binding = "BTT" },
]
routes = [
  { from = "W", to = "A" }, { from = "M", to = "A" }, { from = "S", to = "A" },
  { from = "W", to = "B" }, { from = "M", to = "B" }, { from = "S", to = "B" },
]
"#;

fn main() {
    let config = Config::parse(CONFIG, "report.toml").unwrap();
    let engine = config.engine(true).unwrap();
    let mut net = config.network().unwrap();
    let run = run_network(
        &engine,
        &mut net,
        "report",
        BTreeMap::new(),
        &NullSink,
        &RunControl::new(),
    )
    .unwrap();
    print!("{}", run.report.summary_csv());
    println!("{}", RunReport::curve_csv(&run.curves[0]));
    println!(
        "r(Arith_oper, BTT) = {:?}",
        run.report.correlations.get(TaskId::ArithOper, TaskId::Btt)
    );
}
