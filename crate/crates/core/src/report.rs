//! Run reports: one row per route in `AUC/max-level` form, the network
//! energy, per-route curve series, and task-pair correlations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::metrics::{format_auc, pearson, PerformanceCurve, StreamStatus};
use crate::network::{network_energy, EvalNetwork, NetworkError, TopologyKind};
use crate::tasks::TaskId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRow {
    pub route: String,
    pub interviewee: String,
    pub interviewee_model: String,
    pub interviewer: String,
    pub interviewer_model: String,
    pub task: Option<TaskId>,
    pub activated: bool,
    pub auc: Option<f64>,
    pub max_level: Option<u32>,
    pub status: String,
    pub cell: String,
}

/// Pearson r between tasks, computed across interviewees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub tasks: Vec<TaskId>,
    /// `None` where fewer than two interviewees share both tasks or a
    /// series has no variance.
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: TaskId, b: TaskId) -> Option<f64> {
        let i = self.tasks.iter().position(|&t| t == a)?;
        let j = self.tasks.iter().position(|&t| t == b)?;
        self.values[i][j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub topology: TopologyKind,
    pub rows: Vec<RouteRow>,
    pub curves: Vec<PerformanceCurve>,
    /// Sum of activated route weights; `None` until all are final.
    pub energy: Option<f64>,
    pub correlations: CorrelationMatrix,
}

/// Finalizes route weights from curves. Routes that carry no stream get
/// weight 0; streams that are still running stay unfinalized.
pub fn apply_curves(net: &mut EvalNetwork, curves: &[PerformanceCurve]) -> Result<(), NetworkError> {
    let ids: Vec<(String, bool)> = net.routes().iter().map(|r| (r.id(), net.is_stream_route(r))).collect();
    for (id, stream) in ids {
        if !stream {
            net.finalize_weight(&id, 0.0)?;
        } else if let Some(c) = curves.iter().find(|c| c.route == id) {
            if c.status != StreamStatus::Running {
                net.finalize_weight(&id, c.acc_auc())?;
            }
        }
    }
    Ok(())
}

fn correlations(rows: &[RouteRow]) -> CorrelationMatrix {
    let mut by_task: BTreeMap<TaskId, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in rows {
        if let (Some(task), Some(auc)) = (r.task, r.auc) {
            by_task.entry(task).or_default().entry(&r.interviewee).or_insert(auc);
        }
    }
    let tasks: Vec<TaskId> = by_task.keys().copied().collect();
    let values = tasks
        .iter()
        .map(|a| {
            tasks
                .iter()
                .map(|b| {
                    if a == b {
                        return Some(1.0);
                    }
                    let (xa, xb) = (&by_task[a], &by_task[b]);
                    let (x, y): (Vec<f64>, Vec<f64>) =
                        xa.iter().filter_map(|(k, v)| xb.get(k).map(|w| (*v, *w))).unzip();
                    pearson(&x, &y).ok()
                })
                .collect()
        })
        .collect();
    CorrelationMatrix { tasks, values }
}

/// Assembles the report for a network whose weights were set with
/// [`apply_curves`].
pub fn emit_report(run_id: &str, net: &EvalNetwork, curves: &[PerformanceCurve]) -> RunReport {
    let mut rows = Vec::new();
    for i in net.traversal_order() {
        let r = &net.routes()[i];
        let id = r.id();
        let to = net.node(&r.to).expect("validated route");
        let interviewee = net.interviewee_for(r);
        let curve = curves.iter().find(|c| c.route == id);
        let stream = net.is_stream_route(r);
        let (auc, max_level, status, cell) = match curve {
            Some(c) => (
                Some(c.acc_auc()),
                Some(c.max_level()),
                c.status.as_str().to_string(),
                c.cell(),
            ),
            None if !stream => (None, None, "relay".to_string(), "-".to_string()),
            None => (None, None, "pending".to_string(), "-".to_string()),
        };
        rows.push(RouteRow {
            route: id,
            interviewee: interviewee.map(|n| n.node_id.clone()).unwrap_or_default(),
            interviewee_model: interviewee.map(|n| n.model_ref.clone()).unwrap_or_default(),
            interviewer: to.node_id.clone(),
            interviewer_model: to.model_ref.clone(),
            task: if stream { to.task_binding } else { None },
            activated: r.activated,
            auc,
            max_level,
            status,
            cell,
        });
    }
    let correlations = correlations(&rows);
    RunReport {
        run_id: run_id.to_string(),
        topology: net.topology(),
        rows,
        curves: curves.to_vec(),
        energy: network_energy(net).ok(),
        correlations,
    }
}

impl RunReport {
    /// Plain-text table, one row per route and a final energy row.
    pub fn render_table(&self) -> String {
        let header = ["route", "interviewee", "interviewer", "task", "AUC/max-level", "status"];
        let mut lines: Vec<[String; 6]> = vec![header.map(String::from)];
        for r in &self.rows {
            let mut status = r.status.clone();
            if !r.activated {
                status.push_str(" (inactive)");
            }
            lines.push([
                r.route.clone(),
                r.interviewee_model.clone(),
                r.interviewer_model.clone(),
                r.task.map_or("-".into(), |t| t.to_string()),
                r.cell.clone(),
                status,
            ]);
        }
        lines.push([
            "energy".into(),
            String::new(),
            String::new(),
            String::new(),
            self.energy.map_or("pending".into(), format_auc),
            String::new(),
        ]);
        let widths: Vec<usize> = (0..6)
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, l) in lines.iter().enumerate() {
            let cells: Vec<String> = l.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            if i == 0 {
                let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 10));
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("route,interviewee,interviewer,task,activated,auc,max_level,status,cell\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.route,
                r.interviewee_model,
                r.interviewer_model,
                r.task.map_or(String::new(), |t| t.to_string()),
                r.activated,
                r.auc.map_or(String::new(), |a| a.to_string()),
                r.max_level.map_or(String::new(), |m| m.to_string()),
                r.status,
                r.cell
            );
        }
        let _ = writeln!(
            out,
            "energy,,,,,{},,,",
            self.energy.map_or(String::new(), |e| e.to_string())
        );
        out
    }

    pub fn curve_csv(curve: &PerformanceCurve) -> String {
        let mut out = String::from("level,acc\n");
        for t in &curve.levels {
            let _ = writeln!(out, "{},{}", t.level, t.acc());
        }
        out
    }

    pub fn correlations_csv(&self) -> String {
        let tasks = &self.correlations.tasks;
        let mut out = String::from("task");
        for t in tasks {
            let _ = write!(out, ",{t}");
        }
        out.push('\n');
        for (t, row) in tasks.iter().zip(&self.correlations.values) {
            out.push_str(t.as_str());
            for v in row {
                let _ = write!(out, ",{}", v.map_or(String::new(), |v| v.to_string()));
            }
            out.push('\n');
        }
        out
    }

    /// `summary.csv`, `correlations.csv`, `report.json`, and one
    /// `<route>/<task>.csv` per curve under `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.csv"), self.summary_csv())?;
        fs::write(dir.join("correlations.csv"), self.correlations_csv())?;
        fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(self).map_err(io::Error::other)?,
        )?;
        for c in &self.curves {
            let sub = dir.join(route_dir(&c.route));
            fs::create_dir_all(&sub)?;
            fs::write(sub.join(format!("{}.csv", c.task)), Self::curve_csv(c))?;
        }
        Ok(())
    }
}

/// Directory name for a route id.
pub fn route_dir(route: &str) -> String {
    route
        .replace("->", "__")
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::LevelTally;
    use crate::network::{build_network, AgentNode, EvalRoute, NetworkConfig};

    fn curve(route: &str, task: TaskId, correct: &[u32]) -> PerformanceCurve {
        let levels = correct
            .iter()
            .enumerate()
            .map(|(i, &c)| LevelTally {
                level: i as u32 + 1,
                correct: c,
                unparseable: 0,
                q_total: 10,
            })
            .collect();
        PerformanceCurve::new(route, task, 1, levels, StreamStatus::Terminated).unwrap()
    }

    fn two_route_star() -> EvalNetwork {
        build_network(&NetworkConfig {
            topology: TopologyKind::Star,
            nodes: vec![
                AgentNode::interviewee("E", "model-a"),
                AgentNode::interviewer("I1", "gen", TaskId::Btt),
                AgentNode::interviewer("I2", "gen", TaskId::Sp),
            ],
            routes: vec![EvalRoute::new("E", "I1"), EvalRoute::new("E", "I2")],
            known_models: None,
        })
        .unwrap()
    }

    #[test]
    fn two_routes_two_rows_and_energy() {
        let mut net = two_route_star();
        let curves = vec![
            curve("E->I1", TaskId::Btt, &[10, 10, 7, 0]),
            curve("E->I2", TaskId::Sp, &[10, 0]),
        ];
        apply_curves(&mut net, &curves).unwrap();
        let r = emit_report("run", &net, &curves);
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].cell, "2.7/3");
        assert_eq!(r.energy, Some(2.7 + 1.0));
        let table = r.render_table();
        assert_eq!(table.lines().count(), 2 + 2 + 1);
        assert!(table.lines().last().unwrap().starts_with("energy"));
        assert_eq!(RunReport::curve_csv(&curves[0]).lines().count(), 1 + 4);
        let csv = r.summary_csv();
        assert!(csv.lines().last().unwrap().starts_with("energy,"));
    }

    #[test]
    fn pending_stream_has_no_energy() {
        let mut net = two_route_star();
        let curves = vec![curve("E->I1", TaskId::Btt, &[10, 0])];
        apply_curves(&mut net, &curves).unwrap();
        let r = emit_report("run", &net, &curves);
        assert_eq!(r.energy, None);
        assert_eq!(r.rows[1].status, "pending");
    }

    #[test]
    fn writes_files() {
        let mut net = two_route_star();
        let curves = vec![
            curve("E->I1", TaskId::Btt, &[10, 0]),
            curve("E->I2", TaskId::Sp, &[5, 0]),
        ];
        apply_curves(&mut net, &curves).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_report("run", &net, &curves).write_to(dir.path()).unwrap();
        assert!(dir.path().join("E__I1/BTT.csv").exists());
        assert!(dir.path().join("summary.csv").exists());
        let back: RunReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(back.rows.len(), 2);
    }
}
