//! Accuracy per level, ACC-AUC, and Pearson correlation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasks::TaskId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("{correct} correct out of {q_total}")]
    InvalidTally { correct: u32, q_total: u32 },
    #[error("levels are not contiguous: {0} follows {1}")]
    NonContiguousLevels(u32, u32),
    #[error("series lengths differ: {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two points, got {0}")]
    TooShort(usize),
    #[error("a series has zero variance")]
    DegenerateVariance,
}

pub fn acc(correct: u32, q_total: u32) -> Result<f64, MetricsError> {
    if q_total == 0 || correct > q_total {
        return Err(MetricsError::InvalidTally { correct, q_total });
    }
    Ok(f64::from(correct) / f64::from(q_total))
}

/// Where a stream stands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "detail", rename_all = "snake_case")]
pub enum StreamStatus {
    Running,
    /// The task cannot generate the next level; the curve is a lower bound.
    ExhaustedLevel,
    /// A level ended with accuracy zero.
    Terminated,
    /// The level cap was reached; the curve is a lower bound.
    Capped,
    /// A backend or runner failed past its retries. Resumable.
    Failed(String),
}

impl StreamStatus {
    pub fn is_final(&self) -> bool {
        matches!(
            self,
            StreamStatus::Terminated | StreamStatus::Capped | StreamStatus::ExhaustedLevel
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StreamStatus::Running => "running",
            StreamStatus::ExhaustedLevel => "exhausted_level",
            StreamStatus::Terminated => "terminated",
            StreamStatus::Capped => "capped",
            StreamStatus::Failed(_) => "failed",
        }
    }
}

/// Verdict tallies at one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelTally {
    pub level: u32,
    pub correct: u32,
    /// Replies that could not be parsed; counted as wrong.
    pub unparseable: u32,
    pub q_total: u32,
}

impl LevelTally {
    pub fn acc(&self) -> f64 {
        acc(self.correct, self.q_total).expect("tallies are validated on construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceCurve {
    pub route: String,
    pub task: TaskId,
    /// First level, `a`.
    pub initial: u32,
    pub levels: Vec<LevelTally>,
    pub status: StreamStatus,
}

impl PerformanceCurve {
    pub fn new(
        route: impl Into<String>,
        task: TaskId,
        initial: u32,
        levels: Vec<LevelTally>,
        status: StreamStatus,
    ) -> Result<Self, MetricsError> {
        for (expect, t) in (initial..).zip(&levels) {
            if t.level != expect {
                return Err(MetricsError::NonContiguousLevels(t.level, expect.saturating_sub(1)));
            }
            acc(t.correct, t.q_total)?;
            if t.unparseable > t.q_total - t.correct {
                return Err(MetricsError::InvalidTally {
                    correct: t.correct + t.unparseable,
                    q_total: t.q_total,
                });
            }
        }
        Ok(Self {
            route: route.into(),
            task,
            initial,
            levels,
            status,
        })
    }

    pub fn acc(&self) -> Vec<f64> {
        self.levels.iter().map(LevelTally::acc).collect()
    }

    /// Unit-step sum of accuracy over the visited levels, ascending.
    pub fn acc_auc(&self) -> f64 {
        acc_auc(&self.acc())
    }

    /// Last level with nonzero accuracy, or 0.
    pub fn max_level(&self) -> u32 {
        self.levels.iter().rev().find(|t| t.correct > 0).map_or(0, |t| t.level)
    }

    /// The curve stopped before a level with accuracy zero.
    pub fn is_lower_bound(&self) -> bool {
        matches!(self.status, StreamStatus::Capped | StreamStatus::ExhaustedLevel)
    }

    /// `AUC/max-level`, prefixed with `>=` for lower bounds.
    pub fn cell(&self) -> String {
        let s = format!("{}/{}", format_auc(self.acc_auc()), self.max_level());
        if self.is_lower_bound() {
            format!(">={s}")
        } else {
            s
        }
    }
}

pub fn acc_auc(acc: &[f64]) -> f64 {
    acc.iter().fold(0.0, |sum, a| sum + a)
}

/// Up to three decimals, trailing zeros dropped: `8.857`, `3`, `2.3`.
pub fn format_auc(auc: f64) -> String {
    let s = format!("{auc:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricsError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(correct: &[u32], q: u32, status: StreamStatus) -> PerformanceCurve {
        let levels = correct
            .iter()
            .enumerate()
            .map(|(i, &c)| LevelTally {
                level: i as u32 + 1,
                correct: c,
                unparseable: 0,
                q_total: q,
            })
            .collect();
        PerformanceCurve::new("E->I", TaskId::Btt, 1, levels, status).unwrap()
    }

    #[test]
    fn acc_values() {
        assert_eq!(acc(7, 10).unwrap(), 0.7);
        assert_eq!(acc(0, 10).unwrap(), 0.0);
        assert_eq!(acc(10, 10).unwrap(), 1.0);
        assert!(acc(11, 10).is_err());
        assert!(acc(0, 0).is_err());
    }

    #[test]
    fn auc_examples() {
        let c = curve(&[10, 10, 10, 0], 10, StreamStatus::Terminated);
        assert_eq!(c.acc_auc(), 3.0);
        assert_eq!(c.max_level(), 3);
        assert_eq!(c.cell(), "3/3");
        let c = curve(&[10, 8, 5, 0], 10, StreamStatus::Terminated);
        assert!((c.acc_auc() - 2.3).abs() < 1e-12);
        assert_eq!(c.cell(), "2.3/3");
        let zero = curve(&[0], 10, StreamStatus::Terminated);
        assert_eq!(zero.cell(), "0/0");
        let capped = curve(&[10, 10], 10, StreamStatus::Capped);
        assert_eq!(capped.cell(), ">=2/2");
        assert_eq!(format_auc(8.857), "8.857");
    }

    #[test]
    fn contiguity() {
        let levels = vec![
            LevelTally {
                level: 1,
                correct: 1,
                unparseable: 0,
                q_total: 1,
            },
            LevelTally {
                level: 3,
                correct: 0,
                unparseable: 0,
                q_total: 1,
            },
        ];
        assert!(matches!(
            PerformanceCurve::new("r", TaskId::Sp, 1, levels, StreamStatus::Terminated),
            Err(MetricsError::NonContiguousLevels(3, 1))
        ));
    }

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0, 4.5];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&x, &[1.0; 4]), Err(MetricsError::DegenerateVariance));
        assert_eq!(pearson(&[1.0], &[1.0]), Err(MetricsError::TooShort(1)));
    }
}
