//! Cross-seed aggregates and configured arm comparisons.

use std::collections::BTreeMap;

use super::config::Comparison;
use super::metrics::MetricsRecord;
use super::run::ExperimentRun;
use super::stats::{mean, std_dev, welch_t_test, WelchResult};
use crate::error::Result;
use crate::trainer::Phase;

/// Mean and sample deviation across seeds for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub arm: String,
    pub phase: Phase,
    pub agent: usize,
    pub episode: usize,
    pub mean: f64,
    pub std: f64,
    pub win_rate: f64,
    /// Trailing mean of `mean` over the smoothing window, within the phase.
    pub moving_average: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonMetric {
    /// Per-seed mean training return over the comparison window.
    TrainReturn,
    /// Per-seed win rate over the execution phase.
    ExecWin,
}

impl ComparisonMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            ComparisonMetric::TrainReturn => "train_return",
            ComparisonMetric::ExecWin => "exec_win",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub comparison: Comparison,
    pub metric: ComparisonMetric,
    pub mean_a: f64,
    pub mean_b: f64,
    pub welch: WelchResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<SummaryRow>,
    pub comparisons: Vec<ComparisonRow>,
}

/// Rows for one arm, sorted by (phase, agent, episode).
pub fn summarize_records(arm: &str, records: &[MetricsRecord], window: usize) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Phase, usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((r.phase, r.agent, r.episode)).or_default();
        g.0.push(r.ret);
        g.1 += usize::from(r.win);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((phase, agent, episode), (rets, wins))| SummaryRow {
            arm: arm.to_string(),
            phase,
            agent,
            episode,
            mean: mean(&rets),
            std: std_dev(&rets),
            win_rate: wins as f64 / rets.len() as f64,
            moving_average: f64::NAN,
            n: rets.len(),
        })
        .collect();
    let mut start = 0;
    while start < rows.len() {
        let key = (rows[start].phase, rows[start].agent);
        let end = start + rows[start..].iter().take_while(|r| (r.phase, r.agent) == key).count();
        for i in start..end {
            let lo = (i + 1).saturating_sub(window).max(start);
            let means: Vec<f64> = rows[lo..=i].iter().map(|r| r.mean).collect();
            rows[i].moving_average = mean(&means);
        }
        start = end;
    }
    rows
}

/// Per-seed samples of a comparison metric for one arm, in seed order.
pub fn comparison_samples(
    run: &ExperimentRun,
    arm: &str,
    agent: usize,
    metric: ComparisonMetric,
    window: (usize, usize),
) -> Vec<f64> {
    run.arm_runs(arm)
        .filter_map(|r| {
            let values: Vec<f64> = match metric {
                ComparisonMetric::TrainReturn => r
                    .train
                    .iter()
                    .filter(|m| m.agent == agent && (window.0..=window.1).contains(&m.episode))
                    .map(|m| m.ret)
                    .collect(),
                ComparisonMetric::ExecWin => r
                    .exec
                    .iter()
                    .filter(|m| m.agent == agent)
                    .map(|m| f64::from(u8::from(m.win)))
                    .collect(),
            };
            (!values.is_empty()).then(|| mean(&values))
        })
        .collect()
}

pub fn summarize(run: &ExperimentRun) -> Result<RunSummary> {
    let window = run.config.smoothing_window;
    let mut rows = Vec::new();
    for arm in &run.config.arms {
        let records: Vec<MetricsRecord> = run
            .arm_runs(&arm.label)
            .flat_map(|r| r.train.iter().chain(&r.exec).cloned())
            .collect();
        rows.extend(summarize_records(&arm.label, &records, window));
    }
    let mut comparisons = Vec::new();
    for c in &run.config.comparisons {
        let mut metrics = vec![ComparisonMetric::TrainReturn];
        if run.config.exec_episodes > 0 {
            metrics.push(ComparisonMetric::ExecWin);
        }
        for metric in metrics {
            let a = comparison_samples(run, &c.a, c.agent, metric, c.window);
            let b = comparison_samples(run, &c.b, c.agent, metric, c.window);
            comparisons.push(ComparisonRow {
                comparison: c.clone(),
                metric,
                mean_a: mean(&a),
                mean_b: mean(&b),
                welch: welch_t_test(&a, &b)?,
            });
        }
    }
    Ok(RunSummary { rows, comparisons })
}
