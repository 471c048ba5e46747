//! How often each advisor was listened to when the advisor branch was open.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use super::metrics::MetricsRecord;
use crate::trainer::Phase;

/// Fraction of opportunities on which one advisor was followed, pooled over
/// seeds. `None` marks an episode without any opportunity.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPoint {
    pub phase: Phase,
    pub episode: usize,
    pub agent: usize,
    pub advisor: usize,
    pub fraction: Option<f64>,
    pub opportunities: u64,
}

/// One point per (phase, agent, advisor, episode), in that sort order.
pub fn advisor_frequency_report(records: &[MetricsRecord]) -> Vec<FrequencyPoint> {
    let mut pooled: BTreeMap<(Phase, usize, usize), (u64, Vec<u64>)> = BTreeMap::new();
    for r in records {
        let slot = pooled
            .entry((r.phase, r.agent, r.episode))
            .or_insert_with(|| (0, vec![0; r.selections.len()]));
        slot.0 += r.opportunities;
        if slot.1.len() < r.selections.len() {
            slot.1.resize(r.selections.len(), 0);
        }
        for (acc, s) in slot.1.iter_mut().zip(&r.selections) {
            *acc += s;
        }
    }
    let mut out = Vec::new();
    for (&(phase, agent, episode), (opp, sel)) in &pooled {
        for (advisor, &s) in sel.iter().enumerate() {
            out.push(FrequencyPoint {
                phase,
                episode,
                agent,
                advisor,
                fraction: (*opp > 0).then(|| s as f64 / *opp as f64),
                opportunities: *opp,
            });
        }
    }
    out.sort_by_key(|p| (p.phase, p.agent, p.advisor, p.episode));
    out
}

/// Pooled fraction over a window of training episodes for one seed's records
/// (or several), or `None` when the window holds no opportunity.
pub fn listening_fraction(
    records: &[MetricsRecord],
    agent: usize,
    advisor: usize,
    episodes: RangeInclusive<usize>,
) -> Option<f64> {
    let (mut opp, mut sel) = (0u64, 0u64);
    for r in records {
        if r.phase == Phase::Training && r.agent == agent && episodes.contains(&r.episode) {
            opp += r.opportunities;
            sel += r.selections.get(advisor).copied().unwrap_or(0);
        }
    }
    (opp > 0).then(|| sel as f64 / opp as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisors::{Advisor, AlwaysAdvisor, UniformAdvisor};
    use crate::game::ToyAdvisorGrid;
    use crate::harness::metrics::records_from_episode;
    use crate::matlql::{MaTlql, MaTlqlConfig};
    use crate::schedule::{ExplorationPolicy, PprSchedule};
    use crate::trainer::{AgentSlot, OthersMode, Trainer};

    fn toy_records(advisors: Vec<Box<dyn Advisor>>, eta: f64, ppr: PprSchedule, episodes: usize) -> Vec<MetricsRecord> {
        let env = ToyAdvisorGrid::default();
        let config = MaTlqlConfig {
            exploration: ExplorationPolicy { epsilon: 0.1, eta },
            ..MaTlqlConfig::default()
        };
        let width = advisors.len();
        let learner = MaTlql::new(&env, 0, width, config).unwrap();
        let mut trainer = Trainer::new(
            Box::new(env),
            vec![AgentSlot::new(Box::new(learner), advisors)],
            ppr,
            OthersMode::Observed,
            11,
        );
        (0..episodes)
            .flat_map(|_| {
                let ep = trainer.run_episode(Phase::Training).unwrap();
                records_from_episode(11, &ep, width)
            })
            .collect()
    }

    #[test]
    fn single_advisor_is_always_listened_to() {
        let recs = toy_records(vec![Box::new(UniformAdvisor)], 0.9, PprSchedule::new(0.5, 1000).unwrap(), 200);
        let report = advisor_frequency_report(&recs);
        assert!(report.iter().any(|p| p.fraction.is_some()));
        for p in &report {
            match p.fraction {
                Some(f) => assert_eq!(f, 1.0),
                None => assert_eq!(p.opportunities, 0),
            }
        }
    }

    #[test]
    fn uniform_choice_among_four() {
        // eta = 0 sends every advisor-branch step to a uniformly drawn advisor
        let advisors: Vec<Box<dyn Advisor>> = (0..4).map(|_| Box::new(AlwaysAdvisor(0)) as Box<dyn Advisor>).collect();
        let recs = toy_records(advisors, 0.0, PprSchedule::new(1.0, 1_000_000).unwrap(), 6000);
        let total: u64 = recs.iter().map(|r| r.opportunities).sum();
        assert!(total >= 10_000, "{total}");
        let sigma = (0.25 * 0.75 / total as f64).sqrt();
        for k in 0..4 {
            let f = listening_fraction(&recs, 0, k, 1..=usize::MAX).unwrap();
            assert!((f - 0.25).abs() < 3.0 * sigma, "advisor {k}: {f}");
        }
    }

    #[test]
    fn closed_advisor_branch_gives_gaps() {
        let recs = toy_records(vec![Box::new(UniformAdvisor), Box::new(AlwaysAdvisor(1))], 0.9, PprSchedule::off(), 50);
        let report = advisor_frequency_report(&recs);
        assert_eq!(report.len(), 100);
        assert!(report.iter().all(|p| p.fraction.is_none()));
        assert_eq!(listening_fraction(&recs, 0, 0, 1..=50), None);
    }

    #[test]
    fn pooling_across_seeds() {
        let rec = |seed, opp, sel: Vec<u64>| MetricsRecord {
            seed,
            phase: Phase::Training,
            episode: 1,
            agent: 0,
            ret: 0.0,
            win: false,
            eps_prime: 1.0,
            opportunities: opp,
            selections: sel,
        };
        let recs = [rec(1, 4, vec![3, 1]), rec(2, 0, vec![0, 0]), rec(3, 6, vec![1, 5])];
        let report = advisor_frequency_report(&recs);
        assert_eq!(report[0].fraction, Some(0.4));
        assert_eq!(report[1].fraction, Some(0.6));
    }
}
