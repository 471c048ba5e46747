//! Per-episode metrics rows and their CSV form.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::tables::format_f64;
use crate::trainer::{EpisodeRecord, Phase};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub seed: u64,
    pub phase: Phase,
    /// 1-based within the phase.
    pub episode: usize,
    pub agent: usize,
    pub ret: f64,
    pub win: bool,
    pub eps_prime: f64,
    pub opportunities: u64,
    /// Times each advisor was followed, padded to the widest agent.
    pub selections: Vec<u64>,
}

pub fn records_from_episode(seed: u64, ep: &EpisodeRecord, width: usize) -> Vec<MetricsRecord> {
    ep.agents
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let mut selections = a.selections.clone();
            selections.resize(width, 0);
            MetricsRecord {
                seed,
                phase: ep.phase,
                episode: ep.episode + 1,
                agent: j,
                ret: a.ret,
                win: a.win,
                eps_prime: ep.eps_prime,
                opportunities: a.opportunities,
                selections,
            }
        })
        .collect()
}

fn header(width: usize) -> String {
    let mut h = String::from("seed,phase,episode,agent,return,win,eps_prime,adv_opportunities");
    for k in 0..width {
        let _ = write!(h, ",adv_selected_{k}");
    }
    h
}

/// CSV with one header line and LF endings; all records must share a width.
pub fn render_metrics_csv(records: &[MetricsRecord]) -> String {
    let width = records.first().map_or(0, |r| r.selections.len());
    let mut out = header(width);
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.seed,
            r.phase.as_str(),
            r.episode,
            r.agent,
            format_f64(r.ret),
            u8::from(r.win),
            format_f64(r.eps_prime),
            r.opportunities
        );
        for s in &r.selections {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_metrics_csv(text: &str, origin: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::parse(origin, "empty metrics file"))?;
    let cols: Vec<&str> = head.split(',').collect();
    let width = cols.len().saturating_sub(8);
    if cols.len() < 8 || head != header(width) {
        return Err(Error::parse(format!("{origin}:1"), "unexpected metrics header"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let loc = || format!("{origin}:{}", i + 2);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(Error::parse(loc(), format!("{} fields, expected {}", f.len(), cols.len())));
        }
        let bad = |what: &str, v: &str| Error::parse(loc(), format!("bad {what} `{v}`"));
        let int = |k: usize| f[k].parse::<u64>().map_err(|_| bad(cols[k], f[k]));
        let real = |k: usize| f[k].parse::<f64>().map_err(|_| bad(cols[k], f[k]));
        let phase = match f[1] {
            "train" => Phase::Training,
            "exec" => Phase::Execution,
            v => return Err(bad("phase", v)),
        };
        let win = match f[5] {
            "0" => false,
            "1" => true,
            v => return Err(bad("win", v)),
        };
        out.push(MetricsRecord {
            seed: int(0)?,
            phase,
            episode: int(2)? as usize,
            agent: int(3)? as usize,
            ret: real(4)?,
            win,
            eps_prime: real(6)?,
            opportunities: int(7)?,
            selections: (8..f.len()).map(int).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record() -> impl Strategy<Value = MetricsRecord> {
        (
            any::<u64>(),
            any::<bool>(),
            1usize..10_000,
            0usize..4,
            any::<f64>().prop_filter("finite", |x| x.is_finite()),
            any::<bool>(),
            0.0f64..=1.0,
            0u64..1000,
        )
            .prop_flat_map(|(seed, train, episode, agent, ret, win, eps, opp)| {
                proptest::collection::vec(0..=opp, 3).prop_map(move |selections| MetricsRecord {
                    seed,
                    phase: if train { Phase::Training } else { Phase::Execution },
                    episode,
                    agent,
                    ret,
                    win,
                    eps_prime: eps,
                    opportunities: opp,
                    selections,
                })
            })
    }

    proptest! {
        #[test]
        fn csv_roundtrip(records in proptest::collection::vec(record(), 0..20)) {
            let text = render_metrics_csv(&records);
            let back = parse_metrics_csv(&text, "mem").unwrap();
            if records.is_empty() {
                prop_assert!(back.is_empty());
            } else {
                prop_assert_eq!(back, records);
            }
        }
    }

    #[test]
    fn header_layout() {
        let r = MetricsRecord {
            seed: 3,
            phase: Phase::Execution,
            episode: 1,
            agent: 0,
            ret: -0.5,
            win: true,
            eps_prime: 0.0,
            opportunities: 0,
            selections: vec![0, 0],
        };
        let text = render_metrics_csv(&[r]);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "seed,phase,episode,agent,return,win,eps_prime,adv_opportunities,adv_selected_0,adv_selected_1"
        );
        assert_eq!(
            lines.next().unwrap(),
            "3,exec,1,0,-5.0000000000000000e-1,1,0.0000000000000000e0,0,0,0"
        );
        assert!(!text.contains('\r'));
    }
}
