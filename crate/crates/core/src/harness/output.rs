//! On-disk artifacts of a run and the `report` view that re-derives them.
//!
//! Layout under the output directory:
//!
//! ```text
//! manifest.txt
//! summary.csv  comparisons.csv  advisor_frequency.csv
//! train_return_agent<j>.svg  exec_win_agent<j>.svg
//! <arm>/train_seed_<s>.csv  <arm>/exec_seed_<s>.csv  <arm>/checkpoint_seed_<s>_agent_<j>.txt
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::frequency::{advisor_frequency_report, listening_fraction};
use super::metrics::{parse_metrics_csv, render_metrics_csv, MetricsRecord};
use super::plot::{bar_chart, line_plot, Series};
use super::run::ExperimentRun;
use super::stats::{mean, std_dev};
use super::summary::{summarize_records, ComparisonRow, RunSummary, SummaryRow};
use crate::error::{Error, Result};
use crate::tables::format_f64;
use crate::trainer::Phase;

const SUMMARY_HEADER: &str = "arm,phase,agent,episode,mean,std,win_rate,moving_average,n";
const COMPARISON_HEADER: &str =
    "a,b,agent,metric,window_first,window_last,mean_a,mean_b,t,df,p,degenerate";
const FREQUENCY_HEADER: &str = "arm,phase,agent,advisor,episode,fraction,opportunities";

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn render_summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.arm,
            r.phase.as_str(),
            r.agent,
            r.episode,
            format_f64(r.mean),
            format_f64(r.std),
            format_f64(r.win_rate),
            format_f64(r.moving_average),
            r.n
        );
    }
    out
}

pub fn parse_summary_csv(text: &str, origin: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(Error::parse(format!("{origin}:1"), "unexpected summary header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let loc = || format!("{origin}:{}", i + 2);
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::parse(loc(), "expected 9 fields"));
            }
            let bad = |k: usize| Error::parse(loc(), format!("bad field `{}`", f[k]));
            let real = |k: usize| f[k].parse::<f64>().map_err(|_| bad(k));
            let int = |k: usize| f[k].parse::<usize>().map_err(|_| bad(k));
            Ok(SummaryRow {
                arm: f[0].to_string(),
                phase: match f[1] {
                    "train" => Phase::Training,
                    "exec" => Phase::Execution,
                    _ => return Err(bad(1)),
                },
                agent: int(2)?,
                episode: int(3)?,
                mean: real(4)?,
                std: real(5)?,
                win_rate: real(6)?,
                moving_average: real(7)?,
                n: int(8)?,
            })
        })
        .collect()
}

fn render_comparisons_csv(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{COMPARISON_HEADER}\n");
    for r in rows {
        let c = &r.comparison;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.a,
            c.b,
            c.agent,
            r.metric.as_str(),
            c.window.0,
            c.window.1,
            format_f64(r.mean_a),
            format_f64(r.mean_b),
            format_f64(r.welch.t),
            format_f64(r.welch.df),
            format_f64(r.welch.p),
            u8::from(r.welch.degenerate)
        );
    }
    out
}

fn render_frequency_csv(arm: &str, records: &[MetricsRecord], out: &mut String) {
    for p in advisor_frequency_report(records) {
        let fraction = p.fraction.map_or_else(|| "NA".to_string(), format_f64);
        let _ = writeln!(
            out,
            "{arm},{},{},{},{},{fraction},{}",
            p.phase.as_str(),
            p.agent,
            p.advisor,
            p.episode,
            p.opportunities
        );
    }
}

fn seed_file(dir: &Path, arm: &str, phase: Phase, seed: u64) -> PathBuf {
    dir.join(arm).join(format!("{}_seed_{seed}.csv", phase.as_str()))
}

fn plots(rows: &[SummaryRow], arms: &[String], agents: usize) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for j in 0..agents {
        let series: Vec<Series> = arms
            .iter()
            .map(|arm| Series {
                label: arm.clone(),
                points: rows
                    .iter()
                    .filter(|r| &r.arm == arm && r.agent == j && r.phase == Phase::Training)
                    .map(|r| (r.episode as f64, r.mean, r.std))
                    .collect(),
            })
            .collect();
        if series.iter().any(|s| !s.points.is_empty()) {
            let title = format!("training return, agent {j}");
            files.push((
                format!("train_return_agent{j}.svg"),
                line_plot(&title, "episode", "return (mean ± std over seeds)", &series),
            ));
        }
        let bars: Vec<(String, f64, f64)> = arms
            .iter()
            .filter_map(|arm| {
                let rates: Vec<f64> = rows
                    .iter()
                    .filter(|r| &r.arm == arm && r.agent == j && r.phase == Phase::Execution)
                    .map(|r| r.win_rate)
                    .collect();
                (!rates.is_empty()).then(|| (arm.clone(), mean(&rates), std_dev(&rates)))
            })
            .collect();
        if !bars.is_empty() {
            let title = format!("execution win rate, agent {j}");
            files.push((format!("exec_win_agent{j}.svg"), bar_chart(&title, "win rate", &bars)));
        }
    }
    files
}

/// Write every artifact of `run` below `dir`.
pub fn emit_outputs(dir: &Path, run: &ExperimentRun, summary: &RunSummary) -> Result<()> {
    let cfg = &run.config;
    let arms: Vec<String> = cfg.arms.iter().map(|a| a.label.clone()).collect();
    let mut manifest = format!(
        "name={}\nsmoothing_window={}\narms={}\nseeds={}\n",
        cfg.name,
        cfg.smoothing_window,
        arms.join(","),
        cfg.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    );
    manifest.push_str(&format!("train_episodes={}\nexec_episodes={}\n", cfg.train_episodes, cfg.exec_episodes));
    write(&dir.join("manifest.txt"), &manifest)?;

    let mut freq = format!("{FREQUENCY_HEADER}\n");
    for arm in &arms {
        let mut records = Vec::new();
        for r in run.arm_runs(arm) {
            write(&seed_file(dir, arm, Phase::Training, r.seed), &render_metrics_csv(&r.train))?;
            if !r.exec.is_empty() {
                write(&seed_file(dir, arm, Phase::Execution, r.seed), &render_metrics_csv(&r.exec))?;
            }
            for (j, text) in r.checkpoints.iter().enumerate() {
                write(&dir.join(arm).join(format!("checkpoint_seed_{}_agent_{j}.txt", r.seed)), text)?;
            }
            records.extend(r.train.iter().chain(&r.exec).cloned());
        }
        render_frequency_csv(arm, &records, &mut freq);
    }
    write(&dir.join("advisor_frequency.csv"), &freq)?;
    write(&dir.join("summary.csv"), &render_summary_csv(&summary.rows))?;
    if !summary.comparisons.is_empty() {
        write(&dir.join("comparisons.csv"), &render_comparisons_csv(&summary.comparisons))?;
    }
    let agents = cfg.arms.iter().map(|a| a.agents.len()).max().unwrap_or(0);
    for (name, svg) in plots(&summary.rows, &arms, agents) {
        write(&dir.join(name), &svg)?;
    }
    Ok(())
}

fn manifest(dir: &Path) -> Result<BTreeMap<String, String>> {
    let path = dir.join("manifest.txt");
    let text = read(&path)?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::parse(path.display().to_string(), format!("bad line `{l}`")))
        })
        .collect()
}

/// Load every per-seed metrics file of one arm, seeds in manifest order.
pub fn load_arm_records(dir: &Path, arm: &str, seeds: &[u64]) -> Result<Vec<MetricsRecord>> {
    let mut out = Vec::new();
    for &seed in seeds {
        for phase in [Phase::Training, Phase::Execution] {
            let path = seed_file(dir, arm, phase, seed);
            if phase == Phase::Execution && !path.exists() {
                continue;
            }
            out.extend(parse_metrics_csv(&read(&path)?, &path.display().to_string())?);
        }
    }
    Ok(out)
}

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Recompute the summary of an output directory from its per-seed files,
/// check it against `summary.csv`, and render a short text report.
pub fn report(dir: &Path) -> Result<String> {
    let m = manifest(dir)?;
    let field = |k: &str| {
        m.get(k)
            .cloned()
            .ok_or_else(|| Error::parse(dir.join("manifest.txt").display().to_string(), format!("missing `{k}`")))
    };
    let window: usize = field("smoothing_window")?
        .parse()
        .map_err(|_| Error::parse("manifest.txt", "bad smoothing_window"))?;
    let arms: Vec<String> = field("arms")?.split(',').map(str::to_string).collect();
    let seeds: Vec<u64> = field("seeds")?
        .split(',')
        .map(|s| s.parse().map_err(|_| Error::parse("manifest.txt", format!("bad seed `{s}`"))))
        .collect::<Result<_>>()?;
    let stored_path = dir.join("summary.csv");
    let stored = parse_summary_csv(&read(&stored_path)?, &stored_path.display().to_string())?;

    let mut text = String::new();
    let _ = writeln!(text, "experiment {} ({} seeds)", field("name")?, seeds.len());
    let mut recomputed = Vec::new();
    for arm in &arms {
        let records = load_arm_records(dir, arm, &seeds)?;
        let rows = summarize_records(arm, &records, window);
        let agents = records.iter().map(|r| r.agent + 1).max().unwrap_or(0);
        for j in 0..agents {
            let train: Vec<&SummaryRow> = rows.iter().filter(|r| r.agent == j && r.phase == Phase::Training).collect();
            let exec: Vec<f64> = rows
                .iter()
                .filter(|r| r.agent == j && r.phase == Phase::Execution)
                .map(|r| r.win_rate)
                .collect();
            let _ = write!(text, "{arm} agent {j}:");
            if let Some(last) = train.last() {
                let all: Vec<f64> = train.iter().map(|r| r.mean).collect();
                let _ = write!(
                    text,
                    " train return mean {:.4}, final moving average {:.4} over {} episodes;",
                    mean(&all),
                    last.moving_average,
                    train.len()
                );
            }
            if !exec.is_empty() {
                let _ = write!(text, " exec win rate {:.4};", mean(&exec));
            }
            let width = records.iter().map(|r| r.selections.len()).max().unwrap_or(0);
            if let Some(last) = train.last().map(|r| r.episode) {
                let lo = last - last / 10 + 1;
                for k in 0..width {
                    if let Some(f) = listening_fraction(&records, j, k, lo..=last) {
                        let _ = write!(text, " advisor {k} listened {f:.3} in the last tenth;");
                    }
                }
            }
            text.push('\n');
        }
        recomputed.extend(rows);
    }
    if recomputed.len() != stored.len() {
        return Err(Error::contract(format!(
            "summary.csv has {} rows but the metrics give {}",
            stored.len(),
            recomputed.len()
        )));
    }
    for (a, b) in recomputed.iter().zip(&stored) {
        let same = a.arm == b.arm
            && (a.phase, a.agent, a.episode, a.n) == (b.phase, b.agent, b.episode, b.n)
            && close(a.mean, b.mean)
            && close(a.std, b.std)
            && close(a.win_rate, b.win_rate)
            && close(a.moving_average, b.moving_average);
        if !same {
            return Err(Error::contract(format!(
                "summary.csv row {} {} agent {} episode {} disagrees with the metrics files",
                b.arm,
                b.phase.as_str(),
                b.agent,
                b.episode
            )));
        }
    }
    let _ = writeln!(text, "summary.csv matches the per-seed metrics ({} rows)", stored.len());
    let cmp = dir.join("comparisons.csv");
    if cmp.exists() {
        for line in read(&cmp)?.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() == 12 {
                let num = |k: usize| f[k].parse::<f64>().unwrap_or(f64::NAN);
                let _ = writeln!(
                    text,
                    "{} vs {} agent {} {} episodes {}-{}: means {:.4} / {:.4}, t = {:.4}, p = {:.3e}{}",
                    f[0], f[1], f[2], f[3], f[4], f[5], num(6), num(7), num(8), num(10),
                    if f[11] == "1" { " (degenerate)" } else { "" }
                );
            }
        }
    }
    Ok(text)
}
