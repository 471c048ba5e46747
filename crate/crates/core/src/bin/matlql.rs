use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, RngCore};

use matlql::game::{Environment, JointAction, StateId};
use matlql::harness::{self, ExperimentConfig};
use matlql::tables::format_f64;
use matlql::theory::{self, BoundInputs, OracleKind};
use matlql::{Error, Result};

/// Multi-agent two-level Q-learning experiments and calculators.
#[derive(Parser)]
#[command(name = "matlql", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and execute every arm of an experiment config.
    Run {
        config: PathBuf,
        /// Output directory; defaults to `out/<name>` next to the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the scripted toy-grid trace and check every table value.
    GoldenTrace,
    /// Solve an experiment's matrix game for its equilibrium Q values.
    NashOracle {
        config: PathBuf,
        /// Arm whose environment is solved; defaults to the first.
        #[arg(long)]
        arm: Option<String>,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// Also write `agent,state,joint,q,v` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Monte Carlo covering time under a uniform-random joint policy.
    CoveringTime {
        config: PathBuf,
        #[arg(long)]
        arm: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 10_000_000)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Convergence-time bound expressions for both rate schedules.
    ///
    /// Parameters are `key=value` words: L, qmax, states, actions, delta,
    /// eps, gamma, omega (default 0.77), psi (default 0.712).
    Bounds {
        params: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Summarize an output directory and check it against its metrics files.
    Report { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    IdenticalInterest,
    ZeroSum,
}

enum Outcome {
    Ok,
    Mismatch,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn arm_env(config: &Path, arm: Option<&str>) -> Result<Box<dyn Environment>> {
    let cfg = ExperimentConfig::load(config)?;
    let chosen = match arm {
        Some(label) => cfg
            .arms
            .iter()
            .find(|a| a.label == label)
            .ok_or_else(|| Error::config(format!("no arm named `{label}`")))?,
        None => &cfg.arms[0],
    };
    chosen.env.build()
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(config)?;
    let dir = out.unwrap_or_else(|| {
        config.parent().unwrap_or(Path::new(".")).join("out").join(&cfg.name)
    });
    let result = harness::run_experiment(&cfg)?;
    let summary = harness::summarize(&result)?;
    harness::emit_outputs(&dir, &result, &summary)?;
    print!("{}", harness::report(&dir)?);
    println!("outputs written to {}", dir.display());
    Ok(Outcome::Ok)
}

fn nash_oracle(config: &Path, arm: Option<&str>, kind: Option<Kind>, csv: Option<PathBuf>) -> Result<Outcome> {
    let env = arm_env(config, arm)?;
    let oracle = |k| theory::nash_q_oracle(env.as_ref(), k);
    let (kind, sol) = match kind {
        Some(Kind::IdenticalInterest) => (OracleKind::IdenticalInterest, oracle(OracleKind::IdenticalInterest)?),
        Some(Kind::ZeroSum) => (OracleKind::ZeroSum, oracle(OracleKind::ZeroSum)?),
        None => match oracle(OracleKind::IdenticalInterest) {
            Ok(sol) => (OracleKind::IdenticalInterest, sol),
            Err(_) => (OracleKind::ZeroSum, oracle(OracleKind::ZeroSum)?),
        },
    };
    let residual = theory::bellman_residual(env.as_ref(), kind, &sol)?;
    println!("converged after {} sweeps, fixed-point residual {residual:.3e}", sol.sweeps);
    let space = sol.joint_space().clone();
    let mut rows = String::from("agent,state,joint,q,v\n");
    for s in 0..env.num_states() {
        let policy = sol.stage_policy[s]
            .as_ref()
            .map_or_else(|| "-".to_string(), JointAction::to_string);
        let values: Vec<String> = (0..env.num_agents()).map(|j| format!("{:.6}", sol.v[j][s])).collect();
        println!("state {s}: stage joint action {policy}, values [{}]", values.join(", "));
        for j in 0..env.num_agents() {
            for (k, ja) in space.iter().enumerate() {
                let _ = writeln!(rows, "{j},{s},{k},{},{}", format_f64(sol.q_value(j, s, &ja)), format_f64(sol.v[j][s]));
            }
        }
    }
    if let Some(path) = csv {
        write_file(&path, &rows)?;
    }
    Ok(Outcome::Ok)
}

fn covering_time(config: &Path, arm: Option<&str>, trials: usize, cap: usize, seed: u64, csv: Option<PathBuf>) -> Result<Outcome> {
    let mut env = arm_env(config, arm)?;
    let sizes = env.action_space_sizes().to_vec();
    let mut policy = |_: StateId, rng: &mut dyn RngCore| {
        JointAction(sizes.iter().map(|&n| rng.gen_range(0..n)).collect())
    };
    let est = theory::estimate_covering_time(env.as_mut(), &mut policy, trials, cap, seed)?;
    println!(
        "covering time over {} trials: max {}, mean {:.2}",
        est.trials.len(),
        est.max,
        est.mean()
    );
    if let Some(path) = csv {
        let mut text = String::from("trial,steps\n");
        for (i, t) in est.trials.iter().enumerate() {
            let _ = writeln!(text, "{i},{t}");
        }
        write_file(&path, &text)?;
    }
    Ok(Outcome::Ok)
}

fn bounds(params: &[String], csv: Option<PathBuf>) -> Result<Outcome> {
    let mut x = BoundInputs {
        covering_time: f64::NAN,
        q_max: f64::NAN,
        state_count: f64::NAN,
        action_product: f64::NAN,
        delta: f64::NAN,
        epsilon: f64::NAN,
        gamma: f64::NAN,
        omega: 0.77,
        psi: theory::PSI_MAX,
    };
    let mut errors = Vec::new();
    for p in params {
        let Some((k, v)) = p.split_once('=') else {
            errors.push(format!("`{p}` is not key=value"));
            continue;
        };
        let Ok(v) = v.parse::<f64>() else {
            errors.push(format!("{k}: cannot parse `{v}`"));
            continue;
        };
        let slot = match k {
            "L" => &mut x.covering_time,
            "qmax" => &mut x.q_max,
            "states" => &mut x.state_count,
            "actions" => &mut x.action_product,
            "delta" => &mut x.delta,
            "eps" => &mut x.epsilon,
            "gamma" => &mut x.gamma,
            "omega" => &mut x.omega,
            "psi" => &mut x.psi,
            _ => {
                errors.push(format!("unknown parameter `{k}`"));
                continue;
            }
        };
        *slot = v;
    }
    for (k, v) in [
        ("L", x.covering_time),
        ("qmax", x.q_max),
        ("states", x.state_count),
        ("actions", x.action_product),
        ("delta", x.delta),
        ("eps", x.epsilon),
        ("gamma", x.gamma),
    ] {
        if v.is_nan() {
            errors.push(format!("missing `{k}`"));
        }
    }
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let as_config = |e: Error| match e {
        Error::Domain(m) => Error::config(m),
        e => e,
    };
    let ln_poly = theory::ln_polynomial_rate_bound(&x).map_err(as_config)?;
    let ln_lin = theory::ln_linear_rate_bound(&x).map_err(as_config)?;
    let iters = theory::iterations_for_accuracy(x.q_max, x.beta(), x.epsilon).map_err(as_config)?;
    println!("beta = {:.6}", x.beta());
    println!("iterations to reach eps: {iters}");
    println!(
        "polynomial rate (omega = {}): T ~ {:.6e} (ln {:.6})",
        x.omega,
        ln_poly.exp(),
        ln_poly
    );
    println!("linear rate (psi = {}): T ~ {:.6e} (ln {:.6})", x.psi, ln_lin.exp(), ln_lin);
    println!("orders of magnitude only; asymptotic constants are taken as 1");
    if let Some(path) = csv {
        let text = format!(
            "quantity,value,ln_value\npolynomial,{},{}\nlinear,{},{}\niterations,{iters},{}\n",
            format_f64(ln_poly.exp()),
            format_f64(ln_poly),
            format_f64(ln_lin.exp()),
            format_f64(ln_lin),
            format_f64((iters as f64).ln())
        );
        write_file(&path, &text)?;
    }
    Ok(Outcome::Ok)
}

fn golden() -> Result<Outcome> {
    let report = harness::golden_trace()?;
    println!("{report}");
    Ok(if report.passed() { Outcome::Ok } else { Outcome::Mismatch })
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::GoldenTrace => golden(),
        Command::NashOracle { config, arm, kind, csv } => nash_oracle(&config, arm.as_deref(), kind, csv),
        Command::CoveringTime { config, arm, trials, cap, seed, csv } => {
            covering_time(&config, arm.as_deref(), trials, cap, seed, csv)
        }
        Command::Bounds { params, csv } => bounds(&params, csv),
        Command::Report { dir } => {
            print!("{}", harness::report(&dir)?);
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Mismatch) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
