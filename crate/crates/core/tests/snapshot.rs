//! Frozen-table advisors built from written checkpoints: more training
//! should give a better advisor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use matlql::advisors::{AdviceContext, Advisor, SnapshotAdvisor};
use matlql::game::{Environment, JointAction};
use matlql::harness::{emit_outputs, run_experiment, summarize, ExperimentConfig};

const CONFIG: &str = "
name = pursuit-snapshots
env = pursuit width=4 height=4 pursuers=2 horizon=40
seeds = 1-3
train_episodes = 2000
checkpoints = true
rate = constant 0.2
epsilon = 0.2
ppr.initial = 0
agent.0.algorithm = independent-q
agent.1.algorithm = independent-q
";

/// Mean team return of every agent following its own snapshot greedily.
fn rollout(env: &mut dyn Environment, advisors: &mut [SnapshotAdvisor], episodes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = env.joint_space();
    let sizes = env.action_space_sizes().to_vec();
    let layout = env.grid();
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut s = env.reset(&mut rng);
        let mut last = vec![0; sizes.len()];
        for _ in 0..env.horizon().unwrap_or(100) {
            let actions: Vec<usize> = advisors
                .iter_mut()
                .enumerate()
                .map(|(j, a)| {
                    let ctx = AdviceContext {
                        agent: j,
                        state: s,
                        num_actions: sizes[j],
                        last_joint: &last,
                        space: &space,
                        layout: layout.as_ref(),
                    };
                    a.recommend(&ctx, &mut rng)
                })
                .collect();
            let out = env.step(s, &JointAction(actions.clone()), &mut rng).unwrap();
            total += out.rewards.iter().sum::<f64>();
            last = actions;
            if out.terminal {
                break;
            }
            s = out.next_state;
        }
    }
    total / episodes as f64
}

#[test]
fn longer_trained_snapshot_advises_better() {
    let long_cfg = ExperimentConfig::parse(CONFIG, "snapshot.cfg", std::path::Path::new(".")).unwrap();
    let short_cfg = ExperimentConfig { train_episodes: 500, ..long_cfg.clone() };

    let dir = tempfile::tempdir().unwrap();
    let mut means = Vec::new();
    for (tag, cfg) in [("short", &short_cfg), ("long", &long_cfg)] {
        let run = run_experiment(cfg).unwrap();
        let out = dir.path().join(tag);
        emit_outputs(&out, &run, &summarize(&run).unwrap()).unwrap();
        let mut env = cfg.arms[0].env.build().unwrap();
        let sizes = env.action_space_sizes().to_vec();
        let mut score = 0.0;
        for &seed in &cfg.seeds {
            let mut advisors: Vec<SnapshotAdvisor> = (0..sizes.len())
                .map(|j| {
                    let path = out.join("default").join(format!("checkpoint_seed_{seed}_agent_{j}.txt"));
                    SnapshotAdvisor::load(&path, sizes[j]).unwrap()
                })
                .collect();
            score += rollout(env.as_mut(), &mut advisors, 100, 1000 + seed);
        }
        means.push(score / cfg.seeds.len() as f64);
    }
    eprintln!("greedy snapshot return: 500 episodes {:.4}, 2000 episodes {:.4}", means[0], means[1]);
    assert!(means[1] > means[0], "{means:?}");
}
