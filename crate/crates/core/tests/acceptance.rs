//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. The trend criteria share a single experiment bundle (five variants
//! x three seeds x 150 epochs) computed once.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use switch_ddq::agent::{run_episode, ExperienceSource, ReplayBuffer};
use switch_ddq::config::{RunConfig, VariantKind};
use switch_ddq::domain::{
    AgentAction, DialogueStatus, GoalCorpus, KnowledgeBase, AGENT_ACTION_COUNT, MAX_TURNS,
    STATE_DIM, USER_RESPONSE_COUNT,
};
use switch_ddq::nn::{
    finite_diff_check, Activation, DenseLayer, DenseNet, GradientSet, LstmNet, OptimizerState,
    Parameterized,
};
use switch_ddq::pipeline::{metrics, run_experiment, RunResult};
use switch_ddq::sampler::CategoryStats;
use switch_ddq::stats::{permutation_test_with, PermutationMethod};
use switch_ddq::switcher::{auc, train_switcher, DialogueStore, Switcher, SwitcherHyper, TurnRecord};
use switch_ddq::world::{normalize_reward, WorldModel};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------- 1 ----

fn q_network_fd(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = switch_ddq::agent::new_q_network(&mut rng);
    let batch: Vec<(Vec<f64>, usize, f64)> = (0..4)
        .map(|_| {
            let s: Vec<f64> = (0..STATE_DIM)
                .map(|_| if rng.random_range(0.0..1.0) < 0.2 { 1.0 } else { 0.0 })
                .collect();
            (s, rng.random_range(0..AGENT_ACTION_COUNT), rng.random_range(-41.0..79.0))
        })
        .collect();

    let mut grads = GradientSet::zeros_like(&q);
    for (s, a, y) in &batch {
        let (values, cache) = q.forward(s).unwrap();
        let mut d = vec![0.0; values.len()];
        d[*a] = 2.0 * (values[*a] - y) / batch.len() as f64;
        q.backward_into(&cache, &d, &mut grads).unwrap();
    }
    let loss = |net: &DenseNet| {
        batch
            .iter()
            .map(|(s, a, y)| {
                let v = net.output(s).unwrap()[*a];
                (v - y) * (v - y)
            })
            .sum::<f64>()
            / batch.len() as f64
    };
    finite_diff_check(&mut q, &grads, loss, 1e-4).unwrap()
}

fn world_model_fd(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = WorldModel::new(&mut rng);
    let batch: Vec<(Vec<f64>, usize, usize, f64, bool)> = (0..3)
        .map(|_| {
            let s: Vec<f64> = (0..STATE_DIM)
                .map(|_| if rng.random_range(0.0..1.0) < 0.2 { 1.0 } else { 0.0 })
                .collect();
            (
                s,
                rng.random_range(0..AGENT_ACTION_COUNT),
                rng.random_range(0..USER_RESPONSE_COUNT),
                if rng.random_range(0.0..1.0) < 0.3 { 79.0 } else { -1.0 },
                rng.random_range(0.0..1.0) < 0.3,
            )
        })
        .collect();

    let mut grads = GradientSet::zeros_like(&model);
    let scale = 1.0 / batch.len() as f64;
    for (s, a, ua, r, t) in &batch {
        let (pred, cache) = model.forward(s, *a).unwrap();
        let mut d_probs = vec![0.0; USER_RESPONSE_COUNT];
        d_probs[*ua] = -scale / pred.user_probs[*ua];
        let y_t = if *t { 1.0 } else { 0.0 };
        let out_grads = switch_ddq::world::WorldOutputGrads {
            d_user_probs: d_probs,
            d_reward: 2.0 * (pred.reward - normalize_reward(*r)) * scale,
            d_terminal: (-y_t / pred.terminal + (1.0 - y_t) / (1.0 - pred.terminal)) * scale,
        };
        model.backward_into(&cache, &out_grads, &mut grads).unwrap();
    }
    let loss = |m: &WorldModel| {
        batch
            .iter()
            .map(|(s, a, ua, r, t)| {
                let pred = m.predict(s, *a).unwrap();
                let y_t = if *t { 1.0 } else { 0.0 };
                let diff = pred.reward - normalize_reward(*r);
                -pred.user_probs[*ua].ln() + diff * diff
                    - (y_t * pred.terminal.ln() + (1.0 - y_t) * (1.0 - pred.terminal).ln())
            })
            .sum::<f64>()
            / batch.len() as f64
    };
    finite_diff_check(&mut model, &grads, loss, 1e-4).unwrap()
}

// The switcher architecture (linear encoder, gated LSTM, sigmoid head) at
// reduced width so central differences over every parameter stay inside
// the one-minute budget.
fn switcher_fd(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = LstmNet::new(switch_ddq::switcher::TURN_FEATURE_DIM, 6, 5, &mut rng);
    let seq: Vec<Vec<f64>> = (0..5)
        .map(|_| {
            (0..switch_ddq::switcher::TURN_FEATURE_DIM)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let labels: Vec<f64> = (0..5)
        .map(|_| if rng.random_range(0.0..1.0) < 0.5 { 0.0 } else { 1.0 })
        .collect();

    let (scores, cache) = net.forward(&seq).unwrap();
    let n = scores.len() as f64;
    let score_grads: Vec<f64> = scores
        .iter()
        .zip(&labels)
        .map(|(&s, &y)| (-(y / s) + (1.0 - y) / (1.0 - s)) / n)
        .collect();
    let grads = net.backward(&cache, &score_grads).unwrap();
    let loss = |m: &LstmNet| {
        let scores = m.scores(&seq).unwrap();
        scores
            .iter()
            .zip(&labels)
            .map(|(&s, &y)| -(y * s.ln() + (1.0 - y) * (1.0 - s).ln()))
            .sum::<f64>()
            / n
    };
    finite_diff_check(&mut net, &grads, loss, 1e-4).unwrap()
}

#[test]
fn criterion_01_gradient_correctness() {
    let start = std::time::Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 1..=5 {
        worst = worst.max(q_network_fd(seed));
        worst = worst.max(world_model_fd(100 + seed));
        worst = worst.max(switcher_fd(200 + seed));
    }
    let elapsed = start.elapsed();
    report(
        "1 (gradient correctness)",
        worst < 1e-4 && elapsed.as_secs() < 60,
        &format!("max relative error {worst:.3e}, runtime {elapsed:.2?}"),
    );
}

// ---------------------------------------------------------------- 2 ----

#[test]
fn criterion_02_sampler_law() {
    // Lopsided case: f = [0.9, 0.1], n = [1000, 1000], N = 2000.
    let mut lopsided = CategoryStats::with_categories(2);
    for i in 0..995 {
        lopsided
            .update(0, if i < 900 { DialogueStatus::Failure } else { DialogueStatus::Success })
            .unwrap();
        lopsided
            .update(1, if i < 100 { DialogueStatus::Failure } else { DialogueStatus::Success })
            .unwrap();
    }
    assert_eq!(lopsided.total(), 2000);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 10_000;
    let zero = (0..draws)
        .filter(|_| lopsided.sample_category(&mut rng) == 0)
        .count();
    let lopsided_freq = zero as f64 / draws as f64;

    // Symmetric case: f = [0.5, 0.5], n = [100, 100].
    let mut symmetric = CategoryStats::with_categories(2);
    for c in 0..2 {
        for i in 0..95 {
            symmetric
                .update(c, if i < 50 { DialogueStatus::Failure } else { DialogueStatus::Success })
                .unwrap();
        }
    }
    let zero = (0..draws)
        .filter(|_| symmetric.sample_category(&mut rng) == 0)
        .count();
    let symmetric_freq = zero as f64 / draws as f64;

    report(
        "2 (sampler law)",
        lopsided_freq >= 0.999 && (symmetric_freq - 0.5).abs() < 0.02,
        &format!("lopsided {lopsided_freq:.4}, symmetric {symmetric_freq:.4}"),
    );
}

// ---------------------------------------------------------------- 3 ----

#[test]
fn criterion_03_reward_accounting() {
    let kb = KnowledgeBase::generate(301, 100);
    let corpus = GoalCorpus::generate(&kb, 302, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut capped = 0usize;
    let mut ok = true;
    let mut detail = String::new();
    for i in 0..1000 {
        let goal = corpus.goals[rng.random_range(0..corpus.goals.len())].clone();
        let record = run_episode(&kb, goal, |_, _| {
            Ok(AgentAction::from_index(rng.random_range(0..AGENT_ACTION_COUNT)).unwrap())
        })
        .unwrap();
        let t = record.outcome.turns as f64;
        let expected = match record.outcome.status {
            DialogueStatus::Success => 80.0 - (t - 1.0),
            DialogueStatus::Failure => -40.0 - (t - 1.0),
        };
        if record.outcome.total_reward != expected || record.outcome.turns > MAX_TURNS {
            ok = false;
            detail = format!("episode {i} totals {}", record.outcome.total_reward);
            break;
        }
        // A max-length episode is one whose transition count hits the cap;
        // it must report exactly T = 40.
        if record.experiences.len() >= MAX_TURNS - 1 {
            capped += 1;
            if record.outcome.turns != MAX_TURNS {
                ok = false;
                detail = format!("capped episode reported T = {}", record.outcome.turns);
                break;
            }
        }
    }
    if ok && capped == 0 {
        ok = false;
        detail = "no max-length episode observed".into();
    }
    report(
        "3 (reward accounting)",
        ok,
        &if detail.is_empty() {
            format!("1000 episodes, {capped} at the cap, all totals exact")
        } else {
            detail
        },
    );
}

// ---------------------------------------------------------------- 4 ----

#[test]
fn criterion_04_switcher_separation() {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let random_dialogue = |rng: &mut ChaCha8Rng, reward: f64| -> Vec<TurnRecord> {
        (0..6)
            .map(|_| TurnRecord {
                state: (0..STATE_DIM)
                    .map(|_| if rng.random_range(0.0..1.0) < 0.2 { 1.0 } else { 0.0 })
                    .collect(),
                action: rng.random_range(0..AGENT_ACTION_COUNT),
                reward,
            })
            .collect()
    };

    // Separable corpus: the reward feature is +1 for real, -1 for simulated.
    let mut switcher = Switcher::new(&mut rng);
    let mut real = DialogueStore::new(10_000);
    let mut sim = DialogueStore::new(10_000);
    for _ in 0..20 {
        let d = random_dialogue(&mut rng, 80.0);
        real.push(d);
        let d = random_dialogue(&mut rng, -80.0);
        sim.push(d);
    }
    let hyper = SwitcherHyper::default();
    let mut opt = OptimizerState::new(switcher.network(), 0.001);
    for _ in 0..500 {
        train_switcher(&mut switcher, &real, &sim, &hyper, &mut opt, &mut rng)
            .unwrap()
            .unwrap();
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 0..20 {
        pos.extend(switcher.score_turns(real.get(i)).unwrap());
        neg.extend(switcher.score_turns(sim.get(i)).unwrap());
    }
    let separable_auc = auc(&pos, &neg);

    // Identical distributions: scores concentrate near one half.
    let mut switcher = Switcher::new(&mut rng);
    let mut real = DialogueStore::new(10_000);
    let mut sim = DialogueStore::new(10_000);
    for _ in 0..20 {
        let d = random_dialogue(&mut rng, -1.0);
        real.push(d);
        let d = random_dialogue(&mut rng, -1.0);
        sim.push(d);
    }
    let mut opt = OptimizerState::new(switcher.network(), 0.001);
    for _ in 0..500 {
        train_switcher(&mut switcher, &real, &sim, &hyper, &mut opt, &mut rng)
            .unwrap()
            .unwrap();
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..20 {
        for &s in &switcher.score_turns(real.get(i)).unwrap() {
            sum += s;
            count += 1;
        }
        for &s in &switcher.score_turns(sim.get(i)).unwrap() {
            sum += s;
            count += 1;
        }
    }
    let mean = sum / count as f64;

    report(
        "4 (switcher separation)",
        separable_auc >= 0.95 && (0.4..=0.6).contains(&mean),
        &format!("separable AUC {separable_auc:.4}, indistinguishable mean {mean:.4}"),
    );
}

// ---------------------------------------------------------------- 8 ----

#[test]
fn criterion_08_permutation_exactness() {
    let a = vec![true; 10];
    let b = vec![false; 10];
    let p = permutation_test_with(&a, &b, PermutationMethod::Exact, 0, 0).unwrap();
    let exact_ok = p == 1.0 / 184_756.0;

    let same = vec![true, false, true, false, true, true, false, false];
    let p_same = permutation_test_with(&same, &same, PermutationMethod::Exact, 0, 0).unwrap();

    report(
        "8 (permutation exactness)",
        exact_ok && p_same >= 0.5,
        &format!("all-true-vs-all-false p = {p:.6e}, identical-lists p = {p_same:.3}"),
    );
}

// ----------------------------------------------------------- 5/6/7/9 ----

struct TrendBundle {
    runs: Vec<RunResult>,
    rerun_csv_matches: bool,
}

fn trend_config() -> RunConfig {
    RunConfig {
        variants: vec![
            VariantKind::Dqn,
            VariantKind::DdqK(5),
            VariantKind::DdqK(20),
            VariantKind::SwitchDdq,
            VariantKind::SuDdq,
        ],
        seeds: vec![1, 2, 3],
        max_epochs: 150,
        eval_interval: 5,
        eval_dialogues: 50,
        ..RunConfig::default()
    }
}

fn trend_bundle() -> &'static TrendBundle {
    static BUNDLE: OnceLock<TrendBundle> = OnceLock::new();
    BUNDLE.get_or_init(|| {
        let cfg = trend_config();
        let first = run_experiment(&cfg).expect("trend experiment");
        // Determinism check: re-run the three-variant slice of the same
        // experiment and compare rendered metrics byte-for-byte.
        let slice_cfg = RunConfig {
            variants: vec![VariantKind::Dqn, VariantKind::DdqK(5), VariantKind::SwitchDdq],
            ..trend_config()
        };
        let a = run_experiment(&slice_cfg).expect("determinism run A");
        let b = run_experiment(&slice_cfg).expect("determinism run B");
        let rerun_csv_matches = metrics::render_runs_csv(&a.runs)
            == metrics::render_runs_csv(&b.runs)
            && metrics::render_summary_csv(&a.runs) == metrics::render_summary_csv(&b.runs)
            && metrics::render_categories_csv(&a.runs) == metrics::render_categories_csv(&b.runs);
        TrendBundle {
            runs: first.runs,
            rerun_csv_matches,
        }
    })
}

fn final_success_mean(runs: &[RunResult], variant: VariantKind) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for run in runs.iter().filter(|r| r.variant == variant) {
        let last = run
            .epochs
            .iter()
            .rev()
            .find_map(|m| m.eval.as_ref())
            .expect("final epoch evaluated");
        total += last.success_rate;
        n += 1;
    }
    total / n as f64
}

fn window_success_mean(runs: &[RunResult], variant: VariantKind, from_epoch: usize) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for run in runs.iter().filter(|r| r.variant == variant) {
        for m in &run.epochs {
            if m.epoch > from_epoch {
                if let Some(eval) = &m.eval {
                    total += eval.success_rate;
                    n += 1;
                }
            }
        }
    }
    total / n as f64
}

fn mean_epochs_to_reach(runs: &[RunResult], variant: VariantKind, bar: f64) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for run in runs.iter().filter(|r| r.variant == variant) {
        let reached = run
            .epochs
            .iter()
            .find(|m| m.eval.as_ref().is_some_and(|e| e.success_rate >= bar))
            .map(|m| m.epoch)
            // Never reaching the bar counts as one epoch past the horizon.
            .unwrap_or(151);
        total += reached as f64;
        n += 1;
    }
    total / n as f64
}

#[test]
fn criterion_05_switch_beats_baselines() {
    let bundle = trend_bundle();
    let switch = final_success_mean(&bundle.runs, VariantKind::SwitchDdq);
    let ddq5 = final_success_mean(&bundle.runs, VariantKind::DdqK(5));
    let dqn = final_success_mean(&bundle.runs, VariantKind::Dqn);
    report(
        "5 (switch-ddq vs baselines)",
        switch >= ddq5 + 0.05 && switch >= dqn + 0.05,
        &format!("switch {switch:.3} vs ddq(5) {ddq5:.3} and dqn {dqn:.3}"),
    );
}

#[test]
fn criterion_06_aggressive_planning_degrades() {
    let bundle = trend_bundle();
    let ddq20 = window_success_mean(&bundle.runs, VariantKind::DdqK(20), 100);
    let ddq5 = window_success_mean(&bundle.runs, VariantKind::DdqK(5), 100);
    report(
        "6 (aggressive planning degradation)",
        ddq20 <= ddq5,
        &format!("ddq(20) final-window {ddq20:.3} vs ddq(5) {ddq5:.3}"),
    );
}

#[test]
fn criterion_07_active_reaches_half_sooner() {
    let bundle = trend_bundle();
    let switch = mean_epochs_to_reach(&bundle.runs, VariantKind::SwitchDdq, 0.5);
    let su = mean_epochs_to_reach(&bundle.runs, VariantKind::SuDdq, 0.5);
    report(
        "7 (active vs uniform)",
        switch <= su,
        &format!("epochs-to-0.5: switch {switch:.1} vs su {su:.1}"),
    );
}

#[test]
fn criterion_09_determinism() {
    let bundle = trend_bundle();
    report(
        "9 (determinism)",
        bundle.rerun_csv_matches,
        "re-rendered metrics byte-identical across two runs",
    );
}

// --------------------------------------------------------------- 10 ----

#[test]
fn criterion_10_accounting_parity() {
    let cfg = RunConfig {
        variants: vec![
            VariantKind::Dqn,
            VariantKind::DqnK(5),
            VariantKind::DdqK(5),
            VariantKind::SwitchDdq,
            VariantKind::SuDdq,
        ],
        seeds: vec![1],
        max_epochs: 20,
        eval_interval: 20,
        eval_dialogues: 4,
        ..RunConfig::default()
    };
    let output = run_experiment(&cfg).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for run in &output.runs {
        let expected = match run.variant {
            VariantKind::DqnK(k) => k as u64,
            _ => 1,
        };
        for m in &run.epochs {
            if m.real_dialogues != expected {
                ok = false;
                detail = format!(
                    "{} epoch {} consumed {} real dialogues (expected {expected})",
                    run.variant.label(),
                    m.epoch,
                    m.real_dialogues
                );
            }
        }
        let last = run.epochs.last().unwrap();
        if last.real_dialogues_total != expected * 20 {
            ok = false;
            detail = format!(
                "{} consumed {} real dialogues over 20 epochs",
                run.variant.label(),
                last.real_dialogues_total
            );
        }
    }
    if detail.is_empty() {
        detail = "per-epoch real-dialogue counts exact for all five variants".into();
    }
    report("10 (accounting parity)", ok, &detail);
}

// Buffer presence sanity used by the replay module's source tagging.
#[test]
fn buffers_carry_their_source_tags() {
    assert_eq!(
        ReplayBuffer::new(4, ExperienceSource::Real).source(),
        ExperienceSource::Real
    );
    assert_eq!(
        ReplayBuffer::new(4, ExperienceSource::Simulated).source(),
        ExperienceSource::Simulated
    );
}
