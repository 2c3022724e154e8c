//! End-to-end tests of the `ddq` binary: training smoke runs, config
//! precedence, the chat REPL over piped stdin, the permutation-test
//! subcommand, and byte-identical export.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use switch_ddq::agent::rule_policy;
use switch_ddq::domain::{DialogueAct, GoalCorpus, KnowledgeBase, UserGoal};
use switch_ddq::nn::{save_checkpoint, Activation, DenseLayer, DenseNet};

fn ddq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddq"))
}

/// A hand-built Q-network implementing the oracle policy: request each
/// goal-relevant slot in schema order, then book. The hidden layer passes
/// the agent-requested indicator bits through; the head scores each
/// unrequested slot's request at 1 and booking at (requested count - 7.5).
fn oracle_policy() -> DenseNet {
    use switch_ddq::domain::{GOAL_SLOTS, INTENTS, SLOTS, STATE_DIM};
    let n_actions = switch_ddq::domain::AGENT_ACTION_COUNT;
    let hidden = 80;
    let mut l1 = DenseLayer::zeros(STATE_DIM, hidden, Activation::Relu);
    let agent_requested_base = INTENTS.len() * 2 + 3 * SLOTS.len();
    for (j, slot) in GOAL_SLOTS.iter().enumerate() {
        l1.weights[j * STATE_DIM + agent_requested_base + slot.index()] = 1.0;
    }
    let mut l2 = DenseLayer::zeros(hidden, n_actions, Activation::Identity);
    for j in 0..GOAL_SLOTS.len() {
        // Q(request_j) = 1 - requested_j
        l2.bias[j] = 1.0;
        l2.weights[j * hidden + j] = -1.0;
        // Q(book) accumulates requested bits.
        l2.weights[2 * GOAL_SLOTS.len() * hidden + j] = 1.0;
    }
    l2.bias[2 * GOAL_SLOTS.len()] = -7.5;
    DenseNet::from_layers(vec![l1, l2]).unwrap()
}

fn write_world(dir: &Path) -> (KnowledgeBase, GoalCorpus) {
    let kb = KnowledgeBase::generate(91, 100);
    let corpus = GoalCorpus::generate(&kb, 92, 128).unwrap();
    kb.save(dir.join("kb.json")).unwrap();
    corpus.save(dir.join("goals.json")).unwrap();
    (kb, corpus)
}

/// Replays the rule-based user's lines for the goal the chat session will
/// sample, by simulating the same dialogue privately first.
fn scripted_user_lines(kb: &KnowledgeBase, goal: UserGoal) -> Vec<String> {
    let mut session = switch_ddq::domain::EnvSession::start(kb, goal);
    let mut lines = Vec::new();
    loop {
        let action = rule_policy(session.state());
        let act = action.to_act(kb, session.state());
        let step = session.step(&act).unwrap();
        if step.done {
            return lines;
        }
        lines.push(format_act(&step.user_act));
    }
}

fn format_act(act: &DialogueAct) -> String {
    act.to_string()
}

#[test]
fn scripted_oracle_chat_session_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let (kb, corpus) = write_world(dir.path());
    save_checkpoint(&oracle_policy(), dir.path().join("policy.json")).unwrap();

    // chat samples its goal with ChaCha8(seed) over the corpus; replicate.
    use rand::{Rng, SeedableRng};
    let seed = 5u64;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let goal = corpus.goals[rng.random_range(0..corpus.goals.len())].clone();
    let lines = scripted_user_lines(&kb, goal);

    let log = dir.path().join("human.jsonl");
    let mut child = ddq()
        .args([
            "chat",
            "--policy",
            dir.path().join("policy.json").to_str().unwrap(),
            "--kb",
            dir.path().join("kb.json").to_str().unwrap(),
            "--goals",
            dir.path().join("goals.json").to_str().unwrap(),
            "--seed",
            &seed.to_string(),
            "--log",
            log.to_str().unwrap(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        for line in &lines {
            writeln!(stdin, "{line}").unwrap();
        }
    }
    let output = child.wait_with_output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "{stdout}");
    assert!(stdout.contains("SUCCESS"), "{stdout}");

    let record: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&log).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(record["success"], serde_json::Value::Bool(true));
    assert_eq!(record["abandoned"], serde_json::Value::Bool(false));
}

#[test]
fn immediate_abandon_is_a_one_turn_failure() {
    let dir = tempfile::tempdir().unwrap();
    write_world(dir.path());
    save_checkpoint(&oracle_policy(), dir.path().join("policy.json")).unwrap();
    let log = dir.path().join("human.jsonl");

    let mut child = ddq()
        .args([
            "chat",
            "--policy",
            dir.path().join("policy.json").to_str().unwrap(),
            "--kb",
            dir.path().join("kb.json").to_str().unwrap(),
            "--goals",
            dir.path().join("goals.json").to_str().unwrap(),
            "--log",
            log.to_str().unwrap(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(b"abandon\n")
        .unwrap();
    let output = child.wait_with_output().unwrap();
    assert!(output.status.success());

    let record: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&log).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(record["success"], serde_json::Value::Bool(false));
    assert_eq!(record["abandoned"], serde_json::Value::Bool(true));
    assert_eq!(record["turns"], serde_json::json!(1));
}

#[test]
fn malformed_input_reprompts_without_advancing() {
    let dir = tempfile::tempdir().unwrap();
    let (kb, corpus) = write_world(dir.path());
    save_checkpoint(&oracle_policy(), dir.path().join("policy.json")).unwrap();

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let goal = corpus.goals[rng.random_range(0..corpus.goals.len())].clone();
    let lines = scripted_user_lines(&kb, goal);

    let mut child = ddq()
        .args([
            "chat",
            "--policy",
            dir.path().join("policy.json").to_str().unwrap(),
            "--kb",
            dir.path().join("kb.json").to_str().unwrap(),
            "--goals",
            dir.path().join("goals.json").to_str().unwrap(),
            "--seed",
            "1",
            "--log",
            dir.path().join("h.jsonl").to_str().unwrap(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        // Garbage first: unknown intent, unknown slot, bare junk. The REPL
        // must re-prompt, then accept the real answers and still succeed.
        writeln!(stdin, "teleport(now)").unwrap();
        writeln!(stdin, "inform(warp_core=engaged)").unwrap();
        writeln!(stdin, "???").unwrap();
        for line in &lines {
            writeln!(stdin, "{line}").unwrap();
        }
    }
    let output = child.wait_with_output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "{stdout}");
    assert_eq!(stdout.matches("  ? ").count(), 3, "{stdout}");
    assert!(stdout.contains("SUCCESS"), "{stdout}");
}

#[test]
fn train_smoke_writes_all_artifacts_and_respects_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    fs::write(dir.path().join("cfg.toml"), "gamma = 0.8\nmax_epochs = 3\n").unwrap();

    let output = ddq()
        .args([
            "train",
            "--config",
            dir.path().join("cfg.toml").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--variants",
            "dqn,switch-ddq",
            "--seeds",
            "1",
            "--epochs",
            "2",
            "--eval-interval",
            "1",
            "--eval-dialogues",
            "4",
            "--corpus-size",
            "128",
            "--rbs-dialogues",
            "3",
            "--validation-dialogues",
            "2",
            "--max-planning-dialogues",
            "3",
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    for file in [
        "effective_config.toml",
        "kb.json",
        "goals.json",
        "runs.csv",
        "summary.csv",
        "categories.csv",
        "category_success.csv",
        "runs.json",
        "policy_dqn_s1.json",
        "policy_switch-ddq_s1.json",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }

    // Flag (2 epochs) overrides file (3 epochs); file gamma (0.8) overrides
    // the 0.9 default.
    let echoed = fs::read_to_string(out.join("effective_config.toml")).unwrap();
    assert!(echoed.contains("max_epochs = 2"), "{echoed}");
    assert!(echoed.contains("gamma = 0.8"), "{echoed}");
}

#[test]
fn invalid_gamma_is_rejected_with_its_key() {
    let output = ddq()
        .args(["train", "--gamma", "1.5", "--out", "/tmp/ddq-never-used"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("gamma must be in [0,1]"), "{stderr}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), "gamma = 0.9\nfrobnicate = 1\n").unwrap();
    let output = ddq()
        .args([
            "train",
            "--config",
            dir.path().join("cfg.toml").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("frobnicate"), "{stderr}");
}

#[test]
fn evaluate_reports_oracle_success() {
    let dir = tempfile::tempdir().unwrap();
    write_world(dir.path());
    save_checkpoint(&oracle_policy(), dir.path().join("policy.json")).unwrap();
    let output = ddq()
        .args([
            "evaluate",
            "--policy",
            dir.path().join("policy.json").to_str().unwrap(),
            "--kb",
            dir.path().join("kb.json").to_str().unwrap(),
            "--goals",
            dir.path().join("goals.json").to_str().unwrap(),
            "--dialogues",
            "20",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("success 1.0000"), "{stdout}");
}

#[test]
fn compare_runs_the_permutation_test() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let mut fa = fs::File::create(&a).unwrap();
    let mut fb = fs::File::create(&b).unwrap();
    for _ in 0..10 {
        writeln!(fa, "{{\"success\": true}}").unwrap();
        writeln!(fb, "{{\"success\": false}}").unwrap();
    }
    let output = ddq()
        .args([
            "compare",
            "--a",
            a.to_str().unwrap(),
            "--b",
            b.to_str().unwrap(),
            "--exact",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    // 1/C(20,10) = 1/184756 = 5.41e-6.
    assert!(stdout.contains("5.412544e-6"), "{stdout}");
}

#[test]
fn export_rerenders_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = ddq()
        .args([
            "train",
            "--out",
            out.to_str().unwrap(),
            "--variants",
            "dqn",
            "--seeds",
            "1",
            "--epochs",
            "2",
            "--eval-interval",
            "1",
            "--eval-dialogues",
            "2",
            "--corpus-size",
            "128",
            "--rbs-dialogues",
            "2",
            "--validation-dialogues",
            "2",
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let exported = dir.path().join("exported");
    let status = ddq()
        .args([
            "export",
            "--runs",
            out.join("runs.json").to_str().unwrap(),
            "--out",
            exported.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    for file in ["runs.csv", "summary.csv", "categories.csv", "category_success.csv"] {
        let original = fs::read(out.join(file)).unwrap();
        let rendered = fs::read(exported.join(file)).unwrap();
        assert_eq!(original, rendered, "{file} differs");
    }
}
