//! Learning-dynamics probe: per-variant eval curves plus world-model
//! fidelity diagnostics measured against the real buffer.

use switch_ddq::agent::argmax;
use switch_ddq::config::{RunConfig, VariantKind};
use switch_ddq::domain::goal::GoalCorpus;
use switch_ddq::domain::kb::KnowledgeBase;
use switch_ddq::domain::state::AGENT_ACTION_COUNT;
use switch_ddq::domain::{DialogueAct, DialogueState, Intent};
use switch_ddq::pipeline::Trainer;
use switch_ddq::world::normalize_reward;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(150);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let variants: Vec<VariantKind> = args
        .get(3)
        .map(|s| s.split(';').map(|v| v.parse().expect("variant")).collect())
        .unwrap_or_else(|| vec![VariantKind::Dqn, VariantKind::SwitchDdq]);
    let agent_steps: i64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(-1);

    let mut cfg = RunConfig {
        max_epochs: epochs,
        eval_interval: 5,
        ..RunConfig::default()
    };
    if let Some(eps) = args.get(5).and_then(|s| s.parse().ok()) {
        cfg.rmsprop_epsilon = eps;
    }
    if agent_steps > 0 {
        cfg.agent_train_steps = agent_steps as usize;
        cfg.agent_train_step_cap = agent_steps as usize;
    }
    if let Some(bar) = args.get(6).and_then(|s| s.parse().ok()) {
        cfg.sim_success_bar = bar;
    }
    if let Some(sw) = args.get(7).and_then(|s| s.parse().ok()) {
        cfg.switcher_train_steps = sw;
    }
    let kb = KnowledgeBase::generate(cfg.kb_seed, cfg.kb_rows);
    let corpus = GoalCorpus::generate(&kb, cfg.corpus_seed, cfg.corpus_size).unwrap();

    for variant in variants {
        let start = std::time::Instant::now();
        let mut trainer = Trainer::new(&cfg, variant, &kb, &corpus, seed).unwrap();
        println!("=== {} (seed {seed}) ===", variant.label());
        for e in 0..epochs {
            let evaluated = (e + 1) % 10 == 0;
            let m = trainer.run_epoch(evaluated).unwrap();
            if let Some(eval) = m.eval {
                let sw = m
                    .switcher
                    .map(|s| {
                        format!(
                            " | sw {}/{} tau {:.2} plan {} stored {}",
                            s.mean_real_score.map(|v| format!("{v:.2}")).unwrap_or_default(),
                            s.mean_sim_score.map(|v| format!("{v:.2}")).unwrap_or_default(),
                            s.threshold,
                            s.planning_dialogues,
                            s.stored_sim_turns
                        )
                    })
                    .unwrap_or_default();
                println!(
                    "  e{:>3}  succ {:.2}  turns {:>5.1}  loss {:>7.1}  sims {:>6}{}{}",
                    m.epoch,
                    eval.success_rate,
                    eval.avg_turns,
                    m.mean_agent_loss.unwrap_or(f64::NAN),
                    m.sim_transitions_total,
                    world_fidelity(&trainer),
                    sw,
                );
                println!("       {}", buffer_autopsy(&trainer));
            }
        }
        println!("  [{:.1?}]", start.elapsed());
    }
}

fn world_fidelity(trainer: &Trainer) -> String {
    let Some(world) = trainer.world.as_ref() else {
        return String::new();
    };
    let buf = &trainer.real_buffer;
    let mut act_hits = 0usize;
    let mut term_hits = 0usize;
    let mut n = 0usize;
    let mut term_n = 0usize;
    let mut reward_hits = 0usize;
    for i in 0..buf.len() {
        let e = buf.get(i);
        let pred = world.predict(&e.state, e.action).unwrap();
        n += 1;
        act_hits += (argmax(&pred.user_probs) == e.user_action) as usize;
        term_hits += ((pred.terminal >= 0.5) == e.terminal) as usize;
        if e.terminal {
            term_n += 1;
            let snapped = if pred.reward >= normalize_reward(19.0) { 79.0 } else { -41.0 };
            reward_hits += (snapped == e.reward) as usize;
        }
    }
    format!(
        " | wm act {:.2} term {:.2} rwd {:.2}",
        act_hits as f64 / n.max(1) as f64,
        term_hits as f64 / n.max(1) as f64,
        reward_hits as f64 / term_n.max(1) as f64
    )
}

fn buffer_autopsy(trainer: &Trainer) -> String {
    // Terminal composition of each buffer: how many book-successes,
    // book-failures, and non-booking terminals, plus Q at the opening state.
    let book_idx = 2 * switch_ddq::domain::GOAL_SLOTS.len();
    let describe = |buf: &switch_ddq::agent::ReplayBuffer| {
        let mut book_pos = 0usize;
        let mut book_neg = 0usize;
        let mut other_term = 0usize;
        let mut n = 0usize;
        for i in 0..buf.len() {
            let e = buf.get(i);
            n += 1;
            if e.terminal {
                if e.action == book_idx {
                    if e.reward > 0.0 {
                        book_pos += 1;
                    } else {
                        book_neg += 1;
                    }
                } else {
                    other_term += 1;
                }
            }
        }
        format!("n {n} book+ {book_pos} book- {book_neg} oterm {other_term}")
    };
    // Resolved-slot count at stored simulated success-bookings: full
    // conveyance is 8; anything lower is model optimism that leaked through.
    let resolved_histogram = |buf: &switch_ddq::agent::ReplayBuffer| {
        let base = 22usize;
        let mut hist = [0usize; 9];
        for i in 0..buf.len() {
            let e = buf.get(i);
            if e.terminal && e.action == book_idx && e.reward > 0.0 {
                let mut resolved = 0usize;
                for slot in switch_ddq::domain::GOAL_SLOTS {
                    let idx = slot.index();
                    if e.state[base + idx] > 0.0 || e.state[base + 16 + idx] > 0.0 {
                        resolved += 1;
                    }
                }
                hist[resolved.min(8)] += 1;
            }
        }
        format!("{hist:?}")
    };
    let mut s0 = DialogueState::new();
    s0.apply_user_act(&DialogueAct::new(Intent::Greeting));
    let q_row = trainer.q.output(&s0.encode()).unwrap();
    let q_max_req: f64 = q_row[..8].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let q_book = q_row[book_idx];
    let q_close = q_row[book_idx + 1];
    let _ = AGENT_ACTION_COUNT;
    format!(
        "Bu[{}]  Bs[{}]  Q0: maxreq {:.1} book {:.1} close {:.1}\n       book+ resolved: Bu {} Bs {}",
        describe(&trainer.real_buffer),
        describe(&trainer.sim_buffer),
        q_max_req,
        q_book,
        q_close,
        resolved_histogram(&trainer.real_buffer),
        resolved_histogram(&trainer.sim_buffer)
    )
}
