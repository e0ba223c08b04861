use autotos_core::llm::ScriptedBackend;
use autotos_core::pipeline::{clean_log, run_autotos, Checkpoint, Phase, RunConfig, RunRecord, RunStatus, Step};
use autotos_core::sandbox::candidate::fixture_source;
use autotos_core::sandbox::{Channel, FakeSandbox, RequestKind, Scripted};
use autotos_core::{CheckFailure, DomainId, ErrorCategory, Limits, Role};
use proptest::prelude::*;

fn fenced(role: Role, name: &str) -> String {
    format!("Here is the function.\n\n```python\n{}```\n", fixture_source(role, name))
}

fn s(name: &str) -> String {
    fenced(Role::Successor, name)
}

fn g(name: &str) -> String {
    fenced(Role::Goal, name)
}

fn run_with(domain: DomainId, replies: Vec<String>, script: Vec<Scripted>, cfg: impl FnOnce(&mut RunConfig)) -> (RunRecord, usize) {
    let mut config = RunConfig::new(domain);
    cfg(&mut config);
    let mut backend = ScriptedBackend::new(replies);
    let mut channel = Channel::new(Box::new(FakeSandbox::new(domain, script)));
    let record = run_autotos(&config, &mut backend, &mut channel);
    (record, backend.remaining())
}

fn run(domain: DomainId, replies: Vec<String>) -> RunRecord {
    run_with(domain, replies, vec![], |_| {}).0
}

use ErrorCategory as C;

#[test]
fn golden_pair_finishes_with_two_calls() {
    for domain in DomainId::ALL {
        let r = run(domain, vec![s("golden"), g("golden")]);
        assert_eq!(r.status, RunStatus::Completed, "{domain}");
        assert_eq!(r.total_calls(), 2);
        assert_eq!(r.checkpoint_reached, Some(Checkpoint::Completeness));
        assert!(r.failure_sequence().is_empty());
        assert_eq!(
            r.step_sequence(),
            [Step::Generate, Step::GoalTests, Step::Soundness, Step::Completeness]
        );
        assert_eq!(r.snapshots.len(), 3);
    }
}

#[test]
fn goal_unit_test_feedback_costs_one_goal_call() {
    let r = run(DomainId::Game24, vec![s("golden"), g("contains_24"), g("golden")]);
    assert_eq!(r.status, RunStatus::Completed);
    assert_eq!(r.failure_sequence(), [C::GoalUnsound]);
    assert_eq!((r.calls.successor, r.calls.goal), (1, 2));
    assert_eq!(r.phase_calls(Phase::Goal), 1);
    let prompt = r.prompts()[2];
    assert!(prompt.contains("incorrectly reporting it as a goal state"), "{prompt}");
    assert!(prompt.contains("[24, 1]"), "{prompt}");
}

#[test]
fn partial_soundness_catches_the_duplicate_numbers_blooper() {
    let r = run(DomainId::Game24, vec![s("duplicate_numbers"), g("golden"), s("golden")]);
    assert_eq!(r.status, RunStatus::Completed);
    assert_eq!(r.failure_sequence(), [C::SuccessorUnsound]);
    assert_eq!(r.phase_calls(Phase::Soundness), 1);
    assert!(r.prompts()[2].contains("length mismatch"));
}

#[test]
fn without_the_partial_rule_no_category_one_is_reported() {
    let (r, _) = run_with(
        DomainId::Game24,
        vec![s("duplicate_numbers"), g("golden"), s("golden")],
        vec![],
        |c| c.partial_soundness = false,
    );
    assert_eq!(r.status, RunStatus::Completed);
    assert!(!r.failure_sequence().contains(&C::SuccessorUnsound));
    assert_eq!(r.failure_sequence(), [C::SuccessorIncomplete]);
    assert_eq!(r.phase_calls(Phase::Completeness), 1);
    assert!(r.prompts()[2].contains("Missing successors are:"));
}

#[test]
fn unparsable_reply_is_reasked_and_counted() {
    let r = run(DomainId::Game24, vec!["I am not sure.".into(), s("golden"), g("golden")]);
    assert_eq!(r.status, RunStatus::Completed);
    assert_eq!(r.failure_sequence(), [C::ResponseParse]);
    assert_eq!((r.calls.successor, r.calls.goal), (2, 1));
}

#[test]
fn failures_route_to_the_responsible_function() {
    // (successor fixture, goal fixture, expected first failure, role repaired)
    let cases = [
        ("mutate", "golden", C::InputMutated, Role::Successor),
        ("skip_division", "golden", C::SuccessorIncomplete, Role::Successor),
        ("raise", "golden", C::SuccessorException, Role::Successor),
        ("hang", "golden", C::SuccessorTimeout, Role::Successor),
        ("golden", "raise", C::GoalException, Role::Goal),
        ("golden", "hang", C::GoalTimeout, Role::Goal),
        ("golden", "always_false", C::GoalUnsound, Role::Goal),
    ];
    for (succ, goal, cat, role) in cases {
        let fix = match role {
            Role::Successor => s("golden"),
            Role::Goal => g("golden"),
        };
        let r = run(DomainId::Game24, vec![s(succ), g(goal), fix]);
        assert_eq!(r.status, RunStatus::Completed, "{succ}/{goal}");
        assert_eq!(r.failure_sequence(), [cat], "{succ}/{goal}");
        assert_eq!(r.calls.get(role), 2, "{succ}/{goal}");
    }
}

#[test]
fn crash_restarts_the_executor_and_reloads_code() {
    let sandbox = FakeSandbox::new(DomainId::Game24, [Scripted::Crash]);
    let transcript = sandbox.transcript();
    let mut channel = Channel::new(Box::new(sandbox));
    let mut backend = ScriptedBackend::new([s("golden"), g("golden"), g("golden")]);
    let r = run_autotos(&RunConfig::new(DomainId::Game24), &mut backend, &mut channel);
    assert_eq!(r.failure_sequence(), [C::GoalException]);
    assert_eq!(r.status, RunStatus::Completed);
    let loads = transcript
        .lock()
        .unwrap()
        .iter()
        .filter(|(req, _)| matches!(req.kind, RequestKind::LoadCode { role: Role::Goal, .. }))
        .count();
    assert_eq!(loads, 2);
}

#[test]
fn search_timeout_goes_to_the_successor() {
    let (r, _) = run_with(
        DomainId::Game24,
        vec![s("golden"), g("golden"), s("golden")],
        vec![Scripted::Pass, Scripted::Fail(CheckFailure::search_timeout("search exceeded 600 s"))],
        |_| {},
    );
    assert_eq!(r.failure_sequence(), [C::SearchTimeout]);
    assert_eq!(r.phase_calls(Phase::Soundness), 1);
    assert_eq!(r.calls.successor, 2);
}

#[test]
fn goal_failure_during_search_returns_to_goal_tests() {
    let wrong = CheckFailure::goal_mismatch(autotos_core::StateValue::List(vec![24i64.into()]), None, false);
    let (r, _) = run_with(
        DomainId::Game24,
        vec![s("golden"), g("golden"), g("golden")],
        vec![Scripted::Pass, Scripted::Fail(wrong)],
        |_| {},
    );
    assert_eq!(r.failure_sequence(), [C::GoalUnsound]);
    assert_eq!(
        r.step_sequence(),
        [
            Step::Generate,
            Step::GoalTests,
            Step::Soundness,
            Step::GoalTests,
            Step::Soundness,
            Step::Completeness
        ]
    );
}

#[test]
fn per_function_budget_stops_before_the_eleventh_call() {
    let mut replies = vec![s("golden")];
    replies.extend((0..15).map(|_| g("always_false")));
    let (r, left) = run_with(DomainId::Game24, replies, vec![], |_| {});
    assert_eq!(r.status, RunStatus::BudgetExhausted);
    assert_eq!(r.calls.goal, 10);
    assert_eq!(left, 5);
    assert_eq!(r.checkpoint_reached, Some(Checkpoint::Initial));
}

#[test]
fn total_budget_is_never_exceeded() {
    let mut replies = vec![s("skip_division")];
    replies.extend((0..9).map(|_| g("always_false")));
    replies.push(g("golden"));
    replies.extend((0..12).map(|_| s("skip_division")));
    let (r, _) = run_with(DomainId::Game24, replies, vec![], |_| {});
    assert_eq!(r.status, RunStatus::BudgetExhausted);
    assert_eq!(r.total_calls(), 19);
    assert_eq!((r.calls.successor, r.calls.goal), (9, 10));

    let (r, left) = run_with(
        DomainId::Game24,
        std::iter::once(s("golden")).chain((0..9).map(|_| g("always_false"))).collect(),
        vec![],
        |c| {
            c.limits = Limits {
                total_calls: 4,
                ..Limits::default()
            }
        },
    );
    assert_eq!(r.total_calls(), 4);
    assert_eq!(left, 6);
}

#[test]
fn clean_log_shows_prompts_replies_and_checks() {
    let r = run(DomainId::Game24, vec![s("golden"), g("contains_24"), g("golden")]);
    let log = clean_log(&r);
    assert_eq!(log.matches("AutoToS prompt:").count(), 3);
    assert_eq!(log.matches("Model response:").count(), 3);
    assert!(log.contains("category 4 (goal soundness failed)"));
    assert!(log.contains("completed after 3 calls"));
}

#[test]
fn record_round_trips_through_json() {
    let r = run(DomainId::Game24, vec![s("golden"), g("contains_24"), g("golden")]);
    let text = serde_json::to_string(&r).unwrap();
    let back: RunRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}

fn any_reply() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => Just(s("golden")),
        3 => Just(g("golden")),
        1 => Just(s("duplicate_numbers")),
        1 => Just(s("skip_division")),
        1 => Just(s("mutate")),
        1 => Just(s("raise")),
        1 => Just(g("contains_24")),
        1 => Just(g("always_true")),
        1 => Just(g("raise")),
        1 => Just("no code".to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn any_reply_sequence_respects_budgets_and_checkpoints(replies in prop::collection::vec(any_reply(), 0..25)) {
        let (r, _) = run_with(DomainId::Game24, replies, vec![], |_| {});
        let limits = Limits::default();
        prop_assert!(r.total_calls() <= limits.total_calls);
        prop_assert!(r.calls.successor <= limits.calls_per_function);
        prop_assert!(r.calls.goal <= limits.calls_per_function);
        // Each call is one prompt event answered by the model.
        prop_assert_eq!(r.prompts().len() as u32 >= r.total_calls(), true);
        // Checkpoints are reached in order.
        let reached: Vec<_> = r.snapshots.iter().map(|s| s.checkpoint).collect();
        prop_assert!(reached.windows(2).all(|w| w[0] < w[1]));
        if r.status == RunStatus::Completed {
            prop_assert_eq!(r.checkpoint_reached, Some(Checkpoint::Completeness));
            prop_assert!(r.successor_source.as_deref().is_some_and(|src| src.contains("fixture: golden")));
        } else {
            prop_assert_ne!(r.checkpoint_reached, Some(Checkpoint::Completeness));
        }
    }
}

#[test]
fn experiment_writes_records_and_tables() {
    use autotos_core::pipeline::{run_experiment, ExperimentConfig};
    let dir = tempfile::tempdir().unwrap();
    let config: ExperimentConfig = serde_json::from_value(serde_json::json!({
        "domains": ["game24"],
        "limits": {"repetitions": 2},
        "eval_limit": 3
    }))
    .unwrap();
    let mut backends = |_d, partial: bool, rep: u32| -> Result<Box<dyn autotos_core::llm::ModelBackend>, String> {
        if !partial && rep == 1 {
            return Err("backend offline".into());
        }
        let replies = if partial { vec![s("golden"), g("golden")] } else { vec![s("golden"), g("contains_24"), g("golden")] };
        Ok(Box::new(ScriptedBackend::new(replies)))
    };
    let mut sandboxes = |d| -> Result<Box<dyn autotos_core::sandbox::SandboxSession>, autotos_core::sandbox::SessionError> {
        Ok(Box::new(FakeSandbox::new(d, [])))
    };
    let summary = run_experiment(&config, &mut backends, &mut sandboxes, "scripted", dir.path()).unwrap();
    assert_eq!(summary.runs.len(), 4);
    assert!(summary.runs.iter().any(|r| r.status.starts_with("error")));
    let calls = &summary.calls_table[0];
    assert_eq!(calls.with_partial_soundness, Some(2.0));
    // The failed run is left out of the means.
    assert_eq!(calls.without_partial_soundness, Some(3.0));
    let done = summary
        .checkpoints
        .iter()
        .find(|c| c.partial_soundness && c.checkpoint == "completeness")
        .unwrap();
    assert_eq!(done.reached_pct, 100.0);
    assert_eq!(done.mean_accuracy, Some(1.0));
    let cat4 = summary
        .error_categories
        .iter()
        .find(|c| !c.partial_soundness && c.category == 4)
        .unwrap();
    assert_eq!((cat4.count, cat4.share), (1, 1.0));
    for f in ["runs.csv", "checkpoints.csv", "feedback_calls.csv", "error_categories.csv", "calls_table.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.lines().count() > 1, "{f}");
    }
    assert!(dir.path().join("runs/game24-partial-0.json").exists());
    assert!(dir.path().join("runs/game24-plain-0.log.txt").exists());
}
