//! Messages exchanged with the executor: one JSON object per line, requests
//! from the host, responses from the executor, after a handshake line from
//! the executor.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::domains::{Instance, PartialRule};
use crate::model::{Algorithm, CheckFailure, DomainId, GoalTestSuite, Limits, Role, SuccessorCase, Trace};
use crate::search::SearchStatus;

/// Version string the executor announces first.
pub const PROTOCOL_VERSION: &str = "autotos/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: String,
}

impl Handshake {
    pub fn current() -> Self {
        Handshake {
            protocol: PROTOCOL_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxRequest {
    pub id: u64,
    #[serde(flatten)]
    pub kind: RequestKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequestKind {
    LoadCode {
        role: Role,
        source: String,
    },
    RunGoalTests {
        suite: GoalTestSuite,
    },
    RunSuccessorTests {
        cases: Vec<SuccessorCase>,
    },
    RunSearch {
        algorithm: Algorithm,
        instance: Instance,
        domain: DomainId,
        limits: Limits,
        /// Transition rule checked on every generated child; `None` disables it.
        #[serde(default)]
        partial_rule: Option<PartialRule>,
    },
    Shutdown,
}

impl RequestKind {
    pub fn name(&self) -> &'static str {
        match self {
            RequestKind::LoadCode { .. } => "load_code",
            RequestKind::RunGoalTests { .. } => "run_goal_tests",
            RequestKind::RunSuccessorTests { .. } => "run_successor_tests",
            RequestKind::RunSearch { .. } => "run_search",
            RequestKind::Shutdown => "shutdown",
        }
    }

    /// The role whose code is running while this request is served. A search
    /// spends nearly all its time in the successor function.
    pub fn active_role(&self) -> Option<Role> {
        match self {
            RequestKind::LoadCode { role, .. } => Some(*role),
            RequestKind::RunGoalTests { .. } => Some(Role::Goal),
            RequestKind::RunSuccessorTests { .. } | RequestKind::RunSearch { .. } => {
                Some(Role::Successor)
            }
            RequestKind::Shutdown => None,
        }
    }

    /// How long the executor may legitimately take, before any grace.
    pub fn time_limit(&self, per_call: Duration) -> Duration {
        match self {
            RequestKind::LoadCode { .. } => per_call,
            RequestKind::RunGoalTests { suite } => {
                per_call * (suite.goal_states.len() + suite.nongoal_states.len()) as u32
            }
            RequestKind::RunSuccessorTests { cases } => per_call * cases.len() as u32,
            RequestKind::RunSearch { limits, .. } => limits.search_timeout,
            RequestKind::Shutdown => Duration::ZERO,
        }
    }

    /// Failure reported when the executor had to be killed for overrunning.
    pub fn overrun_failure(&self, detail: impl Into<String>) -> CheckFailure {
        match self {
            RequestKind::RunSearch { instance, .. } => {
                let mut f = CheckFailure::search_timeout(detail);
                f.offending_state = Some(instance.initial.clone());
                f
            }
            other => CheckFailure::call_timeout(
                other.active_role().unwrap_or(Role::Successor),
                None,
                detail,
            ),
        }
    }

    /// Failure reported when the executor died while serving this request.
    pub fn crash_failure(&self) -> CheckFailure {
        CheckFailure::exception(
            self.active_role().unwrap_or(Role::Successor),
            None,
            EXECUTOR_CRASHED,
        )
    }
}

/// Detail text of a synthesized crash failure.
pub const EXECUTOR_CRASHED: &str = "executor crashed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxResponse {
    pub id: u64,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Ok { payload: Payload },
    Failure { failure: CheckFailure },
}

impl Outcome {
    pub fn failure(&self) -> Option<&CheckFailure> {
        match self {
            Outcome::Failure { failure } => Some(failure),
            Outcome::Ok { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Loaded { role: Role },
    AllPassed { checked: usize },
    Search(SearchReport),
    Ack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub status: SearchStatus,
    #[serde(default)]
    pub trace: Option<Trace>,
    pub expansions: u64,
    #[serde(with = "secs")]
    pub elapsed: Duration,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("malformed message: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn encode<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(msg).expect("protocol messages always serialize")
}

pub fn decode<'a, T: Deserialize<'a>>(line: &'a str) -> Result<T, WireError> {
    Ok(serde_json::from_str(line.trim_end())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ErrorCategory, GoalCase};
    use crate::value::tests::arb_value;
    use crate::value::StateValue;
    use proptest::prelude::*;

    fn v(s: &str) -> StateValue {
        StateValue::from_json(s).unwrap()
    }

    #[test]
    fn wire_shapes() {
        let req = SandboxRequest {
            id: 3,
            kind: RequestKind::LoadCode {
                role: Role::Goal,
                source: "def f(s): pass".into(),
            },
        };
        assert_eq!(
            encode(&req),
            r#"{"id":3,"kind":"load_code","role":"goal","source":"def f(s): pass"}"#
        );
        assert_eq!(encode(&SandboxRequest { id: 9, kind: RequestKind::Shutdown }), r#"{"id":9,"kind":"shutdown"}"#);
        let resp = SandboxResponse {
            id: 3,
            outcome: Outcome::Ok {
                payload: Payload::AllPassed { checked: 6 },
            },
        };
        assert_eq!(
            encode(&resp),
            r#"{"id":3,"outcome":"ok","payload":{"type":"all_passed","checked":6}}"#
        );
        assert_eq!(encode(&Handshake::current()), r#"{"protocol":"autotos/1"}"#);
    }

    #[test]
    fn search_payload_shape() {
        let resp: SandboxResponse = decode(
            r#"{"id":4,"outcome":"ok","payload":{"type":"search","status":"goal_found","trace":[[1,2],[3]],"expansions":2,"elapsed":0.25}}"#,
        )
        .unwrap();
        let Outcome::Ok { payload: Payload::Search(r) } = resp.outcome else {
            panic!("{resp:?}")
        };
        assert_eq!(r.status, SearchStatus::GoalFound);
        assert_eq!(r.trace.unwrap().steps(), 1);
        assert_eq!(r.elapsed, Duration::from_millis(250));
    }

    #[test]
    fn failure_decodes_category_number() {
        let resp: SandboxResponse = decode(
            r#"{"id":1,"outcome":"failure","failure":{"category":4,"kind":"accepted_non_goal","offending_state":[24,1],"offending_child":null,"missing_successors":null,"detail":""}}"#,
        )
        .unwrap();
        assert_eq!(resp.outcome.failure().unwrap().category, ErrorCategory::GoalUnsound);
    }

    #[test]
    fn synthesized_failures_follow_the_request() {
        let search = RequestKind::RunSearch {
            algorithm: Algorithm::Bfs,
            instance: crate::domains::DomainSpec::get(DomainId::Game24).soundness_instances[0].clone(),
            domain: DomainId::Game24,
            limits: Limits::default(),
            partial_rule: None,
        };
        assert_eq!(search.overrun_failure("x").category, ErrorCategory::SearchTimeout);
        let goal = RequestKind::RunGoalTests { suite: GoalTestSuite::default() };
        assert_eq!(goal.overrun_failure("x").category, ErrorCategory::GoalTimeout);
        assert_eq!(goal.crash_failure().category, ErrorCategory::GoalException);
        assert_eq!(goal.crash_failure().detail, EXECUTOR_CRASHED);
        let succ = RequestKind::RunSuccessorTests { cases: vec![] };
        assert_eq!(succ.overrun_failure("x").category, ErrorCategory::SuccessorTimeout);
        assert_eq!(search.crash_failure().category, ErrorCategory::SuccessorException);
        assert_eq!(
            goal.time_limit(Duration::from_secs(1)),
            Duration::ZERO,
            "empty suite"
        );
        let _ = v("[]");
    }

    fn arb_role() -> impl Strategy<Value = Role> {
        prop_oneof![Just(Role::Successor), Just(Role::Goal)]
    }

    /// JSON null already means "absent", so optional states are never null.
    fn some_value() -> impl Strategy<Value = StateValue> {
        arb_value().prop_filter("null is absence", |v| !v.is_null())
    }

    fn arb_kind() -> impl Strategy<Value = RequestKind> {
        let opt = || proptest::option::of(some_value());
        prop_oneof![
            (arb_role(), "[ -~\n]{0,40}").prop_map(|(role, source)| RequestKind::LoadCode { role, source }),
            (prop::collection::vec((arb_value(), opt()), 0..3), prop::collection::vec((arb_value(), opt()), 0..3))
                .prop_map(|(g, n)| {
                    let mk = |xs: Vec<(StateValue, Option<StateValue>)>| {
                        xs.into_iter().map(|(state, goal_ctx)| GoalCase { state, goal_ctx }).collect()
                    };
                    RequestKind::RunGoalTests {
                        suite: GoalTestSuite { goal_states: mk(g), nongoal_states: mk(n) },
                    }
                }),
            prop::collection::vec((arb_value(), prop::collection::vec(arb_value(), 0..3), opt()), 0..3)
                .prop_map(|cs| RequestKind::RunSuccessorTests {
                    cases: cs
                        .into_iter()
                        .map(|(state, expected_successors, ctx)| SuccessorCase { state, expected_successors, ctx })
                        .collect(),
                }),
            (arb_value(), opt(), opt(), any::<bool>(), 1u64..10_000).prop_map(|(initial, ctx, goal_ctx, dfs, ms)| {
                RequestKind::RunSearch {
                    algorithm: if dfs { Algorithm::Dfs } else { Algorithm::Bfs },
                    instance: Instance {
                        domain: DomainId::Sokoban,
                        id: "x".into(),
                        initial,
                        ctx,
                        goal_ctx,
                        known_answer: None,
                    },
                    domain: DomainId::Sokoban,
                    limits: Limits { search_timeout: Duration::from_millis(ms), ..Limits::default() },
                    partial_rule: dfs.then_some(PartialRule::SokobanStones),
                }
            }),
            Just(RequestKind::Shutdown),
        ]
    }

    fn arb_outcome() -> impl Strategy<Value = Outcome> {
        let states = prop::collection::vec(arb_value(), 1..4);
        prop_oneof![
            arb_role().prop_map(|role| Outcome::Ok { payload: Payload::Loaded { role } }),
            (0usize..100).prop_map(|checked| Outcome::Ok { payload: Payload::AllPassed { checked } }),
            (proptest::option::of(states), any::<u32>(), 0u64..100_000).prop_map(|(t, expansions, ms)| Outcome::Ok {
                payload: Payload::Search(SearchReport {
                    status: if t.is_some() { SearchStatus::GoalFound } else { SearchStatus::Exhausted },
                    trace: t.map(|s| Trace::new(s).unwrap()),
                    expansions: expansions as u64,
                    elapsed: Duration::from_millis(ms),
                }),
            }),
            Just(Outcome::Ok { payload: Payload::Ack }),
            (some_value(), some_value(), prop::collection::vec(arb_value(), 1..3), "[a-z ]{0,10}").prop_map(
                |(s, c, missing, detail)| Outcome::Failure {
                    failure: match detail.len() % 3 {
                        0 => CheckFailure::mutated(s, c),
                        1 => CheckFailure::incomplete(s, missing, Some(c)),
                        _ => CheckFailure::exception(Role::Goal, Some(s), detail),
                    },
                }
            ),
        ]
    }

    proptest! {
        #[test]
        fn requests_round_trip(id in any::<u64>(), kind in arb_kind()) {
            let req = SandboxRequest { id, kind };
            let line = encode(&req);
            prop_assert!(!line.contains('\n'));
            prop_assert_eq!(decode::<SandboxRequest>(&line).unwrap(), req);
        }

        #[test]
        fn responses_round_trip(id in any::<u64>(), outcome in arb_outcome()) {
            let resp = SandboxResponse { id, outcome };
            let line = encode(&resp);
            prop_assert!(!line.contains('\n'));
            prop_assert_eq!(decode::<SandboxResponse>(&line).unwrap(), resp);
        }
    }
}
