//! Executor-side request handling over in-process candidates: guarded calls,
//! unit tests and the instrumented search. Serves both the fake sandbox and
//! the reference executor process.

use std::time::{Duration, Instant};

use crate::canon::position;
use crate::domains::{Instance, PartialRule};
use crate::model::{Algorithm, CheckFailure, DomainId, GoalTestSuite, Limits, Role, SuccessorCase, Trace};
use crate::search::{search, SearchConfig, SearchStatus};
use crate::value::StateValue;

use super::candidate::{from_source, CallFault, Candidate, GoalFn, SuccessorFn};
use super::protocol::{Outcome, Payload, RequestKind, SandboxRequest, SandboxResponse, SearchReport};

/// Events that take the whole executor down rather than producing a reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fatal {
    /// The process exits mid-request.
    Crash,
    /// The process stops answering.
    Stall,
}

enum Abort {
    Check(CheckFailure),
    Fatal(Fatal),
}

impl From<CheckFailure> for Abort {
    fn from(f: CheckFailure) -> Self {
        Abort::Check(f)
    }
}

pub struct Executor {
    domain: DomainId,
    per_call_timeout: Duration,
    /// Sleep for the per-call limit before reporting a hang, as a real
    /// watchdog would.
    real_time_hangs: bool,
    successor: Option<SuccessorFn>,
    goal: Option<GoalFn>,
}

impl Executor {
    pub fn new(domain: DomainId, per_call_timeout: Duration) -> Self {
        Executor {
            domain,
            per_call_timeout,
            real_time_hangs: false,
            successor: None,
            goal: None,
        }
    }

    pub fn real_time_hangs(mut self, on: bool) -> Self {
        self.real_time_hangs = on;
        self
    }

    pub fn domain(&self) -> DomainId {
        self.domain
    }

    /// Forgets loaded code, as a fresh process would.
    pub fn reset(&mut self) {
        self.successor = None;
        self.goal = None;
    }

    pub fn handle(&mut self, req: &SandboxRequest) -> Result<SandboxResponse, Fatal> {
        let outcome = match self.dispatch(&req.kind) {
            Ok(payload) => Outcome::Ok { payload },
            Err(Abort::Check(failure)) => Outcome::Failure { failure },
            Err(Abort::Fatal(f)) => return Err(f),
        };
        Ok(SandboxResponse { id: req.id, outcome })
    }

    fn dispatch(&mut self, kind: &RequestKind) -> Result<Payload, Abort> {
        match kind {
            RequestKind::LoadCode { role, source } => {
                match from_source(self.domain, *role, source) {
                    Ok(Candidate::Successor(f)) => self.successor = Some(f),
                    Ok(Candidate::Goal(f)) => self.goal = Some(f),
                    Err(detail) => return Err(CheckFailure::parse_error(detail).into()),
                }
                Ok(Payload::Loaded { role: *role })
            }
            RequestKind::RunGoalTests { suite } => {
                let checked = self.goal_tests(suite)?;
                Ok(Payload::AllPassed { checked })
            }
            RequestKind::RunSuccessorTests { cases } => {
                let checked = self.successor_tests(cases)?;
                Ok(Payload::AllPassed { checked })
            }
            RequestKind::RunSearch {
                algorithm,
                instance,
                limits,
                partial_rule,
                ..
            } => self
                .run_search(*algorithm, instance, limits, *partial_rule)
                .map(Payload::Search),
            RequestKind::Shutdown => Ok(Payload::Ack),
        }
    }

    fn fault(&self, role: Role, state: &StateValue, fault: CallFault) -> Abort {
        match fault {
            CallFault::Exception(text) => {
                Abort::Check(CheckFailure::exception(role, Some(state.clone()), text))
            }
            CallFault::Hang => {
                if self.real_time_hangs {
                    std::thread::sleep(self.per_call_timeout);
                }
                Abort::Check(CheckFailure::call_timeout(
                    role,
                    Some(state.clone()),
                    format!(
                        "call did not return within {} s",
                        self.per_call_timeout.as_secs_f64()
                    ),
                ))
            }
            CallFault::Crash => Abort::Fatal(Fatal::Crash),
            CallFault::Stall => Abort::Fatal(Fatal::Stall),
        }
    }

    fn loaded(&self, role: Role) -> Result<(), Abort> {
        let present = match role {
            Role::Successor => self.successor.is_some(),
            Role::Goal => self.goal.is_some(),
        };
        if present {
            Ok(())
        } else {
            Err(CheckFailure::exception(role, None, format!("no {role} function loaded")).into())
        }
    }

    /// Calls the successor function on a private copy and reports any change
    /// to that copy.
    fn call_successor(
        &self,
        state: &StateValue,
        ctx: Option<&StateValue>,
    ) -> Result<Vec<StateValue>, Abort> {
        let f = self.successor.as_ref().expect("checked by caller");
        let mut arg = state.clone();
        let out = f(&mut arg, ctx).map_err(|e| self.fault(Role::Successor, state, e))?;
        if arg != *state {
            return Err(CheckFailure::mutated(state.clone(), arg)
                .with_context(ctx.cloned())
                .into());
        }
        Ok(out)
    }

    fn call_goal(&self, state: &StateValue, ctx: Option<&StateValue>) -> Result<bool, Abort> {
        let f = self.goal.as_ref().expect("checked by caller");
        f(state, ctx).map_err(|e| self.fault(Role::Goal, state, e))
    }

    fn goal_tests(&self, suite: &GoalTestSuite) -> Result<usize, Abort> {
        self.loaded(Role::Goal)?;
        let cases = suite
            .goal_states
            .iter()
            .map(|c| (c, true))
            .chain(suite.nongoal_states.iter().map(|c| (c, false)));
        let mut checked = 0;
        for (case, expected) in cases {
            let ctx = case.goal_ctx.as_ref();
            let got = self
                .call_goal(&case.state, ctx)
                .map_err(|a| with_context(a, ctx))?;
            if got != expected {
                return Err(CheckFailure::goal_mismatch(case.state.clone(), ctx.cloned(), got).into());
            }
            checked += 1;
        }
        Ok(checked)
    }

    fn successor_tests(&self, cases: &[SuccessorCase]) -> Result<usize, Abort> {
        self.loaded(Role::Successor)?;
        for case in cases {
            let ctx = case.ctx.as_ref();
            let got = self
                .call_successor(&case.state, ctx)
                .map_err(|a| with_context(a, ctx))?;
            let missing: Vec<StateValue> = case
                .expected_successors
                .iter()
                .filter(|e| position(self.domain, &got, e).is_none())
                .cloned()
                .collect();
            if !missing.is_empty() {
                return Err(CheckFailure::incomplete(case.state.clone(), missing, ctx.cloned()).into());
            }
        }
        Ok(cases.len())
    }

    fn run_search(
        &self,
        algorithm: Algorithm,
        instance: &Instance,
        limits: &Limits,
        rule: Option<PartialRule>,
    ) -> Result<SearchReport, Abort> {
        self.loaded(Role::Successor)?;
        self.loaded(Role::Goal)?;
        let ctx = instance.ctx.as_ref();
        let goal_ctx = instance.goal_ctx.as_ref();
        let started = Instant::now();
        let outcome = search(
            self.domain,
            &instance.initial,
            SearchConfig::new(algorithm).timeout(limits.search_timeout),
            |s| self.call_successor(s, ctx).map_err(|a| with_context(a, ctx)),
            |s| self.call_goal(s, goal_ctx).map_err(|a| with_context(a, goal_ctx)),
            |parent, child| match rule {
                Some(r) => r
                    .verdict(parent, child)
                    .map_err(|f| Abort::Check(f.with_context(ctx.cloned()))),
                None => Ok(()),
            },
        )?;
        if outcome.status == SearchStatus::Timeout {
            let mut f = CheckFailure::search_timeout(format!(
                "no result after {} s",
                limits.search_timeout.as_secs_f64()
            ));
            f.offending_state = Some(instance.initial.clone());
            return Err(f.with_context(ctx.cloned()).into());
        }
        Ok(SearchReport {
            status: outcome.status,
            trace: outcome.trace.map(|t| Trace::new(t).expect("search traces are non-empty")),
            expansions: outcome.expansions,
            elapsed: started.elapsed(),
        })
    }
}

fn with_context(a: Abort, ctx: Option<&StateValue>) -> Abort {
    match a {
        Abort::Check(f) if f.context.is_none() => Abort::Check(f.with_context(ctx.cloned())),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{validate_solution, DomainSpec};
    use crate::model::ErrorCategory;
    use crate::sandbox::candidate::fixture_source;

    fn v(s: &str) -> StateValue {
        StateValue::from_json(s).unwrap()
    }

    fn exec(domain: DomainId, succ: &str, goal: &str) -> Executor {
        let mut e = Executor::new(domain, Duration::from_secs(1));
        for (role, name) in [(Role::Successor, succ), (Role::Goal, goal)] {
            let r = e
                .handle(&SandboxRequest {
                    id: 0,
                    kind: RequestKind::LoadCode { role, source: fixture_source(role, name) },
                })
                .unwrap();
            assert!(r.outcome.failure().is_none());
        }
        e
    }

    fn run(e: &mut Executor, kind: RequestKind) -> Outcome {
        e.handle(&SandboxRequest { id: 1, kind }).unwrap().outcome
    }

    fn search_kind(inst: &Instance, rule: Option<PartialRule>) -> RequestKind {
        RequestKind::RunSearch {
            algorithm: DomainSpec::get(inst.domain).search_algorithm,
            instance: inst.clone(),
            domain: inst.domain,
            limits: Limits::default(),
            partial_rule: rule,
        }
    }

    fn failure(o: Outcome) -> CheckFailure {
        match o {
            Outcome::Failure { failure } => failure,
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn golden_components_pass_every_suite() {
        for d in DomainId::ALL {
            let spec = DomainSpec::get(d);
            let mut e = exec(d, "golden", "golden");
            let o = run(&mut e, RequestKind::RunGoalTests { suite: spec.goal_suite.clone() });
            assert!(matches!(o, Outcome::Ok { payload: Payload::AllPassed { .. } }), "{d}: {o:?}");
            let o = run(&mut e, RequestKind::RunSuccessorTests { cases: spec.successor_suite.clone() });
            assert!(o.failure().is_none(), "{d}: {o:?}");
        }
    }

    #[test]
    fn golden_search_trace_validates() {
        let spec = DomainSpec::get(DomainId::Game24);
        let inst = &spec.soundness_instances[0];
        let mut e = exec(DomainId::Game24, "golden", "golden");
        let Outcome::Ok { payload: Payload::Search(r) } = run(&mut e, search_kind(inst, Some(spec.partial_rule))) else {
            panic!()
        };
        assert_eq!(r.status, SearchStatus::GoalFound);
        let t = r.trace.unwrap();
        assert_eq!(t.states().len(), inst.initial.as_list().unwrap().len());
        assert!(validate_solution(inst, &t).valid);
    }

    #[test]
    fn goal_faults_map_to_categories() {
        let suite = DomainSpec::get(DomainId::Game24).goal_suite.clone();
        let cases = [
            ("contains_24", ErrorCategory::GoalUnsound),
            ("always_false", ErrorCategory::GoalUnsound),
            ("raise", ErrorCategory::GoalException),
            ("hang", ErrorCategory::GoalTimeout),
        ];
        for (name, cat) in cases {
            let mut e = exec(DomainId::Game24, "golden", name);
            let f = failure(run(&mut e, RequestKind::RunGoalTests { suite: suite.clone() }));
            assert_eq!(f.category, cat, "{name}");
            assert!(f.validate().is_ok());
        }
        let mut e = exec(DomainId::Game24, "golden", "contains_24");
        let f = failure(run(&mut e, RequestKind::RunGoalTests { suite }));
        assert_eq!(f.offending_state, Some(v("[24, 1]")));
    }

    #[test]
    fn successor_faults_map_to_categories() {
        let cases = DomainSpec::get(DomainId::Game24).successor_suite.clone();
        for (name, cat) in [
            ("mutate", ErrorCategory::InputMutated),
            ("raise", ErrorCategory::SuccessorException),
            ("hang", ErrorCategory::SuccessorTimeout),
            ("skip_division", ErrorCategory::SuccessorIncomplete),
            ("duplicate_numbers", ErrorCategory::SuccessorIncomplete),
        ] {
            let mut e = exec(DomainId::Game24, name, "golden");
            let f = failure(run(&mut e, RequestKind::RunSuccessorTests { cases: cases.clone() }));
            assert_eq!(f.category, cat, "{name}");
            assert!(f.validate().is_ok(), "{name}");
        }
        let mut e = exec(DomainId::Game24, "golden", "golden");
        let load = RequestKind::LoadCode {
            role: Role::Successor,
            source: fixture_source(Role::Successor, "crash"),
        };
        assert!(e.handle(&SandboxRequest { id: 0, kind: load }).is_ok());
        assert_eq!(e.handle(&SandboxRequest { id: 1, kind: RequestKind::RunSuccessorTests { cases } }), Err(Fatal::Crash));
    }

    #[test]
    fn blooper_search_stops_at_first_bad_child() {
        let inst = Instance {
            domain: DomainId::Game24,
            id: "t".into(),
            initial: v("[1, 1, 4, 6]"),
            ctx: None,
            goal_ctx: None,
            known_answer: None,
        };
        let mut e = exec(DomainId::Game24, "duplicate_numbers", "golden");
        let f = failure(run(&mut e, search_kind(&inst, Some(PartialRule::Game24Length))));
        assert_eq!(f.category, ErrorCategory::SuccessorUnsound);
        assert_eq!(f.offending_child, Some(v("[6, 5]")));
        // Without the rule the blooper still reaches 24.
        let o = run(&mut e, search_kind(&inst, None));
        assert!(o.failure().is_none(), "{o:?}");
    }

    #[test]
    fn sokoban_blooper_is_caught_by_the_rule() {
        let spec = DomainSpec::get(DomainId::Sokoban);
        let mut e = exec(DomainId::Sokoban, "ignore_stones", "golden");
        let caught = spec.soundness_instances.iter().any(|inst| {
            run(&mut e, search_kind(inst, Some(spec.partial_rule)))
                .failure()
                .is_some_and(|f| f.category == ErrorCategory::SuccessorUnsound && f.context.is_some())
        });
        assert!(caught);
    }

    #[test]
    fn runaway_search_times_out() {
        let inst = Instance {
            domain: DomainId::Game24,
            id: "t".into(),
            initial: v("[1, 2]"),
            ctx: None,
            goal_ctx: None,
            known_answer: None,
        };
        let mut e = exec(DomainId::Game24, "runaway", "always_false");
        let kind = RequestKind::RunSearch {
            algorithm: Algorithm::Bfs,
            instance: inst,
            domain: DomainId::Game24,
            limits: Limits { search_timeout: Duration::from_millis(100), ..Limits::default() },
            partial_rule: None,
        };
        let f = failure(run(&mut e, kind));
        assert_eq!(f.category, ErrorCategory::SearchTimeout);
    }

    #[test]
    fn unloaded_and_unparsable_code() {
        let mut e = Executor::new(DomainId::Game24, Duration::from_secs(1));
        let f = failure(run(&mut e, RequestKind::RunGoalTests { suite: GoalTestSuite::default() }));
        assert_eq!(f.category, ErrorCategory::GoalException);
        let f = failure(run(&mut e, RequestKind::LoadCode { role: Role::Goal, source: "x = (".into() }));
        assert_eq!(f.category, ErrorCategory::ResponseParse);
        assert!(f.detail.starts_with("load error"));
    }

    #[test]
    fn pure_functions_are_never_flagged_as_mutating() {
        let spec = DomainSpec::get(DomainId::Game24);
        let mut e = exec(DomainId::Game24, "golden", "golden");
        for _ in 0..1000 {
            let o = run(&mut e, RequestKind::RunSuccessorTests { cases: spec.successor_suite.clone() });
            assert!(o.failure().is_none());
        }
    }
}
