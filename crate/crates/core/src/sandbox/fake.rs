//! In-process sandbox: answers from a script of outcomes, and otherwise by
//! running the request against in-process candidates.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::model::{CheckFailure, DomainId};

use super::executor::{Executor, Fatal};
use super::protocol::{Outcome, Payload, RequestKind, SandboxRequest, SandboxResponse};
use super::{SandboxSession, SessionError};

/// One scripted answer to a check request (goal tests, successor tests or
/// search). Loads and shutdowns are never scripted.
#[derive(Debug, Clone, PartialEq)]
pub enum Scripted {
    Fail(CheckFailure),
    /// Let the in-process candidates answer.
    Pass,
    Reply(Payload),
    /// The executor dies during the request.
    Crash,
    /// The executor stops answering; the host deadline fires.
    Stall,
}

/// Transcript of every exchange, shared with whoever holds a handle.
pub type Transcript = Arc<Mutex<Vec<(SandboxRequest, SandboxResponse)>>>;

pub struct FakeSandbox {
    executor: Executor,
    script: Arc<Mutex<VecDeque<Scripted>>>,
    /// Answer unscripted requests with the candidates instead of failing.
    delegate: bool,
    alive: bool,
    restarts: usize,
    transcript: Transcript,
}

impl FakeSandbox {
    pub fn new(domain: DomainId, script: impl IntoIterator<Item = Scripted>) -> Self {
        FakeSandbox {
            executor: Executor::new(domain, Duration::from_secs(1)),
            script: Arc::new(Mutex::new(script.into_iter().collect())),
            delegate: true,
            alive: true,
            restarts: 0,
            transcript: Arc::default(),
        }
    }

    /// Requires every check request to be covered by the script.
    pub fn strict(mut self) -> Self {
        self.delegate = false;
        self
    }

    pub fn transcript(&self) -> Transcript {
        Arc::clone(&self.transcript)
    }

    /// Handle to the remaining script.
    pub fn script(&self) -> Arc<Mutex<VecDeque<Scripted>>> {
        Arc::clone(&self.script)
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    fn answer(&mut self, req: &SandboxRequest) -> Result<SandboxResponse, SessionError> {
        let scripted = match req.kind {
            RequestKind::LoadCode { .. } | RequestKind::Shutdown => None,
            _ => self.script.lock().expect("script lock").pop_front(),
        };
        let reply = |outcome| Ok(SandboxResponse { id: req.id, outcome });
        let fatal = match scripted {
            Some(Scripted::Fail(failure)) => return reply(Outcome::Failure { failure }),
            Some(Scripted::Reply(payload)) => return reply(Outcome::Ok { payload }),
            Some(Scripted::Crash) => Fatal::Crash,
            Some(Scripted::Stall) => Fatal::Stall,
            None if !self.delegate && !matches!(req.kind, RequestKind::LoadCode { .. } | RequestKind::Shutdown) => {
                return Err(SessionError::ScriptExhausted(req.kind.name()))
            }
            Some(Scripted::Pass) | None => match self.executor.handle(req) {
                Ok(resp) => return Ok(resp),
                Err(f) => f,
            },
        };
        self.alive = false;
        let failure = match fatal {
            Fatal::Crash => req.kind.crash_failure(),
            Fatal::Stall => req.kind.overrun_failure("executor stopped responding and was killed"),
        };
        reply(Outcome::Failure { failure })
    }
}

impl SandboxSession for FakeSandbox {
    fn request(&mut self, req: &SandboxRequest) -> Result<SandboxResponse, SessionError> {
        if !self.alive {
            return Err(SessionError::Dead);
        }
        let resp = self.answer(req)?;
        if matches!(req.kind, RequestKind::Shutdown) {
            self.alive = false;
        }
        self.transcript
            .lock()
            .expect("transcript lock")
            .push((req.clone(), resp.clone()));
        Ok(resp)
    }

    fn is_alive(&self) -> bool {
        self.alive
    }

    fn restart(&mut self) -> Result<(), SessionError> {
        self.executor.reset();
        self.alive = true;
        self.restarts += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{validate_solution, DomainSpec};
    use crate::model::{ErrorCategory, Limits, Role};
    use crate::sandbox::candidate::fixture_source;
    use crate::sandbox::Channel;
    use crate::value::StateValue;

    fn v(s: &str) -> StateValue {
        StateValue::from_json(s).unwrap()
    }

    fn goal_tests() -> RequestKind {
        RequestKind::RunGoalTests {
            suite: DomainSpec::get(DomainId::Game24).goal_suite.clone(),
        }
    }

    fn load(ch: &mut Channel, role: Role) {
        let o = ch
            .call(RequestKind::LoadCode { role, source: fixture_source(role, "golden") })
            .unwrap();
        assert!(o.failure().is_none());
    }

    #[test]
    fn scripted_goal_failure_then_pass() {
        let f = CheckFailure::goal_mismatch(v("[24, 1]"), None, true);
        let fake = FakeSandbox::new(DomainId::Game24, [Scripted::Fail(f.clone()), Scripted::Pass]);
        let mut ch = Channel::new(Box::new(fake));
        load(&mut ch, Role::Goal);
        assert_eq!(ch.call(goal_tests()).unwrap().failure(), Some(&f));
        assert!(ch.call(goal_tests()).unwrap().failure().is_none());
    }

    #[test]
    fn delegated_search_trace_validates() {
        let spec = DomainSpec::get(DomainId::Blocksworld);
        let inst = spec.soundness_instances[0].clone();
        let mut ch = Channel::new(Box::new(FakeSandbox::new(DomainId::Blocksworld, [])));
        load(&mut ch, Role::Successor);
        load(&mut ch, Role::Goal);
        let o = ch
            .call(RequestKind::RunSearch {
                algorithm: spec.search_algorithm,
                instance: inst.clone(),
                domain: spec.id,
                limits: Limits::default(),
                partial_rule: Some(spec.partial_rule),
            })
            .unwrap();
        let Outcome::Ok { payload: Payload::Search(r) } = o else { panic!("{o:?}") };
        assert!(validate_solution(&inst, &r.trace.unwrap()).solved());
    }

    #[test]
    fn scripted_mutation_surfaces_verbatim() {
        let f = CheckFailure::mutated(v("[1, 2]"), v("[1, 2, null]"));
        let mut ch = Channel::new(Box::new(
            FakeSandbox::new(DomainId::Game24, [Scripted::Fail(f.clone())]).strict(),
        ));
        assert_eq!(ch.call(goal_tests()).unwrap().failure(), Some(&f));
        assert!(matches!(ch.call(goal_tests()), Err(SessionError::ScriptExhausted(_))));
    }

    #[test]
    fn crash_kills_the_session_until_restart() {
        let fake = FakeSandbox::new(DomainId::Game24, [Scripted::Crash, Scripted::Stall]);
        let mut ch = Channel::new(Box::new(fake));
        let f = ch.call(goal_tests()).unwrap().failure().cloned().unwrap();
        assert_eq!((f.category, f.detail.as_str()), (ErrorCategory::GoalException, "executor crashed"));
        assert!(matches!(ch.call(goal_tests()), Err(SessionError::Dead)));
        ch.restart().unwrap();
        let f = ch.call(goal_tests()).unwrap().failure().cloned().unwrap();
        assert_eq!(f.category, ErrorCategory::GoalTimeout);
    }

    #[test]
    fn restart_forgets_loaded_code() {
        let mut ch = Channel::new(Box::new(FakeSandbox::new(DomainId::Game24, [])));
        load(&mut ch, Role::Goal);
        assert!(ch.call(goal_tests()).unwrap().failure().is_none());
        ch.restart().unwrap();
        assert!(ch.call(goal_tests()).unwrap().failure().is_some());
    }
}
