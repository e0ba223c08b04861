//! Isolated execution of candidate code.
//!
//! The host talks to an executor through [`SandboxSession`]: a child process
//! speaking the line protocol ([`ProcessSandbox`]) or an in-process stand-in
//! ([`FakeSandbox`]). [`Channel`] numbers requests and checks that every
//! response answers the request just sent.

pub mod candidate;
pub mod executor;
pub mod fake;
pub mod process;
pub mod protocol;
pub mod serve;

pub use fake::{FakeSandbox, Scripted, Transcript};
pub use process::{ExecutorConfig, ProcessSandbox};
pub use protocol::{
    Handshake, Outcome, Payload, RequestKind, SandboxRequest, SandboxResponse, SearchReport,
    PROTOCOL_VERSION,
};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("executor session is dead; restart it first")]
    Dead,
    #[error("script has no entry left for {0}")]
    ScriptExhausted(&'static str),
    #[error("could not start executor `{program}`: {source}")]
    Spawn {
        program: String,
        source: std::io::Error,
    },
    #[error("executor speaks `{got}`, expected `{expected}`")]
    Handshake { expected: String, got: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
}

/// One executor, serving one request at a time.
pub trait SandboxSession: Send {
    fn request(&mut self, req: &SandboxRequest) -> Result<SandboxResponse, SessionError>;
    fn is_alive(&self) -> bool;
    /// Replaces the executor with a fresh one; loaded code is lost.
    fn restart(&mut self) -> Result<(), SessionError>;
}

/// Assigns increasing ids and pairs each response with its request.
pub struct Channel {
    session: Box<dyn SandboxSession>,
    next_id: u64,
}

impl Channel {
    pub fn new(session: Box<dyn SandboxSession>) -> Self {
        Channel { session, next_id: 1 }
    }

    pub fn call(&mut self, kind: RequestKind) -> Result<Outcome, SessionError> {
        let req = SandboxRequest {
            id: self.next_id,
            kind,
        };
        self.next_id += 1;
        let resp = self.session.request(&req)?;
        if resp.id != req.id {
            return Err(SessionError::Protocol(format!(
                "response {} does not answer request {}",
                resp.id, req.id
            )));
        }
        Ok(resp.outcome)
    }

    pub fn is_alive(&self) -> bool {
        self.session.is_alive()
    }

    pub fn restart(&mut self) -> Result<(), SessionError> {
        self.session.restart()
    }

    /// Asks the executor to exit; errors are ignored since the session is
    /// being discarded anyway.
    pub fn shutdown(mut self) {
        if self.session.is_alive() {
            let _ = self.call(RequestKind::Shutdown);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::DomainSpec;
    use crate::model::{CheckFailure, DomainId, Role};
    use proptest::prelude::*;

    fn arb_step() -> impl Strategy<Value = Scripted> {
        prop_oneof![
            Just(Scripted::Pass),
            Just(Scripted::Crash),
            Just(Scripted::Stall),
            Just(Scripted::Fail(CheckFailure::search_timeout("x"))),
            Just(Scripted::Reply(Payload::Ack)),
        ]
    }

    fn arb_request() -> impl Strategy<Value = RequestKind> {
        let spec = DomainSpec::get(DomainId::Game24);
        let goal = RequestKind::RunGoalTests {
            suite: spec.goal_suite.clone(),
        };
        let succ = RequestKind::RunSuccessorTests {
            cases: spec.successor_suite[..2].to_vec(),
        };
        let load = RequestKind::LoadCode {
            role: Role::Goal,
            source: "def g(s):\n    return s == [24]\n".into(),
        };
        prop::sample::select(vec![goal, succ, load])
    }

    proptest! {
        #[test]
        fn ids_pair_one_to_one(
            script in prop::collection::vec(arb_step(), 0..8),
            reqs in prop::collection::vec(arb_request(), 1..12),
        ) {
            let fake = FakeSandbox::new(DomainId::Game24, script);
            let transcript = fake.transcript();
            let mut ch = Channel::new(Box::new(fake));
            let mut answered = 0;
            for kind in reqs {
                if !ch.is_alive() {
                    ch.restart().unwrap();
                }
                ch.call(kind).unwrap();
                answered += 1;
            }
            let t = transcript.lock().unwrap();
            prop_assert_eq!(t.len(), answered);
            for (i, (req, resp)) in t.iter().enumerate() {
                prop_assert_eq!(req.id, resp.id);
                prop_assert_eq!(req.id, i as u64 + 1);
            }
        }
    }
}
