//! The generate, test and repair loop for one domain.
//!
//! Step 1 asks for both functions. Step 2 runs the goal unit tests. Step 3
//! runs instrumented searches on the soundness instances. Step 4 runs the
//! successor unit tests. A goal failure anywhere sends control back to
//! Step 2; a successor failure in Step 3 or 4 sends it back to Step 3. Every
//! repair costs one model call, so the budget bounds the loop.

use std::collections::BTreeMap;

use crate::domains::{ref_is_goal, DomainSpec};
use crate::feedback::render;
use crate::llm::{complete, extract_code, BudgetExhausted, CompletionError, Conversation, ModelBackend};
use crate::model::{CheckFailure, DomainId, Limits, Role};
use crate::sandbox::{Channel, Outcome, Payload, RequestKind};
use crate::search::SearchStatus;

use super::record::{Checkpoint, Event, Phase, RunRecord, RunStatus, Snapshot, Step};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: DomainId,
    pub limits: Limits,
    pub partial_soundness: bool,
    /// Free-form description of the model backend, kept in the record.
    pub backend: String,
}

impl RunConfig {
    pub fn new(domain: DomainId) -> Self {
        RunConfig {
            domain,
            limits: Limits::default(),
            partial_soundness: true,
            backend: "unspecified".into(),
        }
    }
}

enum Halt {
    Budget(BudgetExhausted),
    Error(String),
}

enum Verdict {
    Pass,
    /// A failure and the role whose code was running.
    Fail(CheckFailure, Role),
}

struct Run<'a> {
    spec: &'static DomainSpec,
    cfg: &'a RunConfig,
    backend: &'a mut dyn ModelBackend,
    channel: &'a mut Channel,
    conv: Conversation,
    events: Vec<Event>,
    phase_calls: BTreeMap<String, u32>,
    errors: BTreeMap<u8, u32>,
    snapshots: Vec<Snapshot>,
    successor: Option<String>,
    goal: Option<String>,
    loaded_successor: Option<String>,
    loaded_goal: Option<String>,
}

/// Runs the loop to completion, budget exhaustion or a fatal backend or
/// sandbox error. Never panics on model output; the record says how it ended.
pub fn run_autotos(cfg: &RunConfig, backend: &mut dyn ModelBackend, channel: &mut Channel) -> RunRecord {
    let spec = DomainSpec::get(cfg.domain);
    let mut run = Run {
        spec,
        cfg,
        backend,
        channel,
        conv: Conversation::new(&spec.prompts.system, &cfg.limits),
        events: Vec::new(),
        phase_calls: Phase::ALL.iter().map(|p| (p.as_str().to_string(), 0)).collect(),
        errors: BTreeMap::new(),
        snapshots: Vec::new(),
        successor: None,
        goal: None,
        loaded_successor: None,
        loaded_goal: None,
    };
    let status = match run.drive() {
        Ok(()) => RunStatus::Completed,
        Err(Halt::Budget(b)) => {
            tracing::info!(domain = %cfg.domain, reason = %b, "budget exhausted");
            run.events.push(Event::BudgetExhausted { reason: b.to_string() });
            RunStatus::BudgetExhausted
        }
        Err(Halt::Error(e)) => {
            tracing::error!(domain = %cfg.domain, error = %e, "run aborted");
            RunStatus::Error(e)
        }
    };
    RunRecord {
        domain: cfg.domain,
        backend: cfg.backend.clone(),
        partial_soundness: cfg.partial_soundness,
        status,
        calls: run.conv.calls(),
        calls_by_phase: run.phase_calls,
        error_categories: run.errors,
        checkpoint_reached: run.snapshots.iter().map(|s| s.checkpoint).max(),
        snapshots: run.snapshots,
        checkpoint_accuracies: Default::default(),
        successor_source: run.successor,
        goal_source: run.goal,
        events: run.events,
        transcript: run.conv.messages().to_vec(),
    }
}

impl Run<'_> {
    fn drive(&mut self) -> Result<(), Halt> {
        self.enter(Step::Generate);
        let prompts = &self.spec.prompts;
        self.successor = Some(self.ask(Role::Successor, Phase::Initial, prompts.successor_initial.clone())?);
        self.goal = Some(self.ask(Role::Goal, Phase::Initial, prompts.goal_initial.clone())?);
        self.snapshot(Checkpoint::Initial);

        'goal: loop {
            loop {
                self.enter(Step::GoalTests);
                match self.goal_tests()? {
                    Verdict::Pass => break,
                    Verdict::Fail(f, role) => {
                        self.repair(Step::GoalTests, f, role)?;
                    }
                }
            }
            loop {
                self.enter(Step::Soundness);
                if let Verdict::Fail(f, role) = self.soundness()? {
                    if self.repair(Step::Soundness, f, role)? == Role::Goal {
                        continue 'goal;
                    }
                    continue;
                }
                self.snapshot(Checkpoint::Soundness);

                self.enter(Step::Completeness);
                match self.completeness()? {
                    Verdict::Pass => {
                        self.snapshot(Checkpoint::Completeness);
                        return Ok(());
                    }
                    Verdict::Fail(f, role) => {
                        if self.repair(Step::Completeness, f, role)? == Role::Goal {
                            continue 'goal;
                        }
                    }
                }
            }
        }
    }

    fn enter(&mut self, step: Step) {
        tracing::debug!(step = step.number(), "entering step");
        self.events.push(Event::Entered { step });
    }

    fn snapshot(&mut self, checkpoint: Checkpoint) {
        self.events.push(Event::Checkpoint { checkpoint });
        // The first time a checkpoint is passed is the one that counts.
        if self.snapshots.iter().any(|s| s.checkpoint == checkpoint) {
            return;
        }
        self.snapshots.push(Snapshot {
            checkpoint,
            successor: self.successor.clone().unwrap_or_default(),
            goal: self.goal.clone().unwrap_or_default(),
        });
    }

    fn record_failure(&mut self, step: Step, failure: CheckFailure) {
        tracing::info!(step = step.number(), category = failure.category.code(), "check failed");
        *self.errors.entry(failure.category.code()).or_default() += 1;
        self.events.push(Event::Failure { step, failure });
    }

    /// Sends `text` and returns the extracted function, re-asking while the
    /// reply cannot be parsed.
    fn ask(&mut self, role: Role, phase: Phase, mut text: String) -> Result<String, Halt> {
        loop {
            self.conv.check_budget(role).map_err(Halt::Budget)?;
            self.events.push(Event::Prompt {
                phase,
                role,
                text: text.clone(),
            });
            let reply = match complete(self.backend, &mut self.conv, &text, role) {
                Ok(r) => r,
                Err(CompletionError::Budget(b)) => return Err(Halt::Budget(b)),
                Err(CompletionError::Backend(e)) => return Err(Halt::Error(e.to_string())),
            };
            *self.phase_calls.entry(phase.as_str().to_string()).or_default() += 1;
            match extract_code(&reply) {
                Ok(e) => return Ok(e.source),
                Err(f) => {
                    let step = self.current_step();
                    text = render(&f, self.cfg.domain);
                    self.record_failure(step, f);
                }
            }
        }
    }

    fn current_step(&self) -> Step {
        self.events
            .iter()
            .rev()
            .find_map(|e| match e {
                Event::Entered { step } => Some(*step),
                _ => None,
            })
            .unwrap_or(Step::Generate)
    }

    /// Records `failure`, sends its feedback to the responsible function and
    /// installs the new version. Returns the role that was repaired.
    fn repair(&mut self, step: Step, failure: CheckFailure, fallback: Role) -> Result<Role, Halt> {
        let role = failure.category.role().unwrap_or(fallback);
        let phase = match (role, step) {
            (Role::Goal, _) => Phase::Goal,
            (Role::Successor, Step::Completeness) => Phase::Completeness,
            (Role::Successor, _) => Phase::Soundness,
        };
        let text = render(&failure, self.cfg.domain);
        self.record_failure(step, failure);
        let source = self.ask(role, phase, text)?;
        match role {
            Role::Successor => self.successor = Some(source),
            Role::Goal => self.goal = Some(source),
        }
        Ok(role)
    }

    fn call(&mut self, kind: RequestKind) -> Result<Outcome, Halt> {
        let outcome = self
            .channel
            .call(kind)
            .map_err(|e| Halt::Error(format!("sandbox: {e}")))?;
        let restart = outcome
            .failure()
            .is_some_and(|f| f.category.restarts_executor());
        if restart || !self.channel.is_alive() {
            self.channel
                .restart()
                .map_err(|e| Halt::Error(format!("sandbox restart: {e}")))?;
            self.loaded_successor = None;
            self.loaded_goal = None;
        }
        Ok(outcome)
    }

    /// Makes sure the executor holds the current version of `role`.
    fn load(&mut self, role: Role) -> Result<Verdict, Halt> {
        let (current, loaded) = match role {
            Role::Successor => (&self.successor, &self.loaded_successor),
            Role::Goal => (&self.goal, &self.loaded_goal),
        };
        let source = current.clone().expect("sources exist after step 1");
        if loaded.as_ref() == Some(&source) {
            return Ok(Verdict::Pass);
        }
        match self.call(RequestKind::LoadCode {
            role,
            source: source.clone(),
        })? {
            Outcome::Failure { failure } => Ok(Verdict::Fail(failure, role)),
            Outcome::Ok { .. } => {
                match role {
                    Role::Successor => self.loaded_successor = Some(source),
                    Role::Goal => self.loaded_goal = Some(source),
                }
                Ok(Verdict::Pass)
            }
        }
    }

    fn goal_tests(&mut self) -> Result<Verdict, Halt> {
        if let fail @ Verdict::Fail(..) = self.load(Role::Goal)? {
            return Ok(fail);
        }
        let suite = self.spec.goal_suite.clone();
        Ok(match self.call(RequestKind::RunGoalTests { suite })? {
            Outcome::Failure { failure } => Verdict::Fail(failure, Role::Goal),
            Outcome::Ok { .. } => Verdict::Pass,
        })
    }

    fn soundness(&mut self) -> Result<Verdict, Halt> {
        for role in [Role::Successor, Role::Goal] {
            if let fail @ Verdict::Fail(..) = self.load(role)? {
                return Ok(fail);
            }
        }
        let domain = self.cfg.domain;
        let rule = self.cfg.partial_soundness.then_some(self.spec.partial_rule);
        for instance in &self.spec.soundness_instances {
            let kind = RequestKind::RunSearch {
                algorithm: self.spec.search_algorithm,
                instance: instance.clone(),
                domain,
                limits: self.cfg.limits,
                partial_rule: rule,
            };
            match self.call(kind)? {
                Outcome::Failure { failure } => return Ok(Verdict::Fail(failure, Role::Successor)),
                Outcome::Ok {
                    payload: Payload::Search(report),
                } => {
                    let Some(trace) = report.trace.filter(|_| report.status == SearchStatus::GoalFound) else {
                        continue;
                    };
                    let last = trace.last();
                    let truly = ref_is_goal(domain, last, instance.goal_ctx.as_ref()).unwrap_or(false);
                    if !truly {
                        return Ok(Verdict::Fail(
                            CheckFailure::goal_mismatch(last.clone(), instance.goal_ctx.clone(), true),
                            Role::Goal,
                        ));
                    }
                }
                Outcome::Ok { payload } => {
                    return Err(Halt::Error(format!("sandbox: unexpected search payload {payload:?}")))
                }
            }
        }
        Ok(Verdict::Pass)
    }

    fn completeness(&mut self) -> Result<Verdict, Halt> {
        if let fail @ Verdict::Fail(..) = self.load(Role::Successor)? {
            return Ok(fail);
        }
        let cases = self.spec.successor_suite.clone();
        Ok(match self.call(RequestKind::RunSuccessorTests { cases })? {
            Outcome::Failure { failure } => Verdict::Fail(failure, Role::Successor),
            Outcome::Ok { .. } => Verdict::Pass,
        })
    }

}
