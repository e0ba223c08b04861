//! Accuracy of a component pair over a set of instances.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domains::{optimal_length, optimality_required, search_algorithm, validate_with_optimum, Instance, Verdict, DEFAULT_STATE_BUDGET};
use crate::model::{DomainId, Limits, Role};
use crate::sandbox::{Channel, Outcome, Payload, RequestKind, SessionError};
use crate::search::SearchStatus;

use super::record::{Checkpoint, RunRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance: String,
    pub solved: bool,
    /// Present when a plan was returned.
    pub verdict: Option<Verdict>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub per_instance: Vec<InstanceResult>,
}

/// Shortest plan lengths, computed once per instance.
#[derive(Debug, Default)]
pub struct OptimumCache(HashMap<(DomainId, String), Option<usize>>);

impl OptimumCache {
    pub fn get(&mut self, instance: &Instance) -> Option<usize> {
        if !optimality_required(instance.domain) {
            return None;
        }
        *self
            .0
            .entry((instance.domain, instance.id.clone()))
            .or_insert_with(|| optimal_length(instance, DEFAULT_STATE_BUDGET).ok().flatten())
    }
}

fn unsolved(instance: &Instance, note: impl Into<String>) -> InstanceResult {
    InstanceResult {
        instance: instance.id.clone(),
        solved: false,
        verdict: None,
        note: note.into(),
    }
}

fn call(channel: &mut Channel, kind: RequestKind) -> Result<Outcome, SessionError> {
    if !channel.is_alive() {
        channel.restart()?;
    }
    channel.call(kind)
}

fn load(channel: &mut Channel, successor: &str, goal: &str) -> Result<Option<String>, SessionError> {
    for (role, source) in [(Role::Successor, successor), (Role::Goal, goal)] {
        let kind = RequestKind::LoadCode {
            role,
            source: source.to_string(),
        };
        if let Outcome::Failure { failure } = call(channel, kind)? {
            return Ok(Some(format!("{role} function did not load: {}", failure.detail)));
        }
    }
    Ok(None)
}

/// Searches each instance with the given pair and validates the result.
/// Per-instance failures count as unsolved; only a sandbox that cannot be
/// restarted aborts the sweep.
pub fn evaluate_components(
    domain: DomainId,
    successor: &str,
    goal: &str,
    instances: &[Instance],
    channel: &mut Channel,
    limits: &Limits,
    optima: &mut OptimumCache,
) -> Result<Evaluation, SessionError> {
    let mut per_instance = Vec::with_capacity(instances.len());
    let mut loaded = false;
    for instance in instances {
        if !loaded || !channel.is_alive() {
            if let Some(note) = load(channel, successor, goal)? {
                per_instance.extend(instances[per_instance.len()..].iter().map(|i| unsolved(i, note.clone())));
                break;
            }
            loaded = true;
        }
        let kind = RequestKind::RunSearch {
            algorithm: search_algorithm(domain),
            instance: instance.clone(),
            domain,
            limits: *limits,
            partial_rule: None,
        };
        let result = match call(channel, kind)? {
            Outcome::Failure { failure } => {
                if failure.category.restarts_executor() {
                    channel.restart()?;
                    loaded = false;
                }
                unsolved(instance, format!("category {}: {}", failure.category.code(), failure.detail))
            }
            Outcome::Ok {
                payload: Payload::Search(report),
            } => match report.trace.filter(|_| report.status == SearchStatus::GoalFound) {
                Some(trace) => {
                    let v = validate_with_optimum(instance, &trace, optima.get(instance));
                    InstanceResult {
                        instance: instance.id.clone(),
                        solved: v.solved(),
                        note: v.reason.clone(),
                        verdict: Some(v),
                    }
                }
                // A question answered "no proof" is right when the answer is false.
                None if domain == DomainId::Prontoqa
                    && report.status == SearchStatus::Exhausted
                    && instance.known_answer == Some(false) =>
                {
                    InstanceResult {
                        instance: instance.id.clone(),
                        solved: true,
                        verdict: None,
                        note: "correctly found no proof".into(),
                    }
                }
                None => unsolved(instance, format!("no plan ({:?})", report.status)),
            },
            Outcome::Ok { payload } => unsolved(instance, format!("unexpected payload {payload:?}")),
        };
        per_instance.push(result);
    }
    let solved = per_instance.iter().filter(|r| r.solved).count();
    let accuracy = if instances.is_empty() {
        0.0
    } else {
        solved as f64 / instances.len() as f64
    };
    Ok(Evaluation {
        accuracy,
        per_instance,
    })
}

/// Evaluates every snapshot in `record` and stores the accuracies.
pub fn evaluate_checkpoints(
    record: &mut RunRecord,
    instances: &[Instance],
    channel: &mut Channel,
    limits: &Limits,
    optima: &mut OptimumCache,
) -> Result<(), SessionError> {
    for c in Checkpoint::ALL {
        let Some(snap) = record.snapshot(c).cloned() else {
            continue;
        };
        let e = evaluate_components(record.domain, &snap.successor, &snap.goal, instances, channel, limits, optima)?;
        record.checkpoint_accuracies.set(c, e.accuracy);
    }
    Ok(())
}
