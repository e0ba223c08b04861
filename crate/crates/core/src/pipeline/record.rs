//! What a run leaves behind.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::llm::{CallCounts, Message};
use crate::model::{CheckFailure, DomainId, ErrorCategory, Role};

/// The four steps of the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// Initial prompts for both functions.
    Generate,
    GoalTests,
    /// Instrumented searches on the soundness instances.
    Soundness,
    /// Successor unit tests.
    Completeness,
}

impl Step {
    pub fn number(self) -> u8 {
        match self {
            Step::Generate => 1,
            Step::GoalTests => 2,
            Step::Soundness => 3,
            Step::Completeness => 4,
        }
    }
}

/// What a model call was for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initial,
    /// Repairing the goal test.
    Goal,
    /// Repairing the successor function after a search failure.
    Soundness,
    /// Repairing the successor function after a unit test failure.
    Completeness,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Initial, Phase::Goal, Phase::Soundness, Phase::Completeness];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Initial => "initial",
            Phase::Goal => "goal",
            Phase::Soundness => "soundness",
            Phase::Completeness => "completeness",
        }
    }
}

/// Moments at which the component pair is snapshotted for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Checkpoint {
    Initial,
    Soundness,
    Completeness,
}

impl Checkpoint {
    pub const ALL: [Checkpoint; 3] = [Checkpoint::Initial, Checkpoint::Soundness, Checkpoint::Completeness];

    pub fn as_str(self) -> &'static str {
        match self {
            Checkpoint::Initial => "initial",
            Checkpoint::Soundness => "soundness",
            Checkpoint::Completeness => "completeness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub checkpoint: Checkpoint,
    pub successor: String,
    pub goal: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Entered { step: Step },
    Failure { step: Step, failure: CheckFailure },
    /// A message sent to the model about `role`, feedback or initial prompt.
    Prompt { phase: Phase, role: Role, text: String },
    Checkpoint { checkpoint: Checkpoint },
    BudgetExhausted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "message", rename_all = "snake_case")]
pub enum RunStatus {
    /// Both functions passed every check.
    Completed,
    /// The call budget ran out first.
    BudgetExhausted,
    /// The backend or sandbox failed.
    Error(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accuracies {
    pub initial: Option<f64>,
    pub post_soundness: Option<f64>,
    pub post_completeness: Option<f64>,
}

impl Accuracies {
    pub fn get(&self, c: Checkpoint) -> Option<f64> {
        match c {
            Checkpoint::Initial => self.initial,
            Checkpoint::Soundness => self.post_soundness,
            Checkpoint::Completeness => self.post_completeness,
        }
    }

    pub fn set(&mut self, c: Checkpoint, v: f64) {
        match c {
            Checkpoint::Initial => self.initial = Some(v),
            Checkpoint::Soundness => self.post_soundness = Some(v),
            Checkpoint::Completeness => self.post_completeness = Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub domain: DomainId,
    pub backend: String,
    pub partial_soundness: bool,
    pub status: RunStatus,
    pub calls: CallCounts,
    pub calls_by_phase: BTreeMap<String, u32>,
    /// Failure counts keyed by category number.
    pub error_categories: BTreeMap<u8, u32>,
    pub checkpoint_reached: Option<Checkpoint>,
    pub snapshots: Vec<Snapshot>,
    #[serde(default)]
    pub checkpoint_accuracies: Accuracies,
    pub successor_source: Option<String>,
    pub goal_source: Option<String>,
    pub events: Vec<Event>,
    pub transcript: Vec<Message>,
}

impl RunRecord {
    pub fn total_calls(&self) -> u32 {
        self.calls.total()
    }

    pub fn phase_calls(&self, phase: Phase) -> u32 {
        self.calls_by_phase.get(phase.as_str()).copied().unwrap_or(0)
    }

    /// Categories of the failures seen, in order.
    pub fn failure_sequence(&self) -> Vec<ErrorCategory> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Failure { failure, .. } => Some(failure.category),
                _ => None,
            })
            .collect()
    }

    /// Steps entered, in order.
    pub fn step_sequence(&self) -> Vec<Step> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Entered { step } => Some(*step),
                _ => None,
            })
            .collect()
    }

    /// Texts sent to the model, in order, initial prompts included.
    pub fn prompts(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Prompt { text, .. } => Some(text.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn snapshot(&self, c: Checkpoint) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.checkpoint == c)
    }
}
