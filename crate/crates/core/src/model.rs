//! Shared vocabulary: domains, roles, suites, limits and the error taxonomy.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::value::StateValue;

/// The five built-in search domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainId {
    Game24,
    Blocksworld,
    Crossword,
    Prontoqa,
    Sokoban,
}

impl DomainId {
    pub const ALL: [DomainId; 5] = [
        DomainId::Game24,
        DomainId::Blocksworld,
        DomainId::Crossword,
        DomainId::Prontoqa,
        DomainId::Sokoban,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainId::Game24 => "game24",
            DomainId::Blocksworld => "blocksworld",
            DomainId::Crossword => "crossword",
            DomainId::Prontoqa => "prontoqa",
            DomainId::Sokoban => "sokoban",
        }
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown domain `{0}` (expected one of game24, blocksworld, crossword, prontoqa, sokoban)")]
pub struct UnknownDomain(pub String);

impl FromStr for DomainId {
    type Err = UnknownDomain;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "game24" | "24game" | "24" => Ok(DomainId::Game24),
            "blocksworld" | "blocks" => Ok(DomainId::Blocksworld),
            "crossword" | "crosswords" | "cw" => Ok(DomainId::Crossword),
            "prontoqa" => Ok(DomainId::Prontoqa),
            "sokoban" => Ok(DomainId::Sokoban),
            _ => Err(UnknownDomain(s.to_string())),
        }
    }
}

/// Which of the two generated functions a message, call or failure concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Successor,
    Goal,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Successor => "successor",
            Role::Goal => "goal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Algorithm {
    Bfs,
    Dfs,
}

/// One `parent -> child` step. Action labels are not modelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub parent: StateValue,
    pub child: StateValue,
}

/// A non-empty state sequence `s0..sn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<StateValue>", into = "Vec<StateValue>")]
pub struct Trace(Vec<StateValue>);

#[derive(Debug, Clone, thiserror::Error)]
#[error("a trace must contain at least one state")]
pub struct EmptyTrace;

impl Trace {
    pub fn new(states: Vec<StateValue>) -> Result<Self, EmptyTrace> {
        if states.is_empty() {
            Err(EmptyTrace)
        } else {
            Ok(Trace(states))
        }
    }

    pub fn states(&self) -> &[StateValue] {
        &self.0
    }

    pub fn first(&self) -> &StateValue {
        &self.0[0]
    }

    pub fn last(&self) -> &StateValue {
        self.0.last().expect("non-empty")
    }

    /// Number of transitions, i.e. `len - 1`.
    pub fn steps(&self) -> usize {
        self.0.len() - 1
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.0.windows(2).map(|w| Transition {
            parent: w[0].clone(),
            child: w[1].clone(),
        })
    }
}

impl TryFrom<Vec<StateValue>> for Trace {
    type Error = EmptyTrace;

    fn try_from(v: Vec<StateValue>) -> Result<Self, Self::Error> {
        Trace::new(v)
    }
}

impl From<Trace> for Vec<StateValue> {
    fn from(t: Trace) -> Self {
        t.0
    }
}

/// A state with a known goal classification, plus the instance goal if the
/// domain's goal is instance-specific.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalCase {
    pub state: StateValue,
    #[serde(default)]
    pub goal_ctx: Option<StateValue>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GoalTestSuite {
    pub goal_states: Vec<GoalCase>,
    pub nongoal_states: Vec<GoalCase>,
}

/// A parent state with some (not necessarily all) of its true successors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessorCase {
    pub state: StateValue,
    pub expected_successors: Vec<StateValue>,
    #[serde(default)]
    pub ctx: Option<StateValue>,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

/// Time and call budgets. Durations are written as seconds on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    #[serde(with = "secs")]
    pub per_call_timeout: Duration,
    #[serde(with = "secs")]
    pub search_timeout: Duration,
    pub calls_per_function: u32,
    pub total_calls: u32,
    pub repetitions: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            per_call_timeout: Duration::from_secs(1),
            search_timeout: Duration::from_secs(600),
            calls_per_function: 10,
            total_calls: 19,
            repetitions: 5,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("invalid limits: {0}")]
pub struct InvalidLimits(pub String);

impl Limits {
    pub fn validate(&self) -> Result<(), InvalidLimits> {
        if self.per_call_timeout.is_zero() || self.search_timeout.is_zero() {
            return Err(InvalidLimits("timeouts must be positive".into()));
        }
        if self.calls_per_function == 0 || self.repetitions == 0 {
            return Err(InvalidLimits(
                "calls_per_function and repetitions must be positive".into(),
            ));
        }
        if self.total_calls < 2 {
            return Err(InvalidLimits("total_calls must be at least 2".into()));
        }
        Ok(())
    }
}

/// The ten failure categories the harness can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ErrorCategory {
    SuccessorUnsound = 1,
    InputMutated = 2,
    SuccessorIncomplete = 3,
    GoalUnsound = 4,
    SuccessorException = 5,
    GoalException = 6,
    SearchTimeout = 7,
    SuccessorTimeout = 8,
    GoalTimeout = 9,
    ResponseParse = 10,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 10] = [
        ErrorCategory::SuccessorUnsound,
        ErrorCategory::InputMutated,
        ErrorCategory::SuccessorIncomplete,
        ErrorCategory::GoalUnsound,
        ErrorCategory::SuccessorException,
        ErrorCategory::GoalException,
        ErrorCategory::SearchTimeout,
        ErrorCategory::SuccessorTimeout,
        ErrorCategory::GoalTimeout,
        ErrorCategory::ResponseParse,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    /// The function whose code has to change to fix this failure. Parse
    /// errors have no inherent role; the caller knows which reply failed.
    pub fn role(self) -> Option<Role> {
        use ErrorCategory::*;
        match self {
            SuccessorUnsound | InputMutated | SuccessorIncomplete | SuccessorException
            | SearchTimeout | SuccessorTimeout => Some(Role::Successor),
            GoalUnsound | GoalException | GoalTimeout => Some(Role::Goal),
            ResponseParse => None,
        }
    }

    /// Failures after which the executor process is replaced.
    pub fn restarts_executor(self) -> bool {
        (5..=9).contains(&self.code())
    }

    pub fn exception(role: Role) -> Self {
        match role {
            Role::Successor => ErrorCategory::SuccessorException,
            Role::Goal => ErrorCategory::GoalException,
        }
    }

    pub fn call_timeout(role: Role) -> Self {
        match role {
            Role::Successor => ErrorCategory::SuccessorTimeout,
            Role::Goal => ErrorCategory::GoalTimeout,
        }
    }

    pub fn label(self) -> &'static str {
        use ErrorCategory::*;
        match self {
            SuccessorUnsound => "successor soundness test failed",
            InputMutated => "input state changed by successor",
            SuccessorIncomplete => "successor completeness failed",
            GoalUnsound => "goal soundness failed",
            SuccessorException => "successor exception occurred",
            GoalException => "goal exception occurred",
            SearchTimeout => "search timeout in successor soundness test",
            SuccessorTimeout => "successor execution took too long",
            GoalTimeout => "goal execution took too long",
            ResponseParse => "response parsing error",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.code(), self.label())
    }
}

impl TryFrom<u8> for ErrorCategory {
    type Error = String;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        ErrorCategory::ALL
            .get(usize::from(code).wrapping_sub(1))
            .copied()
            .ok_or_else(|| format!("error category must be 1..=10, got {code}"))
    }
}

impl From<ErrorCategory> for u8 {
    fn from(c: ErrorCategory) -> u8 {
        c.code()
    }
}

/// Finer classification inside a category: which partial-soundness rule
/// fired, or which direction a goal test got wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// 24 Game: child is not exactly one number shorter.
    LengthNotOneLess,
    /// BlocksWorld: `clear` and `on-table` differ in size.
    ClearTableMismatch,
    /// Crossword: more empty cells than the parent.
    FewerFilledCells,
    /// Crossword: same number of empty cells as the parent.
    SameFilledCells,
    /// Crossword: more than five cells filled in one step.
    TooManyFilledCells,
    /// ProntoQA: child is not exactly one fact longer.
    LengthNotOneMore,
    /// Sokoban: two stones share a cell.
    DuplicateStones,
    /// Sokoban: the player stands on a stone.
    PlayerOnStone,
    /// The child could not be interpreted as a state of the domain.
    MalformedState,
    /// Goal test returned true for a known non-goal.
    AcceptedNonGoal,
    /// Goal test returned false for a known goal.
    RejectedGoal,
}

/// Structured verdict of any check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckFailure {
    pub category: ErrorCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<FailureKind>,
    #[serde(default)]
    pub offending_state: Option<StateValue>,
    #[serde(default)]
    pub offending_child: Option<StateValue>,
    #[serde(default)]
    pub missing_successors: Option<Vec<StateValue>>,
    /// Instance context the offending state was evaluated under (goal,
    /// rules, grid, clues), when the domain has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<StateValue>,
    #[serde(default)]
    pub detail: String,
}

impl CheckFailure {
    fn bare(category: ErrorCategory) -> Self {
        CheckFailure {
            category,
            kind: None,
            offending_state: None,
            offending_child: None,
            missing_successors: None,
            context: None,
            detail: String::new(),
        }
    }

    pub fn partial(kind: FailureKind, parent: StateValue, child: StateValue) -> Self {
        CheckFailure {
            kind: Some(kind),
            offending_state: Some(parent),
            offending_child: Some(child),
            ..Self::bare(ErrorCategory::SuccessorUnsound)
        }
    }

    pub fn mutated(before: StateValue, after: StateValue) -> Self {
        CheckFailure {
            offending_state: Some(before),
            offending_child: Some(after),
            ..Self::bare(ErrorCategory::InputMutated)
        }
    }

    pub fn incomplete(
        state: StateValue,
        missing: Vec<StateValue>,
        context: Option<StateValue>,
    ) -> Self {
        CheckFailure {
            offending_state: Some(state),
            missing_successors: Some(missing),
            context,
            ..Self::bare(ErrorCategory::SuccessorIncomplete)
        }
    }

    /// Goal test misclassified `state`; `accepted` is what it wrongly returned.
    pub fn goal_mismatch(state: StateValue, context: Option<StateValue>, accepted: bool) -> Self {
        CheckFailure {
            kind: Some(if accepted {
                FailureKind::AcceptedNonGoal
            } else {
                FailureKind::RejectedGoal
            }),
            offending_state: Some(state),
            context,
            ..Self::bare(ErrorCategory::GoalUnsound)
        }
    }

    pub fn exception(role: Role, state: Option<StateValue>, detail: impl Into<String>) -> Self {
        CheckFailure {
            offending_state: state,
            detail: detail.into(),
            ..Self::bare(ErrorCategory::exception(role))
        }
    }

    pub fn call_timeout(role: Role, state: Option<StateValue>, detail: impl Into<String>) -> Self {
        CheckFailure {
            offending_state: state,
            detail: detail.into(),
            ..Self::bare(ErrorCategory::call_timeout(role))
        }
    }

    pub fn search_timeout(detail: impl Into<String>) -> Self {
        CheckFailure {
            detail: detail.into(),
            ..Self::bare(ErrorCategory::SearchTimeout)
        }
    }

    pub fn parse_error(detail: impl Into<String>) -> Self {
        CheckFailure {
            detail: detail.into(),
            ..Self::bare(ErrorCategory::ResponseParse)
        }
    }

    pub fn with_context(mut self, context: Option<StateValue>) -> Self {
        self.context = context;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Checks that the fields each category needs are populated.
    pub fn validate(&self) -> Result<(), String> {
        use ErrorCategory::*;
        let need_state = || {
            self.offending_state
                .as_ref()
                .map(|_| ())
                .ok_or_else(|| format!("category {} requires offending_state", self.category.code()))
        };
        match self.category {
            SuccessorUnsound | InputMutated => {
                need_state()?;
                if self.offending_child.is_none() {
                    return Err(format!(
                        "category {} requires offending_child",
                        self.category.code()
                    ));
                }
            }
            SuccessorIncomplete => {
                need_state()?;
                match &self.missing_successors {
                    Some(m) if !m.is_empty() => {}
                    _ => return Err("category 3 requires non-empty missing_successors".into()),
                }
            }
            GoalUnsound => {
                need_state()?;
                if !matches!(
                    self.kind,
                    Some(FailureKind::AcceptedNonGoal | FailureKind::RejectedGoal)
                ) {
                    return Err("category 4 requires a goal direction".into());
                }
            }
            _ => {}
        }
        if self.category == SuccessorUnsound && self.kind.is_none() {
            return Err("category 1 requires the violated rule".into());
        }
        Ok(())
    }
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "category {}", self.category)?;
        if let Some(s) = &self.offending_state {
            write!(f, " on {}", s.display())?;
        }
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}
