//! One dialogue with the model, with per-role call accounting.

use serde::{Deserialize, Serialize};

use crate::model::{Limits, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub speaker: Speaker,
    pub content: String,
    /// Which function the exchange is about; absent for the system prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub about: Option<Role>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub successor: u32,
    pub goal: u32,
}

impl CallCounts {
    pub fn get(&self, role: Role) -> u32 {
        match role {
            Role::Successor => self.successor,
            Role::Goal => self.goal,
        }
    }

    pub fn total(&self) -> u32 {
        self.successor + self.goal
    }

    fn bump(&mut self, role: Role) {
        match role {
            Role::Successor => self.successor += 1,
            Role::Goal => self.goal += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BudgetExhausted {
    #[error("{role} function already used {used} of {limit} calls")]
    PerFunction { role: Role, used: u32, limit: u32 },
    #[error("all {limit} model calls already used")]
    Total { limit: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    messages: Vec<Message>,
    calls: CallCounts,
    per_function: u32,
    total: u32,
}

impl Conversation {
    pub fn new(system: &str, limits: &Limits) -> Self {
        Conversation {
            messages: vec![Message {
                speaker: Speaker::System,
                content: system.to_string(),
                about: None,
            }],
            calls: CallCounts::default(),
            per_function: limits.calls_per_function,
            total: limits.total_calls,
        }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn calls(&self) -> CallCounts {
        self.calls
    }

    /// Whether one more call about `role` fits both budgets.
    pub fn check_budget(&self, role: Role) -> Result<(), BudgetExhausted> {
        let used = self.calls.get(role);
        if used >= self.per_function {
            return Err(BudgetExhausted::PerFunction {
                role,
                used,
                limit: self.per_function,
            });
        }
        if self.calls.total() >= self.total {
            return Err(BudgetExhausted::Total { limit: self.total });
        }
        Ok(())
    }

    /// Records a completed exchange.
    pub fn record(&mut self, role: Role, user: String, assistant: String) {
        self.messages.push(Message {
            speaker: Speaker::User,
            content: user,
            about: Some(role),
        });
        self.messages.push(Message {
            speaker: Speaker::Assistant,
            content: assistant,
            about: Some(role),
        });
        self.calls.bump(role);
    }

    /// One JSON message per line.
    pub fn to_jsonl(&self) -> String {
        self.messages
            .iter()
            .map(|m| serde_json::to_string(m).expect("messages serialize") + "\n")
            .collect()
    }

    /// Rebuilds a conversation from [`to_jsonl`](Self::to_jsonl) output.
    pub fn from_jsonl(text: &str, limits: &Limits) -> Result<Self, TranscriptError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).enumerate();
        let first: Message = match lines.next() {
            Some((_, l)) => serde_json::from_str(l).map_err(|e| TranscriptError::Json { line: 1, source: e })?,
            None => return Err(TranscriptError::Shape("empty transcript".into())),
        };
        if first.speaker != Speaker::System {
            return Err(TranscriptError::Shape("first message must be the system prompt".into()));
        }
        let mut conv = Conversation::new(&first.content, limits);
        let mut pending: Option<Message> = None;
        for (i, l) in lines {
            let m: Message = serde_json::from_str(l).map_err(|e| TranscriptError::Json { line: i + 1, source: e })?;
            match (pending.take(), m.speaker, m.about) {
                (None, Speaker::User, Some(_)) => pending = Some(m),
                (Some(u), Speaker::Assistant, Some(role)) if u.about == Some(role) => {
                    conv.record(role, u.content, m.content)
                }
                _ => {
                    return Err(TranscriptError::Shape(format!(
                        "line {}: messages must alternate user/assistant about one role",
                        i + 1
                    )))
                }
            }
        }
        if pending.is_some() {
            return Err(TranscriptError::Shape("transcript ends with an unanswered message".into()));
        }
        Ok(conv)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Shape(String),
}
