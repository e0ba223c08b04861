//! Model access: conversations with call budgets, reply backends, and code
//! extraction from replies.

pub mod backend;
pub mod conversation;
pub mod extract;

pub use backend::{BackendError, HttpBackend, HttpSettings, ModelBackend, ScriptedBackend};
pub use conversation::{BudgetExhausted, CallCounts, Conversation, Message, Speaker};
pub use extract::{extract_code, Extracted};

use crate::model::Role;

#[derive(Debug, thiserror::Error)]
pub enum CompletionError {
    #[error(transparent)]
    Budget(#[from] BudgetExhausted),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Sends `user_msg` about `role` and records the exchange. Nothing is
/// recorded or counted if the budget is spent or the backend fails.
pub fn complete(
    backend: &mut dyn ModelBackend,
    conversation: &mut Conversation,
    user_msg: &str,
    role: Role,
) -> Result<String, CompletionError> {
    conversation.check_budget(role)?;
    let mut messages = conversation.messages().to_vec();
    messages.push(Message {
        speaker: Speaker::User,
        content: user_msg.to_string(),
        about: Some(role),
    });
    let reply = backend.reply(&messages)?;
    conversation.record(role, user_msg.to_string(), reply.clone());
    Ok(reply)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Limits;

    #[test]
    fn initial_prompts_use_one_call_each() {
        let mut b = ScriptedBackend::new(["a", "b"]);
        let mut c = Conversation::new("sys", &Limits::default());
        complete(&mut b, &mut c, "successor please", Role::Successor).unwrap();
        complete(&mut b, &mut c, "goal please", Role::Goal).unwrap();
        assert_eq!(c.calls(), CallCounts { successor: 1, goal: 1 });
        assert_eq!(c.calls().total(), 2);
        assert_eq!(c.messages().len(), 5);
        assert!(matches!(
            complete(&mut b, &mut c, "again", Role::Goal),
            Err(CompletionError::Backend(BackendError::Exhausted { .. }))
        ));
        assert_eq!(c.messages().len(), 5);
    }
}
