//! Human-readable run log: prompts, model replies and harness messages in the
//! order they happened.

use std::fmt::Write;

use crate::llm::Speaker;

use super::record::{Event, RunRecord, RunStatus};

const RULE: &str = "----------------------------------------";

fn section(out: &mut String, title: &str, body: &str) {
    let _ = writeln!(out, "{title}\n{}\n{RULE}", body.trim_end());
}

/// Renders `record` as plain text. Each prompt is followed by the model reply
/// it produced; check results and checkpoints appear as system messages.
pub fn clean_log(record: &RunRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "domain: {}\nbackend: {}\npartial soundness: {}\n{RULE}",
        record.domain,
        record.backend,
        if record.partial_soundness { "on" } else { "off" }
    );
    let mut replies = record
        .transcript
        .iter()
        .filter(|m| m.speaker == Speaker::Assistant)
        .map(|m| m.content.as_str());
    for event in &record.events {
        match event {
            Event::Entered { .. } => {}
            Event::Prompt { text, .. } => {
                section(&mut out, "AutoToS prompt:", text);
                if let Some(reply) = replies.next() {
                    section(&mut out, "Model response:", reply);
                }
            }
            Event::Failure { step, failure } => {
                let mut body = format!("step {} check failed: category {}", step.number(), failure.category);
                if !failure.detail.is_empty() {
                    let _ = write!(body, "\n{}", failure.detail);
                }
                section(&mut out, "System message:", &body);
            }
            Event::Checkpoint { checkpoint } => {
                section(&mut out, "System message:", &format!("passed checkpoint: {}", checkpoint.as_str()));
            }
            Event::BudgetExhausted { reason } => {
                section(&mut out, "System message:", &format!("stopped: {reason}"));
            }
        }
    }
    let end = match &record.status {
        RunStatus::Completed => format!("completed after {} calls", record.total_calls()),
        RunStatus::BudgetExhausted => format!("budget exhausted after {} calls", record.total_calls()),
        RunStatus::Error(e) => format!("aborted: {e}"),
    };
    section(&mut out, "System message:", &end);
    out
}
