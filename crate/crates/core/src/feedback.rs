//! Turns a [`CheckFailure`] into the message sent back to the model.
//!
//! Templates live in `assets/feedback`. A leading `# ...` line marks wording
//! authored for this project and is stripped before use.

use crate::model::{CheckFailure, DomainId, ErrorCategory, FailureKind};
use crate::value::StateValue;

/// Sentence every template ends with.
pub const CLOSING: &str =
    "Remember how you fixed the previous mistakes, if any. Keep the same function signature.";

macro_rules! asset {
    ($name:literal) => {
        include_str!(concat!("../assets/feedback/", $name, ".txt"))
    };
}

/// Template key: a category, refined by the failure kind where the wording
/// depends on it.
pub fn template_name(category: ErrorCategory, kind: Option<FailureKind>) -> &'static str {
    use ErrorCategory::*;
    use FailureKind::*;
    match (category, kind) {
        (SuccessorUnsound, Some(LengthNotOneLess)) => "partial_length_not_one_less",
        (SuccessorUnsound, Some(ClearTableMismatch)) => "partial_clear_table_mismatch",
        (SuccessorUnsound, Some(FewerFilledCells)) => "partial_fewer_filled_cells",
        (SuccessorUnsound, Some(SameFilledCells)) => "partial_same_filled_cells",
        (SuccessorUnsound, Some(TooManyFilledCells)) => "partial_too_many_filled_cells",
        (SuccessorUnsound, Some(LengthNotOneMore)) => "partial_length_not_one_more",
        (SuccessorUnsound, Some(DuplicateStones)) => "partial_duplicate_stones",
        (SuccessorUnsound, Some(PlayerOnStone)) => "partial_player_on_stone",
        (SuccessorUnsound, _) => "partial_malformed_state",
        (InputMutated, _) => "input_mutated",
        (SuccessorIncomplete, _) => "successor_incomplete",
        (GoalUnsound, Some(RejectedGoal)) => "goal_rejected_goal",
        (GoalUnsound, _) => "goal_accepted_non_goal",
        (SuccessorException, _) => "successor_exception",
        (GoalException, _) => "goal_exception",
        (SearchTimeout, _) => "search_timeout",
        (SuccessorTimeout, _) => "successor_timeout",
        (GoalTimeout, _) => "goal_timeout",
        (ResponseParse, _) => "response_parse",
    }
}

fn raw_template(name: &str) -> &'static str {
    match name {
        "partial_length_not_one_less" => asset!("partial_length_not_one_less"),
        "partial_clear_table_mismatch" => asset!("partial_clear_table_mismatch"),
        "partial_fewer_filled_cells" => asset!("partial_fewer_filled_cells"),
        "partial_same_filled_cells" => asset!("partial_same_filled_cells"),
        "partial_too_many_filled_cells" => asset!("partial_too_many_filled_cells"),
        "partial_length_not_one_more" => asset!("partial_length_not_one_more"),
        "partial_duplicate_stones" => asset!("partial_duplicate_stones"),
        "partial_player_on_stone" => asset!("partial_player_on_stone"),
        "partial_malformed_state" => asset!("partial_malformed_state"),
        "input_mutated" => asset!("input_mutated"),
        "successor_incomplete" => asset!("successor_incomplete"),
        "goal_rejected_goal" => asset!("goal_rejected_goal"),
        "goal_accepted_non_goal" => asset!("goal_accepted_non_goal"),
        "successor_exception" => asset!("successor_exception"),
        "goal_exception" => asset!("goal_exception"),
        "search_timeout" => asset!("search_timeout"),
        "successor_timeout" => asset!("successor_timeout"),
        "goal_timeout" => asset!("goal_timeout"),
        "response_parse" => asset!("response_parse"),
        _ => unreachable!("unknown template {name}"),
    }
}

/// Template body without the marker line or trailing newline.
pub fn template(category: ErrorCategory, kind: Option<FailureKind>) -> &'static str {
    let raw = raw_template(template_name(category, kind));
    let body = match raw.strip_prefix("# ") {
        Some(rest) => rest.split_once('\n').map_or("", |(_, b)| b),
        None => raw,
    };
    body.trim_end_matches('\n')
}

/// Whether the template is this project's own wording.
pub fn is_repo_authored(category: ErrorCategory, kind: Option<FailureKind>) -> bool {
    raw_template(template_name(category, kind)).starts_with("# ")
}

fn show(v: &Option<StateValue>) -> String {
    v.as_ref().map_or_else(|| "null".to_string(), StateValue::display)
}

/// Extra lines describing the instance context, each preceded by a newline.
fn context_lines(domain: DomainId, failure: &CheckFailure) -> String {
    let Some(ctx) = &failure.context else {
        return String::new();
    };
    let goal_side = matches!(
        failure.category,
        ErrorCategory::GoalUnsound | ErrorCategory::GoalException | ErrorCategory::GoalTimeout
    );
    match domain {
        DomainId::Crossword => match (ctx.get("horizontal_clues"), ctx.get("vertical_clues")) {
            (Some(h), Some(v)) => format!(
                "\nHorizontal answers: {}\nVertical answers: {}",
                h.display(),
                v.display()
            ),
            _ => format!("\nContext: {}", ctx.display()),
        },
        DomainId::Blocksworld => format!("\nGoal: {}", ctx.display()),
        DomainId::Prontoqa if goal_side => format!("\nGoal: {}", ctx.display()),
        DomainId::Prontoqa => format!("\nRules: {}", ctx.display()),
        DomainId::Sokoban => format!("\nGrid: {}", ctx.display()),
        DomainId::Game24 => format!("\nContext: {}", ctx.display()),
    }
}

/// Deterministic feedback text for `failure`.
pub fn render(failure: &CheckFailure, domain: DomainId) -> String {
    let context = context_lines(domain, failure);
    let on_state = failure
        .offending_state
        .as_ref()
        .map(|s| format!(" on the input state {}", s.display()))
        .unwrap_or_default();
    let missing = failure
        .missing_successors
        .as_ref()
        .map(|m| StateValue::List(m.clone()).display())
        .unwrap_or_else(|| "[]".to_string());
    let detail = if failure.detail.is_empty() {
        "no further details"
    } else {
        failure.detail.as_str()
    };
    let state = show(&failure.offending_state);
    let child = show(&failure.offending_child);

    let body = template(failure.category, failure.kind)
        .replace("{context}", &context)
        .replace("{on_state}", &on_state)
        .replace("{missing}", &missing)
        .replace("{child}", &child)
        .replace("{detail}", detail)
        .replace("{state}", &state);

    if failure.category == ErrorCategory::SuccessorUnsound {
        format!("{body}\n\nInput state: {state}{context}\nExample wrong successor state: {child}")
    } else {
        body
    }
}
