//! ProntoQA: forward chaining over `[premise, conclusion]` rules. Facts are
//! opaque strings; `not-x` is just another atom.

use crate::canon::dedupe;
use crate::model::DomainId;
use crate::value::StateValue;

use super::ShapeError;

fn shape(reason: impl Into<String>) -> ShapeError {
    ShapeError::new(DomainId::Prontoqa, reason)
}

pub(crate) fn facts(state: &StateValue) -> Result<Vec<&str>, ShapeError> {
    state
        .as_list()
        .ok_or_else(|| shape("expected a list of facts"))?
        .iter()
        .map(|f| f.as_str().ok_or_else(|| shape("facts must be strings")))
        .collect()
}

pub(crate) fn rules(ctx: Option<&StateValue>) -> Result<Vec<(&str, &str)>, ShapeError> {
    ctx.and_then(StateValue::as_list)
        .ok_or_else(|| shape("a rule list is required"))?
        .iter()
        .map(|r| match r.as_list() {
            Some([StateValue::Text(a), StateValue::Text(b)]) => Ok((a.as_str(), b.as_str())),
            _ => Err(shape("rules must be [premise, conclusion] pairs")),
        })
        .collect()
}

pub fn successors(state: &StateValue, ctx: Option<&StateValue>) -> Result<Vec<StateValue>, ShapeError> {
    let known = facts(state)?;
    let mut out = Vec::new();
    for (a, b) in rules(ctx)? {
        if known.contains(&a) && !known.contains(&b) {
            let mut next: Vec<StateValue> = known.iter().map(|f| StateValue::from(*f)).collect();
            next.push(StateValue::from(b));
            out.push(StateValue::List(next));
        }
    }
    Ok(dedupe(DomainId::Prontoqa, out))
}

pub fn is_goal(state: &StateValue, goal: Option<&StateValue>) -> Result<bool, ShapeError> {
    let known = facts(state)?;
    let goal = goal
        .and_then(StateValue::as_str)
        .ok_or_else(|| shape("the goal must be a fact string"))?;
    Ok(known.contains(&goal))
}
