//! Reading and writing unit-test suite files.
//!
//! Files hold a stream of JSON values: one per line, pretty-printed arrays of
//! records, or several arrays back to back. For every domain except the 24
//! Game a top-level array is a list of records. In the 24 Game a goal-file
//! value is itself a state, and a successor-file value is `[state, [succ..]]`.

use indexmap::IndexMap;
use serde_json::Value;

use crate::model::{DomainId, GoalCase, SuccessorCase};
use crate::value::StateValue;

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

/// Top-level values with the line each starts on.
fn values(text: &str) -> Result<Vec<(usize, Value)>, SuiteError> {
    let mut out = Vec::new();
    let mut stream = serde_json::Deserializer::from_str(text).into_iter::<Value>();
    loop {
        let before = stream.byte_offset();
        match stream.next() {
            None => break,
            Some(Ok(v)) => {
                let skipped = text[before..].len() - text[before..].trim_start().len();
                out.push((line_of(text, before + skipped), v));
            }
            Some(Err(e)) => {
                return Err(SuiteError::Json {
                    line: e.line(),
                    source: e,
                })
            }
        }
    }
    Ok(out)
}

/// Expands top-level arrays into records for record-based domains.
fn records(domain: DomainId, text: &str) -> Result<Vec<(usize, Value)>, SuiteError> {
    let vals = values(text)?;
    if domain == DomainId::Game24 {
        return Ok(vals);
    }
    let mut out = Vec::new();
    for (line, v) in vals {
        match v {
            Value::Array(items) => out.extend(items.into_iter().map(|i| (line, i))),
            other => out.push((line, other)),
        }
    }
    Ok(out)
}

fn bad(line: usize, message: impl Into<String>) -> SuiteError {
    SuiteError::Record {
        line,
        message: message.into(),
    }
}

fn field(line: usize, rec: &serde_json::Map<String, Value>, key: &str) -> Result<StateValue, SuiteError> {
    rec.get(key)
        .map(StateValue::from)
        .ok_or_else(|| bad(line, format!("record has no `{key}` field")))
}

fn clues(line: usize, rec: &serde_json::Map<String, Value>) -> Result<StateValue, SuiteError> {
    let mut m = IndexMap::new();
    for key in ["horizontal_clues", "vertical_clues"] {
        m.insert(key.to_string(), field(line, rec, key)?);
    }
    Ok(StateValue::Map(m))
}

/// Key under which the goal context is stored in goal-file records.
fn goal_key(domain: DomainId) -> Option<&'static str> {
    match domain {
        DomainId::Blocksworld | DomainId::Prontoqa => Some("goal"),
        DomainId::Sokoban => Some("grid"),
        DomainId::Game24 | DomainId::Crossword => None,
    }
}

/// Key under which the successor context is stored in successor-file records.
fn ctx_key(domain: DomainId) -> Option<&'static str> {
    match domain {
        DomainId::Prontoqa => Some("rules"),
        DomainId::Sokoban => Some("grid"),
        _ => None,
    }
}

pub fn parse_goal_cases(domain: DomainId, text: &str) -> Result<Vec<GoalCase>, SuiteError> {
    records(domain, text)?
        .into_iter()
        .map(|(line, v)| {
            if domain == DomainId::Game24 {
                if !v.is_array() {
                    return Err(bad(line, "a 24 Game state must be a list of numbers"));
                }
                return Ok(GoalCase {
                    state: StateValue::from(&v),
                    goal_ctx: None,
                });
            }
            let rec = v
                .as_object()
                .ok_or_else(|| bad(line, "expected a record object"))?;
            let goal_ctx = match (domain, goal_key(domain)) {
                (DomainId::Crossword, _) => Some(clues(line, rec)?),
                (_, Some(k)) => Some(field(line, rec, k)?),
                _ => None,
            };
            Ok(GoalCase {
                state: field(line, rec, "state")?,
                goal_ctx,
            })
        })
        .collect()
}

pub fn parse_successor_cases(
    domain: DomainId,
    text: &str,
) -> Result<Vec<SuccessorCase>, SuiteError> {
    records(domain, text)?
        .into_iter()
        .map(|(line, v)| {
            let list = |s: StateValue| match s {
                StateValue::List(items) => Ok(items),
                _ => Err(bad(line, "successors must be a list")),
            };
            if domain == DomainId::Game24 {
                let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                    bad(line, "a 24 Game successor record is [state, [successors]]")
                })?;
                return Ok(SuccessorCase {
                    state: StateValue::from(&pair[0]),
                    expected_successors: list(StateValue::from(&pair[1]))?,
                    ctx: None,
                });
            }
            let rec = v
                .as_object()
                .ok_or_else(|| bad(line, "expected a record object"))?;
            let ctx = match (domain, ctx_key(domain)) {
                (DomainId::Crossword, _) => Some(clues(line, rec)?),
                (_, Some(k)) => Some(field(line, rec, k)?),
                _ => None,
            };
            Ok(SuccessorCase {
                state: field(line, rec, "state")?,
                expected_successors: list(field(line, rec, "successors")?)?,
                ctx,
            })
        })
        .collect()
}

fn with_context(
    mut rec: IndexMap<String, StateValue>,
    domain: DomainId,
    key: Option<&str>,
    ctx: &Option<StateValue>,
) -> IndexMap<String, StateValue> {
    match (domain, key, ctx) {
        (DomainId::Crossword, _, Some(StateValue::Map(m))) => {
            for (k, v) in m {
                rec.insert(k.clone(), v.clone());
            }
        }
        (_, Some(k), Some(c)) => {
            rec.insert(k.to_string(), c.clone());
        }
        _ => {}
    }
    rec
}

/// One record per line, in the layout [`parse_goal_cases`] reads.
pub fn write_goal_cases(domain: DomainId, cases: &[GoalCase]) -> String {
    let mut out = String::new();
    for case in cases {
        let line = if domain == DomainId::Game24 {
            case.state.display()
        } else {
            let mut rec = IndexMap::new();
            rec.insert("state".to_string(), case.state.clone());
            StateValue::Map(with_context(rec, domain, goal_key(domain), &case.goal_ctx)).display()
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn write_successor_cases(domain: DomainId, cases: &[SuccessorCase]) -> String {
    let mut out = String::new();
    for case in cases {
        let succ = StateValue::List(case.expected_successors.clone());
        let line = if domain == DomainId::Game24 {
            StateValue::List(vec![case.state.clone(), succ]).display()
        } else {
            let mut rec = IndexMap::new();
            rec.insert("state".to_string(), case.state.clone());
            rec.insert("successors".to_string(), succ);
            StateValue::Map(with_context(rec, domain, ctx_key(domain), &case.ctx)).display()
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn game24_lines_are_states() {
        let cases = parse_goal_cases(DomainId::Game24, "[]\n[3]\n[24, 1]\n").unwrap();
        assert_eq!(cases.len(), 3);
        assert_eq!(cases[0].state, StateValue::List(vec![]));
        assert_eq!(cases[2].state.display(), "[24, 1]");
    }

    #[test]
    fn arrays_of_records_are_flattened() {
        let text = "[\n {\"state\": [\"a\"], \"goal\": \"a\"},\n {\"state\": [\"b\"], \"goal\": \"c\"}\n]\n";
        let cases = parse_goal_cases(DomainId::Prontoqa, text).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[1].goal_ctx.as_ref().unwrap().as_str(), Some("c"));
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_goal_cases(DomainId::Game24, "[1]\n[2]\n[3,\n").unwrap_err();
        assert!(matches!(err, SuiteError::Json { line: 3, .. } | SuiteError::Json { line: 4, .. }), "{err}");
        let err = parse_goal_cases(DomainId::Sokoban, "{\"state\": {}, \"grid\": []}\n{\"state\": {}}\n")
            .unwrap_err();
        assert!(err.to_string().starts_with("line 2:"), "{err}");
        assert!(err.to_string().contains("grid"));
    }

    #[test]
    fn crossword_clues_become_one_context() {
        let text = r#"{"state": [[null]], "horizontal_clues": [["abcde"]], "vertical_clues": [["fghij"]]}"#;
        let cases = parse_goal_cases(DomainId::Crossword, text).unwrap();
        let ctx = cases[0].goal_ctx.as_ref().unwrap();
        assert!(ctx.get("horizontal_clues").is_some());
        assert!(ctx.get("vertical_clues").is_some());
    }

    fn num() -> impl Strategy<Value = StateValue> {
        prop_oneof![
            (-30i64..30).prop_map(StateValue::Int),
            (-30.0f64..30.0).prop_map(StateValue::Float),
        ]
    }

    proptest! {
        #[test]
        fn game24_suite_round_trip(
            states in prop::collection::vec(prop::collection::vec(num(), 0..5), 0..6),
            succ in prop::collection::vec(prop::collection::vec(num(), 0..4), 0..6),
        ) {
            let goal: Vec<GoalCase> = states
                .iter()
                .map(|s| GoalCase { state: StateValue::List(s.clone()), goal_ctx: None })
                .collect();
            let text = write_goal_cases(DomainId::Game24, &goal);
            prop_assert_eq!(parse_goal_cases(DomainId::Game24, &text).unwrap(), goal);

            let cases: Vec<SuccessorCase> = states
                .iter()
                .map(|s| SuccessorCase {
                    state: StateValue::List(s.clone()),
                    expected_successors: succ.iter().cloned().map(StateValue::List).collect(),
                    ctx: None,
                })
                .collect();
            let text = write_successor_cases(DomainId::Game24, &cases);
            prop_assert_eq!(parse_successor_cases(DomainId::Game24, &text).unwrap(), cases);
        }

        #[test]
        fn record_suite_round_trip(
            facts in prop::collection::vec(prop::collection::vec("[a-z]{1,6}", 1..4), 1..5),
            goal in "[a-z]{1,6}",
            rule_pairs in prop::collection::vec(("[a-z]{1,4}", "[a-z]{1,4}"), 0..4),
        ) {
            let rules = StateValue::List(
                rule_pairs
                    .into_iter()
                    .map(|(a, b)| StateValue::from(vec![a, b]))
                    .collect(),
            );
            let goal_cases: Vec<GoalCase> = facts
                .iter()
                .map(|f| GoalCase { state: StateValue::from(f.clone()), goal_ctx: Some(StateValue::from(goal.clone())) })
                .collect();
            let text = write_goal_cases(DomainId::Prontoqa, &goal_cases);
            prop_assert_eq!(parse_goal_cases(DomainId::Prontoqa, &text).unwrap(), goal_cases);

            let succ_cases: Vec<SuccessorCase> = facts
                .iter()
                .map(|f| SuccessorCase {
                    state: StateValue::from(f.clone()),
                    expected_successors: vec![StateValue::from(f.clone())],
                    ctx: Some(rules.clone()),
                })
                .collect();
            let text = write_successor_cases(DomainId::Prontoqa, &succ_cases);
            prop_assert_eq!(parse_successor_cases(DomainId::Prontoqa, &text).unwrap(), succ_cases);
        }
    }
}
