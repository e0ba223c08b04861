//! In-process stand-ins for generated code.
//!
//! The reference executor and the fake sandbox cannot run Python. Instead a
//! loaded source selects a behaviour: by default the reference oracle, or a
//! named fault fixture when the source carries a `# fixture: <name>` line.
//! Fixtures reproduce typical mistakes so the whole loop can be exercised
//! deterministically.

use std::sync::Arc;

use crate::domains::{ref_is_goal, ref_successors, sokoban};
use crate::model::{DomainId, Role};
use crate::value::StateValue;

/// How a call can go wrong besides returning a wrong value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallFault {
    /// The function raised; the text is what the runtime reported.
    Exception(String),
    /// The function did not return within the per-call limit.
    Hang,
    /// The executor process dies during the call.
    Crash,
    /// The executor stops responding altogether.
    Stall,
}

pub type SuccessorFn =
    Arc<dyn Fn(&mut StateValue, Option<&StateValue>) -> Result<Vec<StateValue>, CallFault> + Send + Sync>;
pub type GoalFn =
    Arc<dyn Fn(&StateValue, Option<&StateValue>) -> Result<bool, CallFault> + Send + Sync>;

#[derive(Clone)]
pub enum Candidate {
    Successor(SuccessorFn),
    Goal(GoalFn),
}

impl std::fmt::Debug for Candidate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Candidate::Successor(_) => f.write_str("Candidate::Successor"),
            Candidate::Goal(_) => f.write_str("Candidate::Goal"),
        }
    }
}

fn shape_fault(e: impl std::fmt::Display) -> CallFault {
    CallFault::Exception(format!("ValueError: {e}"))
}

pub fn golden_successor(domain: DomainId) -> SuccessorFn {
    Arc::new(move |s, ctx| ref_successors(domain, s, ctx).map_err(shape_fault))
}

pub fn golden_goal(domain: DomainId) -> GoalFn {
    Arc::new(move |s, ctx| ref_is_goal(domain, s, ctx).map_err(shape_fault))
}

/// Names accepted after `# fixture:` for each role.
pub const SUCCESSOR_FIXTURES: &[&str] = &[
    "golden",
    "mutate",
    "raise",
    "hang",
    "crash",
    "stall",
    "duplicate_numbers",
    "skip_division",
    "ignore_stones",
    "runaway",
];
pub const GOAL_FIXTURES: &[&str] = &[
    "golden",
    "raise",
    "hang",
    "crash",
    "stall",
    "contains_24",
    "len_one",
    "always_true",
    "always_false",
];

/// 24 Game successor that removes the chosen numbers by value, so duplicates
/// vanish together, and only tries `a+b`, `a-b`, `a*b`, `a/b`.
fn duplicate_numbers(state: &mut StateValue) -> Result<Vec<StateValue>, CallFault> {
    let nums = state
        .as_list()
        .ok_or_else(|| CallFault::Exception("TypeError: state is not a list".into()))?
        .to_vec();
    let mut out = Vec::new();
    for i in 0..nums.len() {
        for j in i + 1..nums.len() {
            let (a, b) = (nums[i].as_f64().unwrap_or(0.0), nums[j].as_f64().unwrap_or(0.0));
            let rest: Vec<StateValue> = nums
                .iter()
                .filter(|x| **x != nums[i] && **x != nums[j])
                .cloned()
                .collect();
            let ints = matches!((&nums[i], &nums[j]), (StateValue::Int(_), StateValue::Int(_)));
            let num = |x: f64| {
                if ints {
                    StateValue::Int(x as i64)
                } else {
                    StateValue::Float(x)
                }
            };
            let mut results = vec![num(a + b), num(a - b), num(a * b)];
            if b != 0.0 {
                results.push(StateValue::Float(a / b));
            }
            for r in results {
                let mut child = rest.clone();
                child.push(r);
                out.push(StateValue::List(child));
            }
        }
    }
    Ok(out)
}

/// Sokoban successor whose notion of a clear cell ignores stones.
fn ignore_stones(state: &mut StateValue, grid: Option<&StateValue>) -> Result<Vec<StateValue>, CallFault> {
    let (player, stones) = sokoban::parse(state).map_err(shape_fault)?;
    let rows: Vec<Vec<i64>> = grid
        .and_then(StateValue::as_list)
        .ok_or_else(|| CallFault::Exception("TypeError: grid is not a list".into()))?
        .iter()
        .map(|r| r.as_list().unwrap_or(&[]).iter().map(|c| c.as_i64().unwrap_or(1)).collect())
        .collect();
    let is_clear = |(r, c): (i64, i64)| {
        r >= 0
            && c >= 0
            && rows
                .get(r as usize)
                .and_then(|row| row.get(c as usize))
                .is_some_and(|v| *v == 0 || *v == 2)
    };
    let pos = |(r, c): (i64, i64)| StateValue::from(vec![r, c]);
    let mut out = Vec::new();
    for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
        let to = (player.0 + dr, player.1 + dc);
        let beyond = (to.0 + dr, to.1 + dc);
        let mut moved = stones.clone();
        if let Some(i) = stones.iter().position(|s| *s == to) {
            if is_clear(beyond) {
                moved[i] = beyond;
            }
        } else if !is_clear(to) {
            continue;
        }
        let mut m = indexmap::IndexMap::new();
        m.insert("at-player".to_string(), pos(to));
        m.insert(
            "at-stone".to_string(),
            StateValue::List(moved.into_iter().map(pos).collect()),
        );
        out.push(StateValue::Map(m));
    }
    Ok(out)
}

fn fault(f: CallFault) -> Result<Vec<StateValue>, CallFault> {
    Err(f)
}

pub fn successor_fixture(domain: DomainId, name: &str) -> Option<SuccessorFn> {
    let golden = golden_successor(domain);
    Some(match name {
        "golden" => golden,
        "mutate" => Arc::new(move |s, ctx| {
            let out = golden(s, ctx)?;
            match s {
                StateValue::List(items) => items.push(StateValue::Null),
                StateValue::Map(m) => {
                    m.insert("touched".into(), StateValue::Bool(true));
                }
                other => *other = StateValue::Null,
            }
            Ok(out)
        }),
        "raise" => Arc::new(|_, _| {
            fault(CallFault::Exception("IndexError: list index out of range".into()))
        }),
        "hang" => Arc::new(|_, _| fault(CallFault::Hang)),
        "crash" => Arc::new(|_, _| fault(CallFault::Crash)),
        "stall" => Arc::new(|_, _| fault(CallFault::Stall)),
        "duplicate_numbers" => Arc::new(|s, _| duplicate_numbers(s)),
        "skip_division" => Arc::new(move |s, ctx| {
            Ok(golden(s, ctx)?
                .into_iter()
                .filter(|c| {
                    c.as_list()
                        .is_some_and(|l| l.iter().all(|x| !matches!(x, StateValue::Float(_))))
                })
                .collect())
        }),
        "ignore_stones" => Arc::new(ignore_stones),
        // Produces ever longer states, so a search never runs out of nodes.
        "runaway" => Arc::new(|s, _| {
            let mut child = s.clone();
            if let StateValue::List(items) = &mut child {
                items.push(StateValue::Int(0));
            }
            Ok(vec![child])
        }),
        _ => return None,
    })
}

pub fn goal_fixture(domain: DomainId, name: &str) -> Option<GoalFn> {
    let numbers = |s: &StateValue| -> Result<Vec<f64>, CallFault> {
        s.as_list()
            .ok_or_else(|| CallFault::Exception("TypeError: state is not a list".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| CallFault::Exception("TypeError: not a number".into())))
            .collect()
    };
    Some(match name {
        "golden" => golden_goal(domain),
        "raise" => Arc::new(|_, _| Err(CallFault::Exception("KeyError: 'goal'".into()))),
        "hang" => Arc::new(|_, _| Err(CallFault::Hang)),
        "crash" => Arc::new(|_, _| Err(CallFault::Crash)),
        "stall" => Arc::new(|_, _| Err(CallFault::Stall)),
        "contains_24" => Arc::new(move |s, _| Ok(numbers(s)?.contains(&24.0))),
        "len_one" => Arc::new(move |s, _| Ok(numbers(s)?.len() == 1)),
        "always_true" => Arc::new(|_, _| Ok(true)),
        "always_false" => Arc::new(|_, _| Ok(false)),
        _ => return None,
    })
}

/// Marker line selecting a fixture, e.g. `# fixture: hang`.
pub const FIXTURE_MARKER: &str = "# fixture:";

/// Builds the behaviour a source stands for. Errors mean the executor would
/// fail to load the code.
pub fn from_source(domain: DomainId, role: Role, source: &str) -> Result<Candidate, String> {
    if !source.lines().any(|l| l.trim_start().starts_with("def ")) {
        return Err("load error: no function definition found".into());
    }
    let name = source
        .lines()
        .find_map(|l| l.trim().strip_prefix(FIXTURE_MARKER))
        .map(str::trim)
        .unwrap_or("golden");
    let unknown = || format!("load error: unknown fixture `{name}`");
    match role {
        Role::Successor => successor_fixture(domain, name)
            .map(Candidate::Successor)
            .ok_or_else(unknown),
        Role::Goal => goal_fixture(domain, name).map(Candidate::Goal).ok_or_else(unknown),
    }
}

/// Source text that [`from_source`] maps to the named fixture.
pub fn fixture_source(role: Role, name: &str) -> String {
    let (fname, args) = match role {
        Role::Successor => ("succ", "state, *ctx"),
        Role::Goal => ("goal", "state, *ctx"),
    };
    format!("def {fname}({args}):\n    {FIXTURE_MARKER} {name}\n    raise NotImplementedError\n")
}
