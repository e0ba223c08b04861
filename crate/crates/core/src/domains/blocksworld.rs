//! BlocksWorld with pick-up, put-down, stack and unstack.

use indexmap::IndexMap;

use crate::canon::dedupe;
use crate::model::DomainId;
use crate::value::StateValue;

use super::ShapeError;

fn shape(reason: impl Into<String>) -> ShapeError {
    ShapeError::new(DomainId::Blocksworld, reason)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Blocks {
    pub clear: Vec<String>,
    pub on_table: Vec<String>,
    pub holding: Option<String>,
    pub on: Vec<(String, String)>,
}

fn names(v: Option<&StateValue>, key: &str) -> Result<Vec<String>, ShapeError> {
    let items = match v {
        None | Some(StateValue::Null) => return Ok(Vec::new()),
        Some(v) => v.as_list().ok_or_else(|| shape(format!("`{key}` must be a list")))?,
    };
    items
        .iter()
        .map(|i| {
            i.as_str()
                .map(str::to_string)
                .ok_or_else(|| shape(format!("`{key}` entries must be block names")))
        })
        .collect()
}

fn pairs(v: Option<&StateValue>) -> Result<Vec<(String, String)>, ShapeError> {
    let items = match v {
        None | Some(StateValue::Null) => return Ok(Vec::new()),
        Some(v) => v.as_list().ok_or_else(|| shape("`on` must be a list"))?,
    };
    items
        .iter()
        .map(|p| match p.as_list() {
            Some([StateValue::Text(a), StateValue::Text(b)]) => Ok((a.clone(), b.clone())),
            _ => Err(shape("`on` entries must be [upper, lower] pairs")),
        })
        .collect()
}

impl Blocks {
    pub fn parse(state: &StateValue) -> Result<Self, ShapeError> {
        let m = state.as_map().ok_or_else(|| shape("expected an object"))?;
        for key in ["clear", "on-table", "arm-empty", "holding", "on"] {
            if !m.contains_key(key) {
                return Err(shape(format!("missing `{key}`")));
            }
        }
        let holding = match &m["holding"] {
            StateValue::Null => None,
            StateValue::Text(s) => Some(s.clone()),
            _ => return Err(shape("`holding` must be a block name or null")),
        };
        let arm_empty = m["arm-empty"]
            .as_bool()
            .ok_or_else(|| shape("`arm-empty` must be a boolean"))?;
        if arm_empty == holding.is_some() {
            return Err(shape("`arm-empty` disagrees with `holding`"));
        }
        Ok(Blocks {
            clear: names(m.get("clear"), "clear")?,
            on_table: names(m.get("on-table"), "on-table")?,
            holding,
            on: pairs(m.get("on"))?,
        })
    }

    pub fn to_value(&self) -> StateValue {
        let mut m = IndexMap::new();
        m.insert("clear".to_string(), StateValue::from(self.clear.clone()));
        m.insert("on-table".to_string(), StateValue::from(self.on_table.clone()));
        m.insert("arm-empty".to_string(), StateValue::Bool(self.holding.is_none()));
        m.insert("holding".to_string(), StateValue::from(self.holding.clone()));
        m.insert(
            "on".to_string(),
            StateValue::List(
                self.on
                    .iter()
                    .map(|(a, b)| StateValue::from(vec![a.clone(), b.clone()]))
                    .collect(),
            ),
        );
        StateValue::Map(m)
    }
}

fn without(v: &[String], x: &str) -> Vec<String> {
    v.iter().filter(|s| *s != x).cloned().collect()
}

pub fn successors(state: &StateValue) -> Result<Vec<StateValue>, ShapeError> {
    let b = Blocks::parse(state)?;
    let mut out = Vec::new();
    match &b.holding {
        None => {
            for x in &b.clear {
                if b.on_table.contains(x) {
                    out.push(Blocks {
                        clear: without(&b.clear, x),
                        on_table: without(&b.on_table, x),
                        holding: Some(x.clone()),
                        on: b.on.clone(),
                    });
                }
                for (upper, lower) in b.on.iter().filter(|(u, _)| u == x) {
                    let mut clear = without(&b.clear, x);
                    clear.push(lower.clone());
                    out.push(Blocks {
                        clear,
                        on_table: b.on_table.clone(),
                        holding: Some(upper.clone()),
                        on: b.on.iter().filter(|p| p.0 != *upper).cloned().collect(),
                    });
                }
            }
        }
        Some(h) => {
            let mut clear = b.clear.clone();
            clear.push(h.clone());
            let mut on_table = b.on_table.clone();
            on_table.push(h.clone());
            out.push(Blocks {
                clear,
                on_table,
                holding: None,
                on: b.on.clone(),
            });
            for y in b.clear.iter().filter(|y| *y != h) {
                let mut clear = without(&b.clear, y);
                clear.push(h.clone());
                let mut on = b.on.clone();
                on.push((h.clone(), y.clone()));
                out.push(Blocks {
                    clear,
                    on_table: b.on_table.clone(),
                    holding: None,
                    on,
                });
            }
        }
    }
    Ok(dedupe(
        DomainId::Blocksworld,
        out.iter().map(Blocks::to_value).collect(),
    ))
}

/// Every fact listed in the goal holds. Arm state is irrelevant.
pub fn is_goal(state: &StateValue, goal: Option<&StateValue>) -> Result<bool, ShapeError> {
    let b = Blocks::parse(state)?;
    let goal = goal.ok_or_else(|| shape("a goal description is required"))?;
    if goal.as_map().is_none() {
        return Err(shape("the goal must be an object"));
    }
    let clear = names(goal.get("clear"), "clear")?;
    let on_table = names(goal.get("on-table"), "on-table")?;
    let on = pairs(goal.get("on"))?;
    Ok(clear.iter().all(|x| b.clear.contains(x))
        && on_table.iter().all(|x| b.on_table.contains(x))
        && on.iter().all(|p| b.on.contains(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonical_eq;

    fn v(s: &str) -> StateValue {
        StateValue::from_json(s).unwrap()
    }

    #[test]
    fn holding_block_can_go_down_or_onto_any_clear_block() {
        let s = v(r#"{"clear":["a","c"],"on-table":["a","c"],"arm-empty":false,"holding":"b","on":[]}"#);
        let got = successors(&s).unwrap();
        assert_eq!(got.len(), 3);
        let stacked = v(r#"{"clear":["c","b"],"on-table":["a","c"],"arm-empty":true,"holding":null,"on":[["b","a"]]}"#);
        assert!(got.iter().any(|g| canonical_eq(DomainId::Blocksworld, g, &stacked)));
    }

    #[test]
    fn unstack_exposes_lower_block() {
        let s = v(r#"{"clear":["a"],"on-table":["b"],"arm-empty":true,"holding":null,"on":[["a","b"]]}"#);
        let got = successors(&s).unwrap();
        let want = v(r#"{"clear":["b"],"on-table":["b"],"arm-empty":false,"holding":"a","on":[]}"#);
        assert_eq!(got, vec![want]);
    }

    #[test]
    fn inconsistent_arm_is_malformed() {
        let s = v(r#"{"clear":[],"on-table":[],"arm-empty":true,"holding":"a","on":[]}"#);
        assert!(successors(&s).is_err());
        assert!(successors(&v("[1]")).is_err());
    }

    #[test]
    fn goal_checks_listed_facts_only() {
        let s = v(r#"{"clear":["a"],"on-table":["d"],"arm-empty":false,"holding":"b","on":[["a","c"],["c","d"]]}"#);
        let g = v(r#"{"clear":[],"on-table":[],"on":[["a","c"]]}"#);
        assert!(is_goal(&s, Some(&g)).unwrap());
        let g = v(r#"{"clear":["b"],"on-table":[],"on":[["a","c"]]}"#);
        assert!(!is_goal(&s, Some(&g)).unwrap());
        assert!(is_goal(&s, None).is_err());
    }
}
