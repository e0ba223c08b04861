//! Partial soundness rules: cheap per-transition invariants that any true
//! successor satisfies, checked during the instrumented search.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{CheckFailure, DomainId, FailureKind};
use crate::value::StateValue;

use super::{crossword, sokoban};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialRule {
    /// Accepts every transition.
    Trivial,
    Game24Length,
    BlocksClearTable,
    CrosswordFill,
    ProntoqaLength,
    SokobanStones,
}

impl PartialRule {
    pub fn for_domain(domain: DomainId) -> Self {
        match domain {
            DomainId::Game24 => PartialRule::Game24Length,
            DomainId::Blocksworld => PartialRule::BlocksClearTable,
            DomainId::Crossword => PartialRule::CrosswordFill,
            DomainId::Prontoqa => PartialRule::ProntoqaLength,
            DomainId::Sokoban => PartialRule::SokobanStones,
        }
    }

    /// `Ok` if the transition passes, otherwise the violated condition.
    pub fn check(self, parent: &StateValue, child: &StateValue) -> Result<(), FailureKind> {
        use FailureKind::*;
        let list_len = |s: &StateValue| s.as_list().map(<[_]>::len).ok_or(MalformedState);
        match self {
            PartialRule::Trivial => Ok(()),
            PartialRule::Game24Length => {
                if list_len(parent)? as i64 - list_len(child)? as i64 != 1 {
                    return Err(LengthNotOneLess);
                }
                Ok(())
            }
            PartialRule::BlocksClearTable => {
                let len = |key| {
                    child
                        .get(key)
                        .and_then(StateValue::as_list)
                        .map(<[_]>::len)
                        .ok_or(MalformedState)
                };
                if len("clear")? != len("on-table")? {
                    return Err(ClearTableMismatch);
                }
                Ok(())
            }
            PartialRule::CrosswordFill => {
                let ns = crossword::count_empty(parent).ok_or(MalformedState)?;
                let nt = crossword::count_empty(child).ok_or(MalformedState)?;
                if ns < nt {
                    Err(FewerFilledCells)
                } else if ns == nt {
                    Err(SameFilledCells)
                } else if ns - nt > 5 {
                    Err(TooManyFilledCells)
                } else {
                    Ok(())
                }
            }
            PartialRule::ProntoqaLength => {
                if parent == child {
                    return Ok(());
                }
                if list_len(child)? as i64 - list_len(parent)? as i64 != 1 {
                    return Err(LengthNotOneMore);
                }
                Ok(())
            }
            PartialRule::SokobanStones => {
                let (player, stones) = sokoban::parse(child).map_err(|_| MalformedState)?;
                let mut distinct = stones.clone();
                distinct.sort_unstable();
                distinct.dedup();
                if distinct.len() < stones.len() {
                    return Err(DuplicateStones);
                }
                if stones.contains(&player) {
                    return Err(PlayerOnStone);
                }
                Ok(())
            }
        }
    }

    /// Like [`check`](Self::check), packaged as a category-1 failure.
    pub fn verdict(self, parent: &StateValue, child: &StateValue) -> Result<(), CheckFailure> {
        self.check(parent, child).map_err(|kind| {
            let f = CheckFailure::partial(kind, parent.clone(), child.clone());
            if kind == FailureKind::MalformedState {
                f.with_detail("malformed state")
            } else {
                f
            }
        })
    }
}

impl fmt::Display for PartialRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

/// The domain's own partial soundness rule applied to one transition.
pub fn partial_check(
    domain: DomainId,
    parent: &StateValue,
    child: &StateValue,
) -> Result<(), CheckFailure> {
    PartialRule::for_domain(domain).verdict(parent, child)
}
