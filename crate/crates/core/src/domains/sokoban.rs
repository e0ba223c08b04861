//! Sokoban on a grid of 0 (free), 1 (wall) and 2 (goal cell for a stone).

use indexmap::IndexMap;

use crate::canon::dedupe;
use crate::model::DomainId;
use crate::value::StateValue;

use super::ShapeError;

fn shape(reason: impl Into<String>) -> ShapeError {
    ShapeError::new(DomainId::Sokoban, reason)
}

type Pos = (i64, i64);

const MOVES: [Pos; 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

pub(crate) fn pos(v: &StateValue) -> Option<Pos> {
    match v.as_list()? {
        [r, c] => Some((r.as_i64()?, c.as_i64()?)),
        _ => None,
    }
}

fn pos_value(p: Pos) -> StateValue {
    StateValue::from(vec![p.0, p.1])
}

pub(crate) fn parse(state: &StateValue) -> Result<(Pos, Vec<Pos>), ShapeError> {
    let player = state
        .get("at-player")
        .and_then(pos)
        .ok_or_else(|| shape("`at-player` must be a [row, col] pair"))?;
    let stones = state
        .get("at-stone")
        .and_then(StateValue::as_list)
        .ok_or_else(|| shape("`at-stone` must be a list of [row, col] pairs"))?
        .iter()
        .map(|s| pos(s).ok_or_else(|| shape("`at-stone` must be a list of [row, col] pairs")))
        .collect::<Result<_, _>>()?;
    Ok((player, stones))
}

struct Grid(Vec<Vec<i64>>);

impl Grid {
    fn parse(ctx: Option<&StateValue>) -> Result<Self, ShapeError> {
        let rows = ctx
            .and_then(StateValue::as_list)
            .ok_or_else(|| shape("a grid is required"))?;
        rows.iter()
            .map(|r| {
                r.as_list()
                    .ok_or_else(|| shape("grid rows must be lists"))?
                    .iter()
                    .map(|c| match c.as_i64() {
                        Some(v @ 0..=2) => Ok(v),
                        _ => Err(shape("grid cells must be 0, 1 or 2")),
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()
            .map(Grid)
    }

    fn cell(&self, (r, c): Pos) -> Option<i64> {
        let row = self.0.get(usize::try_from(r).ok()?)?;
        row.get(usize::try_from(c).ok()?).copied()
    }

    fn open(&self, p: Pos) -> bool {
        self.cell(p).is_some_and(|v| v != 1)
    }
}

fn state_value(player: Pos, stones: &[Pos]) -> StateValue {
    let mut m = IndexMap::new();
    m.insert("at-player".to_string(), pos_value(player));
    m.insert(
        "at-stone".to_string(),
        StateValue::List(stones.iter().copied().map(pos_value).collect()),
    );
    StateValue::Map(m)
}

pub fn successors(state: &StateValue, ctx: Option<&StateValue>) -> Result<Vec<StateValue>, ShapeError> {
    let (player, stones) = parse(state)?;
    let grid = Grid::parse(ctx)?;
    let mut out = Vec::new();
    for (dr, dc) in MOVES {
        let to = (player.0 + dr, player.1 + dc);
        if !grid.open(to) {
            continue;
        }
        match stones.iter().position(|s| *s == to) {
            None => out.push(state_value(to, &stones)),
            Some(i) => {
                let beyond = (to.0 + dr, to.1 + dc);
                if grid.open(beyond) && !stones.contains(&beyond) {
                    let mut moved = stones.clone();
                    moved[i] = beyond;
                    out.push(state_value(to, &moved));
                }
            }
        }
    }
    Ok(dedupe(DomainId::Sokoban, out))
}

/// Every stone rests on a goal cell.
pub fn is_goal(state: &StateValue, ctx: Option<&StateValue>) -> Result<bool, ShapeError> {
    let (_, stones) = parse(state)?;
    let grid = Grid::parse(ctx)?;
    Ok(stones.iter().all(|s| grid.cell(*s) == Some(2)))
}
