//! 5x5 mini crosswords. A state is a grid of letters and nulls; a move fills
//! one whole row or column with a candidate answer from its clue list.

use crate::canon::dedupe;
use crate::model::DomainId;
use crate::value::StateValue;

use super::ShapeError;

pub const SIZE: usize = 5;

fn shape(reason: impl Into<String>) -> ShapeError {
    ShapeError::new(DomainId::Crossword, reason)
}

pub(crate) type Grid = Vec<Vec<Option<String>>>;

pub(crate) fn parse_grid(state: &StateValue) -> Result<Grid, ShapeError> {
    let rows = state.as_list().ok_or_else(|| shape("expected a list of rows"))?;
    if rows.len() != SIZE {
        return Err(shape(format!("expected {SIZE} rows, got {}", rows.len())));
    }
    rows.iter()
        .map(|r| {
            let cells = r.as_list().ok_or_else(|| shape("each row must be a list"))?;
            if cells.len() != SIZE {
                return Err(shape(format!("expected {SIZE} cells per row, got {}", cells.len())));
            }
            cells
                .iter()
                .map(|c| match c {
                    StateValue::Null => Ok(None),
                    StateValue::Text(s) => Ok(Some(s.clone())),
                    _ => Err(shape("cells must be letters or null")),
                })
                .collect()
        })
        .collect()
}

fn grid_value(g: &Grid) -> StateValue {
    StateValue::List(
        g.iter()
            .map(|r| StateValue::List(r.iter().map(|c| StateValue::from(c.clone())).collect()))
            .collect(),
    )
}

pub(crate) struct Clues<'a> {
    pub horizontal: Vec<Vec<&'a str>>,
    pub vertical: Vec<Vec<&'a str>>,
}

fn clue_lists<'a>(v: Option<&'a StateValue>, key: &str) -> Result<Vec<Vec<&'a str>>, ShapeError> {
    let lists = v
        .and_then(StateValue::as_list)
        .ok_or_else(|| shape(format!("`{key}` must be a list of answer lists")))?;
    if lists.len() != SIZE {
        return Err(shape(format!("`{key}` must have {SIZE} entries")));
    }
    lists
        .iter()
        .map(|l| {
            l.as_list()
                .ok_or_else(|| shape(format!("`{key}` entries must be lists")))?
                .iter()
                .map(|w| {
                    w.as_str()
                        .ok_or_else(|| shape("answers must be strings"))
                })
                .collect()
        })
        .collect()
}

pub(crate) fn parse_clues(ctx: Option<&StateValue>) -> Result<Clues<'_>, ShapeError> {
    let ctx = ctx.ok_or_else(|| shape("clue lists are required"))?;
    Ok(Clues {
        horizontal: clue_lists(ctx.get("horizontal_clues"), "horizontal_clues")?,
        vertical: clue_lists(ctx.get("vertical_clues"), "vertical_clues")?,
    })
}

fn fits(line: &[Option<String>], word: &str) -> bool {
    word.chars().count() == SIZE
        && line.iter().zip(word.chars()).all(|(cell, w)| {
            cell.as_deref()
                .is_none_or(|c| c.chars().eq(std::iter::once(w)))
        })
}

pub fn successors(state: &StateValue, ctx: Option<&StateValue>) -> Result<Vec<StateValue>, ShapeError> {
    let grid = parse_grid(state)?;
    let clues = parse_clues(ctx)?;
    let mut out = Vec::new();
    let mut push = |g: Grid| {
        if g != grid {
            out.push(grid_value(&g));
        }
    };
    for (i, answers) in clues.horizontal.iter().enumerate() {
        for word in answers.iter().filter(|w| fits(&grid[i], w)) {
            let mut g = grid.clone();
            g[i] = word.chars().map(|c| Some(c.to_string())).collect();
            push(g);
        }
    }
    for (j, answers) in clues.vertical.iter().enumerate() {
        let column: Vec<Option<String>> = grid.iter().map(|r| r[j].clone()).collect();
        for word in answers.iter().filter(|w| fits(&column, w)) {
            let mut g = grid.clone();
            for (r, c) in g.iter_mut().zip(word.chars()) {
                r[j] = Some(c.to_string());
            }
            push(g);
        }
    }
    Ok(dedupe(DomainId::Crossword, out))
}

/// The grid is full and every row and column is an answer to its clue.
pub fn is_goal(state: &StateValue, ctx: Option<&StateValue>) -> Result<bool, ShapeError> {
    let grid = parse_grid(state)?;
    let clues = parse_clues(ctx)?;
    if grid.iter().flatten().any(Option::is_none) {
        return Ok(false);
    }
    let word = |cells: Vec<&Option<String>>| -> Option<String> {
        cells.into_iter().map(|c| c.as_deref()).collect::<Option<String>>()
    };
    for i in 0..SIZE {
        let Some(row) = word(grid[i].iter().collect()) else {
            return Ok(false);
        };
        let Some(col) = word(grid.iter().map(|r| &r[i]).collect()) else {
            return Ok(false);
        };
        if !clues.horizontal[i].contains(&row.as_str()) || !clues.vertical[i].contains(&col.as_str()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of empty cells, or `None` if `state` is not a list of lists.
pub(crate) fn count_empty(state: &StateValue) -> Option<usize> {
    let rows = state.as_list()?;
    let mut n = 0;
    for r in rows {
        n += r.as_list()?.iter().filter(|c| c.is_null()).count();
    }
    Some(n)
}
