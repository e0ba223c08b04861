//! Pulling a single Python function out of a model reply.

use std::sync::OnceLock;

use regex::Regex;

use crate::model::CheckFailure;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub source: String,
    pub function_name: String,
}

fn top_level_def() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:async\s+)?def\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(").unwrap())
}

/// Contents of every fenced block, in order. An unterminated fence runs to
/// the end of the text.
fn fenced_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        let is_fence = line.trim_start().starts_with("```");
        match (&mut current, is_fence) {
            (None, true) => current = Some(Vec::new()),
            (Some(lines), true) => {
                blocks.push(lines.join("\n"));
                current = None;
            }
            (Some(lines), false) => lines.push(line),
            (None, false) => {}
        }
    }
    if let Some(lines) = current {
        blocks.push(lines.join("\n"));
    }
    blocks
}

fn def_name(line: &str) -> Option<&str> {
    top_level_def()
        .captures(line)
        .map(|c| c.get(1).unwrap().as_str())
}

fn is_header(line: &str) -> bool {
    ["import ", "from ", "@", "#"].iter().any(|p| line.starts_with(p))
}

/// The function starting at `start` together with the import, decorator and
/// comment lines directly above it.
fn region(lines: &[&str], start: usize) -> String {
    let mut first = start;
    while first > 0 && is_header(lines[first - 1]) {
        first -= 1;
    }
    let mut end = start + 1;
    while end < lines.len() {
        let l = lines[end];
        if !l.trim().is_empty() && !l.starts_with([' ', '\t']) {
            break;
        }
        end += 1;
    }
    while end > start + 1 && lines[end - 1].trim().is_empty() {
        end -= 1;
    }
    lines[first..end].join("\n")
}

/// The single function in `reply`: taken from the last fenced block that
/// defines one, or from the bare text when there are no fences.
pub fn extract_code(reply: &str) -> Result<Extracted, CheckFailure> {
    let blocks = fenced_blocks(reply);
    let chosen = if blocks.is_empty() {
        reply.to_string()
    } else {
        blocks
            .iter()
            .rev()
            .find(|b| b.lines().any(|l| def_name(l).is_some()))
            .unwrap_or(blocks.last().unwrap())
            .clone()
    };
    let lines: Vec<&str> = chosen.lines().collect();
    let defs: Vec<(usize, &str)> = lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| def_name(l).map(|n| (i, n)))
        .collect();
    match defs.as_slice() {
        [] if blocks.is_empty() => Err(CheckFailure::parse_error("no code found in the response")),
        [] => Err(CheckFailure::parse_error(
            "the code block does not define a function",
        )),
        [(start, name)] => Ok(Extracted {
            source: region(&lines, *start),
            function_name: (*name).to_string(),
        }),
        many => {
            let names: Vec<&str> = many.iter().map(|(_, n)| *n).collect();
            Err(CheckFailure::parse_error(format!(
                "expected exactly one top-level function, found {}: {}",
                names.len(),
                names.join(", ")
            )))
        }
    }
}
