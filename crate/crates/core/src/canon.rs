//! Canonical forms for state comparison.
//!
//! Each domain declares which parts of a state are unordered collections.
//! Canonicalization sorts those parts; equality then compares structurally,
//! with integers exact and floats within [`FLOAT_TOLERANCE`].

use std::fmt::Write as _;

use crate::model::DomainId;
use crate::value::StateValue;

/// Absolute tolerance for comparing non-integer numbers.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Where the unordered collections live in a domain's state.
enum SetLike {
    Nothing,
    WholeState,
    Keys(&'static [&'static str]),
}

fn set_like(domain: DomainId) -> SetLike {
    match domain {
        DomainId::Game24 | DomainId::Prontoqa => SetLike::WholeState,
        DomainId::Blocksworld => SetLike::Keys(&["clear", "on-table", "on"]),
        DomainId::Sokoban => SetLike::Keys(&["at-stone"]),
        DomainId::Crossword => SetLike::Nothing,
    }
}

fn sorted(items: &[StateValue]) -> StateValue {
    let mut v = items.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    StateValue::List(v)
}

/// Returns `state` with its set-like parts sorted. Values that do not have
/// the expected shape are returned unchanged.
pub fn canonicalize(domain: DomainId, state: &StateValue) -> StateValue {
    match (set_like(domain), state) {
        (SetLike::WholeState, StateValue::List(items)) => sorted(items),
        (SetLike::Keys(keys), StateValue::Map(map)) => {
            let mut out = map.clone();
            for key in keys {
                if let Some(StateValue::List(items)) = map.get(*key) {
                    out.insert((*key).to_string(), sorted(items));
                }
            }
            StateValue::Map(out)
        }
        _ => state.clone(),
    }
}

/// Structural equality; integers exact, other numbers within tolerance.
/// Map key order is irrelevant.
pub fn approx_eq(a: &StateValue, b: &StateValue) -> bool {
    use StateValue::*;
    match (a, b) {
        (Int(x), Int(y)) => x == y,
        (x, y) if x.is_number() && y.is_number() => {
            (x.as_f64().unwrap() - y.as_f64().unwrap()).abs() <= FLOAT_TOLERANCE
        }
        (List(x), List(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| approx_eq(p, q)),
        (Map(x), Map(y)) => {
            x.len() == y.len()
                && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| approx_eq(v, w)))
        }
        (x, y) => x == y,
    }
}

pub fn canonical_eq(domain: DomainId, a: &StateValue, b: &StateValue) -> bool {
    approx_eq(&canonicalize(domain, a), &canonicalize(domain, b))
}

/// Hashable key for visited sets. Floats are quantized to the tolerance grid
/// so values that compare equal almost always share a key; maps are keyed in
/// sorted order.
pub fn canonical_key(domain: DomainId, state: &StateValue) -> String {
    let mut out = String::new();
    write_key(&canonicalize(domain, state), &mut out);
    out
}

fn write_key(v: &StateValue, out: &mut String) {
    match v {
        StateValue::Null => out.push('n'),
        StateValue::Bool(b) => out.push(if *b { 't' } else { 'f' }),
        StateValue::Int(i) => {
            let _ = write!(out, "{i}");
        }
        StateValue::Float(f) => {
            let n = f.round();
            let q = (f / FLOAT_TOLERANCE).round();
            if (f - n).abs() < FLOAT_TOLERANCE / 2.0 && n.abs() < 9.0e15 {
                let _ = write!(out, "{}", n as i64);
            } else if q.is_finite() {
                let _ = write!(out, "{q:e}~");
            } else {
                let _ = write!(out, "{f:e}!");
            }
        }
        StateValue::Text(s) => {
            let _ = write!(out, "{}:{s}", s.len());
        }
        StateValue::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_key(item, out);
            }
            out.push(']');
        }
        StateValue::Map(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}:{k}=", k.len());
                write_key(&map[k], out);
            }
            out.push('}');
        }
    }
}

/// Index of the first element of `haystack` canonically equal to `needle`.
pub fn position(domain: DomainId, haystack: &[StateValue], needle: &StateValue) -> Option<usize> {
    let n = canonicalize(domain, needle);
    haystack
        .iter()
        .position(|h| approx_eq(&canonicalize(domain, h), &n))
}

/// Drops later elements that are canonically equal to an earlier one.
pub fn dedupe(domain: DomainId, states: Vec<StateValue>) -> Vec<StateValue> {
    if domain != DomainId::Game24 {
        // No floats elsewhere, so keys are exact.
        let mut seen = std::collections::HashSet::new();
        return states
            .into_iter()
            .filter(|s| seen.insert(canonical_key(domain, s)))
            .collect();
    }
    let mut kept: Vec<StateValue> = Vec::with_capacity(states.len());
    let mut canon: Vec<StateValue> = Vec::with_capacity(states.len());
    for s in states {
        let c = canonicalize(domain, &s);
        if !canon.iter().any(|k| approx_eq(k, &c)) {
            canon.push(c);
            kept.push(s);
        }
    }
    kept
}
