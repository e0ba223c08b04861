//! 24 Game: combine two numbers with an arithmetic operation until one is left.

use crate::canon::{dedupe, FLOAT_TOLERANCE};
use crate::model::DomainId;
use crate::value::StateValue;

use super::ShapeError;

fn shape(reason: impl Into<String>) -> ShapeError {
    ShapeError::new(DomainId::Game24, reason)
}

pub(crate) fn numbers(state: &StateValue) -> Result<&[StateValue], ShapeError> {
    let items = state.as_list().ok_or_else(|| shape("expected a list of numbers"))?;
    if let Some(bad) = items.iter().find(|v| !v.is_number()) {
        return Err(shape(format!("{} is not a number", bad.display())));
    }
    Ok(items)
}

fn float(a: &StateValue, b: &StateValue, f: impl Fn(f64, f64) -> f64) -> StateValue {
    StateValue::Float(f(a.as_f64().unwrap(), b.as_f64().unwrap()))
}

/// Integer arithmetic when both sides are integers and the result fits,
/// float arithmetic otherwise.
fn arith(
    a: &StateValue,
    b: &StateValue,
    int: impl Fn(i64, i64) -> Option<i64>,
    f: impl Fn(f64, f64) -> f64,
) -> StateValue {
    match (a, b) {
        (StateValue::Int(x), StateValue::Int(y)) => match int(*x, *y) {
            Some(r) => StateValue::Int(r),
            None => float(a, b, f),
        },
        _ => float(a, b, f),
    }
}

/// Every number obtainable from `a` and `b` with one operation. Division
/// always yields a float and is skipped for a zero divisor.
fn combine(a: &StateValue, b: &StateValue) -> Vec<StateValue> {
    let mut out = vec![
        arith(a, b, i64::checked_add, |x, y| x + y),
        arith(a, b, i64::checked_mul, |x, y| x * y),
        arith(a, b, i64::checked_sub, |x, y| x - y),
        arith(b, a, i64::checked_sub, |x, y| x - y),
    ];
    if b.as_f64() != Some(0.0) {
        out.push(float(a, b, |x, y| x / y));
    }
    if a.as_f64() != Some(0.0) {
        out.push(float(b, a, |x, y| x / y));
    }
    out
}

pub fn successors(state: &StateValue) -> Result<Vec<StateValue>, ShapeError> {
    let nums = numbers(state)?;
    let mut out = Vec::new();
    for i in 0..nums.len() {
        for j in i + 1..nums.len() {
            let rest: Vec<StateValue> = nums
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i && *k != j)
                .map(|(_, v)| v.clone())
                .collect();
            for r in combine(&nums[i], &nums[j]) {
                if matches!(r, StateValue::Float(f) if !f.is_finite()) {
                    continue;
                }
                let mut child = rest.clone();
                child.push(r);
                child.sort_by(|x, y| x.total_cmp(y));
                out.push(StateValue::List(child));
            }
        }
    }
    Ok(dedupe(DomainId::Game24, out))
}

pub fn is_goal(state: &StateValue) -> Result<bool, ShapeError> {
    let nums = numbers(state)?;
    Ok(nums.len() == 1 && (nums[0].as_f64().unwrap() - 24.0).abs() <= FLOAT_TOLERANCE)
}
