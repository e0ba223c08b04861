//! Domain-agnostic structured state values.
//!
//! A [`StateValue`] is the JSON data model with one refinement: integers and
//! floats are kept apart so that `6` and `1.0` survive a round trip exactly as
//! written. The 24 Game mixes the two freely (`[1.0, 6, 6]`).

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use indexmap::IndexMap;
use serde::de::{MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Recursive state value: null, boolean, number, text, list or string-keyed map.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum StateValue {
    #[default]
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    List(Vec<StateValue>),
    Map(IndexMap<String, StateValue>),
}

impl StateValue {
    /// Parses a JSON document into a value.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Compact JSON without spaces, suitable for the wire.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state values always serialize")
    }

    /// Display form: JSON with a space after every `,` and `:`, e.g. `[24, 1]`.
    pub fn display(&self) -> String {
        let mut out = String::new();
        self.write_display(&mut out);
        out
    }

    fn write_display(&self, out: &mut String) {
        match self {
            StateValue::Null => out.push_str("null"),
            StateValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            StateValue::Int(i) => {
                let _ = write!(out, "{i}");
            }
            StateValue::Float(f) => out.push_str(&format_float(*f)),
            StateValue::Text(s) => out.push_str(&serde_json::to_string(s).unwrap()),
            StateValue::List(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.write_display(out);
                }
                out.push(']');
            }
            StateValue::Map(map) => {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&serde_json::to_string(k).unwrap());
                    out.push_str(": ");
                    v.write_display(out);
                }
                out.push('}');
            }
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, StateValue::Null)
    }

    pub fn as_list(&self) -> Option<&[StateValue]> {
        match self {
            StateValue::List(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&IndexMap<String, StateValue>> {
        match self {
            StateValue::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            StateValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            StateValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            StateValue::Int(i) => Some(*i),
            StateValue::Float(f) if f.fract() == 0.0 && f.abs() < 9.0e15 => Some(*f as i64),
            _ => None,
        }
    }

    /// Numeric view of `Int` and `Float`.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            StateValue::Int(i) => Some(*i as f64),
            StateValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, StateValue::Int(_) | StateValue::Float(_))
    }

    /// Map lookup; `None` for non-maps and missing keys.
    pub fn get(&self, key: &str) -> Option<&StateValue> {
        self.as_map().and_then(|m| m.get(key))
    }

    fn rank(&self) -> u8 {
        match self {
            StateValue::Null => 0,
            StateValue::Bool(_) => 1,
            StateValue::Int(_) | StateValue::Float(_) => 2,
            StateValue::Text(_) => 3,
            StateValue::List(_) => 4,
            StateValue::Map(_) => 5,
        }
    }

    /// Total order used to sort set-like collections. Numbers compare by value
    /// regardless of representation, so `1` and `1.0` tie.
    pub fn total_cmp(&self, other: &StateValue) -> Ordering {
        use StateValue::*;
        match (self, other) {
            (Null, Null) => Ordering::Equal,
            (Bool(a), Bool(b)) => a.cmp(b),
            (Int(a), Int(b)) => a.cmp(b),
            (a, b) if a.is_number() && b.is_number() => {
                a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap())
            }
            (Text(a), Text(b)) => a.cmp(b),
            (List(a), List(b)) => {
                for (x, y) in a.iter().zip(b) {
                    let o = x.total_cmp(y);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            (Map(a), Map(b)) => {
                for ((ka, va), (kb, vb)) in a.iter().zip(b) {
                    let o = ka.cmp(kb).then_with(|| va.total_cmp(vb));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

/// Shortest round-trip representation, always with a decimal point or exponent
/// so a float never reads back as an integer.
pub(crate) fn format_float(f: f64) -> String {
    if !f.is_finite() {
        return "null".to_string();
    }
    serde_json::to_string(&f).unwrap()
}

impl fmt::Display for StateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

impl FromStr for StateValue {
    type Err = serde_json::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_json(s)
    }
}

impl From<i64> for StateValue {
    fn from(v: i64) -> Self {
        StateValue::Int(v)
    }
}

impl From<f64> for StateValue {
    fn from(v: f64) -> Self {
        StateValue::Float(v)
    }
}

impl From<bool> for StateValue {
    fn from(v: bool) -> Self {
        StateValue::Bool(v)
    }
}

impl From<&str> for StateValue {
    fn from(v: &str) -> Self {
        StateValue::Text(v.to_string())
    }
}

impl From<String> for StateValue {
    fn from(v: String) -> Self {
        StateValue::Text(v)
    }
}

impl From<&serde_json::Value> for StateValue {
    fn from(v: &serde_json::Value) -> Self {
        use serde_json::Value;
        match v {
            Value::Null => StateValue::Null,
            Value::Bool(b) => StateValue::Bool(*b),
            Value::Number(n) => match n.as_i64() {
                Some(i) => StateValue::Int(i),
                None => StateValue::Float(n.as_f64().unwrap_or(f64::NAN)),
            },
            Value::String(s) => StateValue::Text(s.clone()),
            Value::Array(items) => StateValue::List(items.iter().map(StateValue::from).collect()),
            Value::Object(m) => {
                StateValue::Map(m.iter().map(|(k, v)| (k.clone(), StateValue::from(v))).collect())
            }
        }
    }
}

impl<T: Into<StateValue>> From<Vec<T>> for StateValue {
    fn from(v: Vec<T>) -> Self {
        StateValue::List(v.into_iter().map(Into::into).collect())
    }
}

impl<T: Into<StateValue>> From<Option<T>> for StateValue {
    fn from(v: Option<T>) -> Self {
        v.map_or(StateValue::Null, Into::into)
    }
}

impl Serialize for StateValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            StateValue::Null => serializer.serialize_unit(),
            StateValue::Bool(b) => serializer.serialize_bool(*b),
            StateValue::Int(i) => serializer.serialize_i64(*i),
            StateValue::Float(f) => serializer.serialize_f64(*f),
            StateValue::Text(s) => serializer.serialize_str(s),
            StateValue::List(items) => {
                let mut seq = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            StateValue::Map(map) => {
                let mut m = serializer.serialize_map(Some(map.len()))?;
                for (k, v) in map {
                    m.serialize_entry(k, v)?;
                }
                m.end()
            }
        }
    }
}

struct ValueVisitor;

impl<'de> Visitor<'de> for ValueVisitor {
    type Value = StateValue;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_unit<E>(self) -> Result<StateValue, E> {
        Ok(StateValue::Null)
    }

    fn visit_none<E>(self) -> Result<StateValue, E> {
        Ok(StateValue::Null)
    }

    fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<StateValue, D::Error> {
        Deserialize::deserialize(d)
    }

    fn visit_bool<E>(self, v: bool) -> Result<StateValue, E> {
        Ok(StateValue::Bool(v))
    }

    fn visit_i64<E>(self, v: i64) -> Result<StateValue, E> {
        Ok(StateValue::Int(v))
    }

    fn visit_u64<E>(self, v: u64) -> Result<StateValue, E> {
        Ok(i64::try_from(v).map_or(StateValue::Float(v as f64), StateValue::Int))
    }

    fn visit_f64<E>(self, v: f64) -> Result<StateValue, E> {
        Ok(StateValue::Float(v))
    }

    fn visit_str<E>(self, v: &str) -> Result<StateValue, E> {
        Ok(StateValue::Text(v.to_string()))
    }

    fn visit_string<E>(self, v: String) -> Result<StateValue, E> {
        Ok(StateValue::Text(v))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<StateValue, A::Error> {
        let mut items = Vec::with_capacity(seq.size_hint().unwrap_or(0));
        while let Some(item) = seq.next_element()? {
            items.push(item);
        }
        Ok(StateValue::List(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<StateValue, A::Error> {
        let mut map = IndexMap::new();
        while let Some((k, v)) = access.next_entry::<String, StateValue>()? {
            map.insert(k, v);
        }
        Ok(StateValue::Map(map))
    }
}

impl<'de> Deserialize<'de> for StateValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(ValueVisitor)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn display_matches_feedback_form() {
        let v = StateValue::from_json("[24,1]").unwrap();
        assert_eq!(v.display(), "[24, 1]");
        let v = StateValue::from_json("[0.16666666666666666, 1, 4]").unwrap();
        assert_eq!(v.display(), "[0.16666666666666666, 1, 4]");
        let v = StateValue::from_json(r#"{"at-player": [5, 3], "at-stone": [[3, 3]]}"#).unwrap();
        assert_eq!(v.display(), r#"{"at-player": [5, 3], "at-stone": [[3, 3]]}"#);
    }

    #[test]
    fn integer_ness_is_preserved() {
        let v = StateValue::from_json("[1.0, 6, 6]").unwrap();
        assert_eq!(
            v,
            StateValue::List(vec![
                StateValue::Float(1.0),
                StateValue::Int(6),
                StateValue::Int(6)
            ])
        );
        assert_eq!(v.to_json(), "[1.0,6,6]");
    }

    #[test]
    fn map_order_is_kept() {
        let v = StateValue::from_json(r#"{"z": 1, "a": 2}"#).unwrap();
        assert_eq!(v.to_json(), r#"{"z":1,"a":2}"#);
    }

    pub(crate) fn arb_value() -> impl Strategy<Value = StateValue> {
        let leaf = prop_oneof![
            Just(StateValue::Null),
            any::<bool>().prop_map(StateValue::Bool),
            any::<i64>().prop_map(StateValue::Int),
            (-1.0e12f64..1.0e12).prop_map(StateValue::Float),
            "[a-z \\-]{0,8}".prop_map(StateValue::Text),
        ];
        leaf.prop_recursive(4, 48, 6, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..6).prop_map(StateValue::List),
                prop::collection::vec(("[a-z\\-]{1,6}", inner), 0..5).prop_map(|kv| {
                    StateValue::Map(kv.into_iter().collect())
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn json_round_trip(v in arb_value()) {
            let back = StateValue::from_json(&v.to_json()).unwrap();
            prop_assert_eq!(&back, &v);
            let shown = StateValue::from_json(&v.display()).unwrap();
            prop_assert_eq!(shown, v);
        }
    }
}
