//! Core of the autotos harness: an automated loop that asks a language model
//! for a successor function and a goal test, checks both against domain
//! oracles inside an isolated executor, and feeds structured critiques back
//! until the pair is sound and complete or the call budget runs out.

// Check failures are returned by value throughout; they are built once per
// failed check, far off any hot path.
#![allow(clippy::result_large_err, clippy::large_enum_variant)]

pub mod canon;
pub mod domains;
pub mod feedback;
pub mod llm;
pub mod model;
pub mod pipeline;
pub mod sandbox;
pub mod search;
pub mod suite;
pub mod value;

pub use canon::{canonical_eq, canonical_key, canonicalize};
pub use model::{
    Algorithm, CheckFailure, DomainId, ErrorCategory, FailureKind, GoalCase, GoalTestSuite, Limits,
    Role, SuccessorCase, Trace, Transition,
};
pub use value::StateValue;
