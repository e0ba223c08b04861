//! The five built-in domains: trusted reference oracles, unit-test suites,
//! prompts and bundled instances.

pub mod blocksworld;
pub mod crossword;
mod data;
pub mod game24;
pub mod partial;
pub mod prontoqa;
pub mod sokoban;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::canon::{canonical_eq, position};
use crate::model::{Algorithm, DomainId, GoalTestSuite, SuccessorCase, Trace};
use crate::search::{search, SearchConfig, SearchStatus};
use crate::value::StateValue;

pub use partial::{partial_check, PartialRule};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("malformed {domain} state: {reason}")]
pub struct ShapeError {
    pub domain: DomainId,
    pub reason: String,
}

impl ShapeError {
    pub fn new(domain: DomainId, reason: impl Into<String>) -> Self {
        ShapeError {
            domain,
            reason: reason.into(),
        }
    }
}

/// One problem to solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub domain: DomainId,
    pub id: String,
    pub initial: StateValue,
    /// Clues, rules or grid: whatever the successor function needs besides the state.
    #[serde(default)]
    pub ctx: Option<StateValue>,
    /// Whatever the goal test needs besides the state.
    #[serde(default)]
    pub goal_ctx: Option<StateValue>,
    /// Expected yes/no answer, for question-answering domains.
    #[serde(default)]
    pub known_answer: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstanceSet {
    pub soundness: Vec<Instance>,
    pub eval: Vec<Instance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompts {
    pub system: String,
    pub successor_initial: String,
    pub goal_initial: String,
}

/// Everything the harness knows about a domain.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub id: DomainId,
    pub search_algorithm: Algorithm,
    pub optimality_required: bool,
    pub prompts: Prompts,
    pub goal_suite: GoalTestSuite,
    pub successor_suite: Vec<SuccessorCase>,
    pub soundness_instances: Vec<Instance>,
    pub eval_instances: Vec<Instance>,
    pub partial_rule: PartialRule,
}

impl DomainSpec {
    /// The bundled spec, parsed once per process.
    pub fn get(id: DomainId) -> &'static DomainSpec {
        static SPECS: [OnceLock<DomainSpec>; 5] = [const { OnceLock::new() }; 5];
        SPECS[id as usize].get_or_init(|| data::load(id).expect("bundled domain data is valid"))
    }

    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.soundness_instances
            .iter()
            .chain(&self.eval_instances)
            .find(|i| i.id == id)
    }
}

pub fn search_algorithm(domain: DomainId) -> Algorithm {
    if domain == DomainId::Crossword {
        Algorithm::Dfs
    } else {
        Algorithm::Bfs
    }
}

pub fn optimality_required(domain: DomainId) -> bool {
    matches!(domain, DomainId::Blocksworld | DomainId::Sokoban)
}

/// All true successors of `state`, without duplicates.
pub fn ref_successors(
    domain: DomainId,
    state: &StateValue,
    ctx: Option<&StateValue>,
) -> Result<Vec<StateValue>, ShapeError> {
    match domain {
        DomainId::Game24 => game24::successors(state),
        DomainId::Blocksworld => blocksworld::successors(state),
        DomainId::Crossword => crossword::successors(state, ctx),
        DomainId::Prontoqa => prontoqa::successors(state, ctx),
        DomainId::Sokoban => sokoban::successors(state, ctx),
    }
}

pub fn ref_is_goal(
    domain: DomainId,
    state: &StateValue,
    goal_ctx: Option<&StateValue>,
) -> Result<bool, ShapeError> {
    match domain {
        DomainId::Game24 => game24::is_goal(state),
        DomainId::Blocksworld => blocksworld::is_goal(state, goal_ctx),
        DomainId::Crossword => crossword::is_goal(state, goal_ctx),
        DomainId::Prontoqa => prontoqa::is_goal(state, goal_ctx),
        DomainId::Sokoban => sokoban::is_goal(state, goal_ctx),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    /// Only set for domains where plan length matters.
    pub optimal: Option<bool>,
    pub reason: String,
}

impl Verdict {
    fn invalid(reason: impl Into<String>) -> Self {
        Verdict {
            valid: false,
            optimal: None,
            reason: reason.into(),
        }
    }

    /// Valid, and optimal where that is required.
    pub fn solved(&self) -> bool {
        self.valid && self.optimal != Some(false)
    }
}

/// Checks a trace against the reference oracles. For domains that require
/// optimality the shortest plan length is computed on demand.
pub fn validate_solution(instance: &Instance, trace: &Trace) -> Verdict {
    let optimal = if optimality_required(instance.domain) {
        match optimal_length(instance, DEFAULT_STATE_BUDGET) {
            Ok(n) => n,
            Err(e) => {
                let mut v = validate_with_optimum(instance, trace, None);
                v.reason = format!("{}; optimality unknown: {e}", v.reason);
                return v;
            }
        }
    } else {
        None
    };
    validate_with_optimum(instance, trace, optimal)
}

/// [`validate_solution`] with a precomputed shortest length.
pub fn validate_with_optimum(instance: &Instance, trace: &Trace, optimum: Option<usize>) -> Verdict {
    let domain = instance.domain;
    if !canonical_eq(domain, trace.first(), &instance.initial) {
        return Verdict::invalid("trace does not start at the initial state");
    }
    for (i, t) in trace.transitions().enumerate() {
        let succ = match ref_successors(domain, &t.parent, instance.ctx.as_ref()) {
            Ok(s) => s,
            Err(e) => return Verdict::invalid(format!("step {i}: {e}")),
        };
        if position(domain, &succ, &t.child).is_none() {
            return Verdict::invalid(format!(
                "step {i}: {} is not a successor of {}",
                t.child.display(),
                t.parent.display()
            ));
        }
    }
    match ref_is_goal(domain, trace.last(), instance.goal_ctx.as_ref()) {
        Ok(true) => {}
        Ok(false) => return Verdict::invalid("final state is not a goal"),
        Err(e) => return Verdict::invalid(format!("final state: {e}")),
    }
    if domain == DomainId::Prontoqa && instance.known_answer == Some(false) {
        return Verdict::invalid("a proof was produced but the expected answer is false");
    }
    if !optimality_required(domain) {
        return Verdict {
            valid: true,
            optimal: None,
            reason: "valid".into(),
        };
    }
    match optimum {
        Some(n) if trace.steps() == n => Verdict {
            valid: true,
            optimal: Some(true),
            reason: "valid and optimal".into(),
        },
        Some(n) => Verdict {
            valid: true,
            optimal: Some(false),
            reason: format!("valid but {} steps where {n} suffice", trace.steps()),
        },
        None => Verdict {
            valid: true,
            optimal: None,
            reason: "valid".into(),
        },
    }
}

/// States the reference search may visit before giving up.
pub const DEFAULT_STATE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReferenceSearchError {
    #[error("search space exceeds {0} states")]
    Budget(usize),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Shortest plan with the reference oracles, or `None` if the instance is
/// unsolvable.
pub fn reference_search(
    instance: &Instance,
    algorithm: Algorithm,
    budget: usize,
) -> Result<Option<Trace>, ReferenceSearchError> {
    let domain = instance.domain;
    let out = search(
        domain,
        &instance.initial,
        SearchConfig::new(algorithm).max_states(budget),
        |s| ref_successors(domain, s, instance.ctx.as_ref()),
        |s| ref_is_goal(domain, s, instance.goal_ctx.as_ref()),
        |_, _| Ok(()),
    )?;
    match out.status {
        SearchStatus::GoalFound => Ok(Some(
            Trace::new(out.trace.unwrap_or_default()).expect("found traces are non-empty"),
        )),
        SearchStatus::Exhausted => Ok(None),
        SearchStatus::StateLimit | SearchStatus::Timeout => Err(ReferenceSearchError::Budget(budget)),
    }
}

/// Number of steps in a shortest plan, or `None` if there is none.
pub fn optimal_length(instance: &Instance, budget: usize) -> Result<Option<usize>, ReferenceSearchError> {
    Ok(reference_search(instance, Algorithm::Bfs, budget)?.map(|t| t.steps()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonical_eq;
    use proptest::prelude::*;

    fn v(s: &str) -> StateValue {
        StateValue::from_json(s).unwrap()
    }

    fn g24(initial: &str) -> Instance {
        Instance {
            domain: DomainId::Game24,
            id: "t".into(),
            initial: v(initial),
            ctx: None,
            goal_ctx: None,
            known_answer: None,
        }
    }

    #[test]
    fn six_six_six_six() {
        let got = ref_successors(DomainId::Game24, &v("[6, 6, 6, 6]"), None).unwrap();
        let want = ["[1.0, 6, 6]", "[6, 6, 12]", "[0, 6, 6]", "[6, 6, 36]"];
        assert_eq!(got.len(), 4);
        for w in want {
            assert!(got.iter().any(|g| canonical_eq(DomainId::Game24, g, &v(w))), "{w}");
        }
        let chain = Trace::new(vec![v("[6,6,6,6]"), v("[6,6,12]"), v("[6,18]"), v("[24]")]).unwrap();
        assert!(validate_solution(&g24("[6,6,6,6]"), &chain).valid);
        let skip = Trace::new(vec![v("[6,6,6,6]"), v("[24]")]).unwrap();
        assert!(!validate_solution(&g24("[6,6,6,6]"), &skip).valid);
    }

    #[test]
    fn game24_optimal_is_three() {
        assert_eq!(optimal_length(&g24("[6,6,6,6]"), 100_000).unwrap(), Some(3));
        assert_eq!(optimal_length(&g24("[1,1,1,1]"), 100_000).unwrap(), None);
    }

    #[test]
    fn sokoban_already_solved_is_zero() {
        let inst = Instance {
            domain: DomainId::Sokoban,
            id: "t".into(),
            initial: v(r#"{"at-player":[1,1],"at-stone":[[1,2]]}"#),
            ctx: Some(v("[[1,1,1,1],[1,0,2,1],[1,1,1,1]]")),
            goal_ctx: Some(v("[[1,1,1,1],[1,0,2,1],[1,1,1,1]]")),
            known_answer: None,
        };
        assert_eq!(optimal_length(&inst, 1000).unwrap(), Some(0));
    }

    #[test]
    fn wrong_start_and_non_goal_end_are_invalid() {
        let t = Trace::new(vec![v("[6,6,12]"), v("[6,18]"), v("[24]")]).unwrap();
        assert!(!validate_solution(&g24("[6,6,6,6]"), &t).valid);
        let t = Trace::new(vec![v("[6,6,6,6]"), v("[6,6,12]")]).unwrap();
        let verdict = validate_solution(&g24("[6,6,6,6]"), &t);
        assert!(!verdict.valid);
        assert_eq!(verdict.reason, "final state is not a goal");
    }

    #[test]
    fn spec_table() {
        for d in DomainId::ALL {
            let spec = DomainSpec::get(d);
            assert_eq!(spec.id, d);
            assert_eq!(spec.search_algorithm == Algorithm::Dfs, d == DomainId::Crossword);
            assert_eq!(
                spec.optimality_required,
                matches!(d, DomainId::Blocksworld | DomainId::Sokoban)
            );
            assert!(!spec.soundness_instances.is_empty());
            assert!(!spec.eval_instances.is_empty());
            assert!(!spec.prompts.successor_initial.is_empty());
        }
        let g = DomainSpec::get(DomainId::Game24);
        for s in &g.soundness_instances {
            assert!(g
                .eval_instances
                .iter()
                .all(|e| !canonical_eq(DomainId::Game24, &e.initial, &s.initial)));
        }
    }

    fn small_numbers() -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(-3i64..14, 1..5)
    }

    proptest! {
        #[test]
        fn game24_children_shrink_by_one(nums in small_numbers()) {
            let s = StateValue::from(nums.clone());
            let succ = ref_successors(DomainId::Game24, &s, None).unwrap();
            if nums.len() == 2 {
                prop_assert!(succ.len() <= 6);
            }
            for c in &succ {
                prop_assert_eq!(c.as_list().unwrap().len(), nums.len() - 1);
                prop_assert!(partial_check(DomainId::Game24, &s, c).is_ok());
                prop_assert!(!canonical_eq(DomainId::Game24, c, &s));
            }
        }
    }
}
