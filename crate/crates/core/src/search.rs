//! Uninformed graph search over [`StateValue`]s with pluggable, fallible
//! successor, goal and transition-check callbacks.
//!
//! BFS tests the goal when a node is dequeued, so the returned trace is
//! shortest. DFS tests on generation.

use std::collections::{HashSet, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::canon::canonical_key;
use crate::model::{Algorithm, DomainId};
use crate::value::StateValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    GoalFound,
    Exhausted,
    Timeout,
    StateLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    /// Path from the initial state to the goal, when one was found.
    pub trace: Option<Vec<StateValue>>,
    pub expansions: u64,
    pub generated: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub timeout: Option<Duration>,
    /// Stop once this many distinct states have been seen.
    pub max_states: Option<usize>,
}

impl SearchConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SearchConfig {
            algorithm,
            timeout: None,
            max_states: None,
        }
    }

    pub fn timeout(mut self, t: Duration) -> Self {
        self.timeout = Some(t);
        self
    }

    pub fn max_states(mut self, n: usize) -> Self {
        self.max_states = Some(n);
        self
    }
}

struct Node {
    state: StateValue,
    parent: Option<usize>,
}

fn trace_to(nodes: &[Node], mut idx: usize) -> Vec<StateValue> {
    let mut out = vec![nodes[idx].state.clone()];
    while let Some(p) = nodes[idx].parent {
        out.push(nodes[p].state.clone());
        idx = p;
    }
    out.reverse();
    out
}

/// Runs the search. Any callback error aborts and is returned as is.
pub fn search<E>(
    domain: DomainId,
    initial: &StateValue,
    config: SearchConfig,
    mut successors: impl FnMut(&StateValue) -> Result<Vec<StateValue>, E>,
    mut is_goal: impl FnMut(&StateValue) -> Result<bool, E>,
    mut check: impl FnMut(&StateValue, &StateValue) -> Result<(), E>,
) -> Result<SearchOutcome, E> {
    let started = Instant::now();
    let mut nodes = vec![Node {
        state: initial.clone(),
        parent: None,
    }];
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(canonical_key(domain, initial));
    let mut frontier: VecDeque<usize> = VecDeque::from([0]);
    let mut expansions = 0u64;
    let mut generated = 0u64;

    let outcome = |status, trace, expansions, generated| SearchOutcome {
        status,
        trace,
        expansions,
        generated,
    };

    if config.algorithm == Algorithm::Dfs && is_goal(initial)? {
        return Ok(outcome(
            SearchStatus::GoalFound,
            Some(vec![initial.clone()]),
            0,
            0,
        ));
    }

    loop {
        let idx = match config.algorithm {
            Algorithm::Bfs => frontier.pop_front(),
            Algorithm::Dfs => frontier.pop_back(),
        };
        let Some(idx) = idx else {
            return Ok(outcome(SearchStatus::Exhausted, None, expansions, generated));
        };
        if config.timeout.is_some_and(|t| started.elapsed() > t) {
            return Ok(outcome(SearchStatus::Timeout, None, expansions, generated));
        }
        if config.algorithm == Algorithm::Bfs && is_goal(&nodes[idx].state)? {
            return Ok(outcome(
                SearchStatus::GoalFound,
                Some(trace_to(&nodes, idx)),
                expansions,
                generated,
            ));
        }

        let parent = nodes[idx].state.clone();
        let children = successors(&parent)?;
        expansions += 1;
        let mut fresh = Vec::new();
        for child in children {
            generated += 1;
            check(&parent, &child)?;
            if !seen.insert(canonical_key(domain, &child)) {
                continue;
            }
            nodes.push(Node {
                state: child,
                parent: Some(idx),
            });
            let c = nodes.len() - 1;
            if config.algorithm == Algorithm::Dfs && is_goal(&nodes[c].state)? {
                return Ok(outcome(
                    SearchStatus::GoalFound,
                    Some(trace_to(&nodes, c)),
                    expansions,
                    generated,
                ));
            }
            fresh.push(c);
        }
        match config.algorithm {
            Algorithm::Bfs => frontier.extend(fresh),
            // Reversed so the first successor is explored first.
            Algorithm::Dfs => frontier.extend(fresh.into_iter().rev()),
        }
        if config.max_states.is_some_and(|m| seen.len() > m) {
            return Ok(outcome(SearchStatus::StateLimit, None, expansions, generated));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn n(i: i64) -> StateValue {
        StateValue::List(vec![StateValue::Int(i)])
    }

    fn num(s: &StateValue) -> i64 {
        s.as_list().unwrap()[0].as_i64().unwrap()
    }

    // Integers with moves +1 and *2; goal 10. Shortest from 1: 1,2,4,5,10.
    fn run(alg: Algorithm) -> SearchOutcome {
        search::<Infallible>(
            DomainId::Game24,
            &n(1),
            SearchConfig::new(alg).max_states(10_000),
            |s| {
                let v = num(s);
                Ok(if v > 40 { vec![] } else { vec![n(v + 1), n(v * 2)] })
            },
            |s| Ok(num(s) == 10),
            |_, _| Ok(()),
        )
        .unwrap()
    }

    #[test]
    fn bfs_returns_a_shortest_trace() {
        let out = run(Algorithm::Bfs);
        assert_eq!(out.status, SearchStatus::GoalFound);
        let t: Vec<i64> = out.trace.unwrap().iter().map(num).collect();
        assert_eq!(t.len(), 5);
        assert_eq!((t[0], t[4]), (1, 10));
    }

    #[test]
    fn dfs_finds_a_goal() {
        let out = run(Algorithm::Dfs);
        assert_eq!(out.status, SearchStatus::GoalFound);
        assert_eq!(num(out.trace.unwrap().last().unwrap()), 10);
    }

    #[test]
    fn exhaustion_and_limits() {
        let none = search::<Infallible>(
            DomainId::Game24,
            &n(1),
            SearchConfig::new(Algorithm::Bfs),
            |s| Ok(if num(s) < 5 { vec![n(num(s) + 1)] } else { vec![] }),
            |_| Ok(false),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(none.status, SearchStatus::Exhausted);
        assert_eq!(none.expansions, 5);

        let capped = search::<Infallible>(
            DomainId::Game24,
            &n(1),
            SearchConfig::new(Algorithm::Bfs).max_states(3),
            |s| Ok(vec![n(num(s) + 1)]),
            |_| Ok(false),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(capped.status, SearchStatus::StateLimit);

        let slow = search::<Infallible>(
            DomainId::Game24,
            &n(1),
            SearchConfig::new(Algorithm::Bfs).timeout(Duration::from_millis(20)),
            |s| {
                std::thread::sleep(Duration::from_millis(5));
                Ok(vec![n(num(s) + 1)])
            },
            |_| Ok(false),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(slow.status, SearchStatus::Timeout);
    }

    #[test]
    fn callback_errors_abort() {
        let err = search(
            DomainId::Game24,
            &n(1),
            SearchConfig::new(Algorithm::Bfs),
            |s| Ok(vec![n(num(s) + 1)]),
            |_| Ok(false),
            |_, c| if num(c) == 3 { Err("bad child") } else { Ok(()) },
        )
        .unwrap_err();
        assert_eq!(err, "bad child");
    }
}
