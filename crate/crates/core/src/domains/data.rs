//! Bundled suites, instances and prompts.

use crate::model::{DomainId, GoalTestSuite};
use crate::suite::{parse_goal_cases, parse_successor_cases, SuiteError};

use super::{
    optimality_required, search_algorithm, DomainSpec, InstanceSet, PartialRule, Prompts,
};

struct Files {
    goal: &'static str,
    non_goal: &'static str,
    successors: &'static str,
    instances: &'static str,
    successor_prompt: &'static str,
    goal_prompt: &'static str,
}

macro_rules! files {
    ($dir:literal, $prefix:literal, $succ_prefix:literal) => {
        Files {
            goal: include_str!(concat!("../../data/", $dir, "/", $prefix, "_goal_states.jsonl")),
            non_goal: include_str!(concat!("../../data/", $dir, "/", $prefix, "_non_goal_states.jsonl")),
            successors: include_str!(concat!("../../data/", $dir, "/", $succ_prefix, "_successors.jsonl")),
            instances: include_str!(concat!("../../data/", $dir, "/instances.json")),
            successor_prompt: include_str!(concat!("../../assets/prompts/", $dir, "_successor.txt")),
            goal_prompt: include_str!(concat!("../../assets/prompts/", $dir, "_goal.txt")),
        }
    };
}

pub(crate) const SYSTEM_PROMPT: &str = include_str!("../../assets/prompts/system.txt");

fn files(id: DomainId) -> Files {
    match id {
        DomainId::Game24 => files!("game24", "24game", "24game"),
        DomainId::Blocksworld => files!("blocksworld", "blocks", "blocks"),
        DomainId::Crossword => files!("crossword", "crosswords", "crossword"),
        DomainId::Prontoqa => files!("prontoqa", "prontoqa", "prontoqa"),
        DomainId::Sokoban => files!("sokoban", "sokoban", "sokoban"),
    }
}

#[derive(Debug, thiserror::Error)]
pub(crate) enum DataError {
    #[error("{file}: {source}")]
    Suite {
        file: &'static str,
        #[source]
        source: SuiteError,
    },
    #[error("instances: {0}")]
    Instances(#[from] serde_json::Error),
}

pub(crate) fn load(id: DomainId) -> Result<DomainSpec, DataError> {
    let f = files(id);
    let in_file = |file| move |source| DataError::Suite { file, source };
    let goal_states = parse_goal_cases(id, f.goal).map_err(in_file("goal states"))?;
    let nongoal_states = parse_goal_cases(id, f.non_goal).map_err(in_file("non-goal states"))?;
    let successor_suite =
        parse_successor_cases(id, f.successors).map_err(in_file("successors"))?;
    let instances: InstanceSet = serde_json::from_str(f.instances)?;
    Ok(DomainSpec {
        id,
        search_algorithm: search_algorithm(id),
        optimality_required: optimality_required(id),
        prompts: Prompts {
            system: SYSTEM_PROMPT.trim_end().to_string(),
            successor_initial: f.successor_prompt.trim_end().to_string(),
            goal_initial: f.goal_prompt.trim_end().to_string(),
        },
        goal_suite: GoalTestSuite {
            goal_states,
            nongoal_states,
        },
        successor_suite,
        soundness_instances: instances.soundness,
        eval_instances: instances.eval,
        partial_rule: PartialRule::for_domain(id),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_record_counts() {
        let counts = |d| {
            let s = load(d).unwrap();
            (
                s.goal_suite.goal_states.len(),
                s.goal_suite.nongoal_states.len(),
                s.successor_suite.len(),
            )
        };
        assert_eq!(counts(DomainId::Game24), (1, 5, 29));
        assert_eq!(counts(DomainId::Blocksworld), (2, 2, 20));
        assert_eq!(counts(DomainId::Crossword), (3, 3, 3));
        assert_eq!(counts(DomainId::Prontoqa), (3, 3, 3));
        assert_eq!(counts(DomainId::Sokoban), (3, 3, 4));
    }
}
