//! Commit-relevance of mutants: does this fault behave differently on
//! the two sides of the commit?
//!
//! Mutants hosted in methods the commit touched have no counterpart to
//! compare against and are labeled as in-changed-code; downstream scores
//! count them as relevant by location (configurable there). For every
//! other mutant the same edit runs on both versions over the shared
//! suite. `Literal` compares the two mutant runs directly; `Refined`
//! compares each mutant run against its own version's baseline and asks
//! whether the kill status flips.

use serde::{Deserialize, Serialize};

use super::operators::Mutant;
use super::transplant::transplant;
use crate::interpreter::observable::{observable_output, run_test};
use crate::minilang::ast::Unit;
use crate::testgen::TestCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelevanceMode {
    Literal,
    Refined,
}

impl RelevanceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RelevanceMode::Literal => "literal",
            RelevanceMode::Refined => "refined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relevance {
    Relevant,
    NotRelevant,
    UntransplantableInChangedCode,
}

impl Relevance {
    pub fn as_str(self) -> &'static str {
        match self {
            Relevance::Relevant => "RELEVANT",
            Relevance::NotRelevant => "NOT_RELEVANT",
            Relevance::UntransplantableInChangedCode => "UNTRANSPLANTABLE_IN_CHANGED_CODE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceLabel {
    pub mutant_id: String,
    pub value: Relevance,
    /// First shared test exhibiting the difference, for Relevant.
    pub witness_test_id: Option<String>,
    pub mode: RelevanceMode,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RelevanceError {
    #[error("no shared tests: the versions have no common type-valid test")]
    NoSharedTests,
}

fn outputs(unit: &Unit, tests: &[TestCase], step_budget: u64) -> Vec<String> {
    tests
        .iter()
        .map(|t| {
            let run = run_test(unit, t, step_budget).expect("shared tests fit both versions");
            observable_output(unit, &run)
        })
        .collect()
}

/// Labels each post-version mutant. `changed_methods` are the commit's
/// touched methods (from the point diff, including added ones); mutants
/// hosted there are never compared.
pub fn label_relevance(
    mutants: &[Mutant],
    pre: &Unit,
    post: &Unit,
    shared: &[TestCase],
    changed_methods: &[String],
    mode: RelevanceMode,
    step_budget: u64,
) -> Result<Vec<RelevanceLabel>, RelevanceError> {
    if shared.is_empty() {
        return Err(RelevanceError::NoSharedTests);
    }
    // baselines only matter in refined mode
    let base_pre = if mode == RelevanceMode::Refined {
        outputs(pre, shared, step_budget)
    } else {
        Vec::new()
    };
    let base_post = if mode == RelevanceMode::Refined {
        outputs(post, shared, step_budget)
    } else {
        Vec::new()
    };

    let mut out = Vec::new();
    for m in mutants {
        if changed_methods.iter().any(|c| *c == m.method) {
            out.push(RelevanceLabel {
                mutant_id: m.id(),
                value: Relevance::UntransplantableInChangedCode,
                witness_test_id: None,
                mode,
            });
            continue;
        }
        let on_pre = transplant(m, post, pre)
            .expect("mutant in an untouched method transplants across the commit");
        let mut_pre = outputs(&on_pre.unit, shared, step_budget);
        let mut_post = outputs(&m.unit, shared, step_budget);
        let witness = (0..shared.len()).find(|&i| match mode {
            RelevanceMode::Literal => mut_pre[i] != mut_post[i],
            RelevanceMode::Refined => {
                (mut_post[i] == base_post[i]) != (mut_pre[i] == base_pre[i])
            }
        });
        out.push(RelevanceLabel {
            mutant_id: m.id(),
            value: if witness.is_some() { Relevance::Relevant } else { Relevance::NotRelevant },
            witness_test_id: witness.map(|i| shared[i].id.clone()),
            mode,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::points::diff_points;
    use crate::minilang::typecheck::load_unit;
    use crate::mutation::operators::generate_mutants;
    use crate::testgen::{generate_suite, shared_suite, GenConfig};

    const PRE: &str = "class Sum {\n  field n: int;\n  field value: real;\n  ctor() {\n    n := 0;\n    value := 0.0;\n  }\n  method increment(d: real): void {\n    n := n + 1;\n    value := value + d;\n  }\n  method getResult(): real {\n    return value;\n  }\n}";
    const POST: &str = "class Sum {\n  field n: int;\n  field value: real;\n  ctor() {\n    n := 0;\n    value := 0.0;\n  }\n  method increment(d: real): void {\n    n := n + 1;\n    value := value + d + 0.0;\n  }\n  method getResult(): real {\n    return value;\n  }\n}";

    fn setup() -> (Unit, Unit, Vec<TestCase>, Vec<String>) {
        let pre = load_unit(PRE).unwrap();
        let post = load_unit(POST).unwrap();
        let cfg = GenConfig::default();
        let sp = generate_suite(&pre, &cfg).unwrap();
        let so = generate_suite(&post, &cfg).unwrap();
        let shared = shared_suite(&sp.tests, &so.tests, &pre, &post);
        let mut changed = diff_points(&pre, &post).unwrap().changed_methods;
        changed.extend(diff_points(&pre, &post).unwrap().added_methods);
        (pre, post, shared, changed)
    }

    #[test]
    fn changed_code_is_labeled_by_location() {
        let (pre, post, shared, changed) = setup();
        let ms = generate_mutants(&post, &[]);
        let labels =
            label_relevance(&ms, &pre, &post, &shared, &changed, RelevanceMode::Literal, 100_000)
                .unwrap();
        for (m, l) in ms.iter().zip(&labels) {
            if m.method == "increment" {
                assert_eq!(l.value, Relevance::UntransplantableInChangedCode);
            } else {
                assert_ne!(l.value, Relevance::UntransplantableInChangedCode);
            }
        }
    }

    #[test]
    fn identical_behavior_is_not_relevant() {
        // pre == post: every transplantable mutant behaves identically
        let pre = load_unit(PRE).unwrap();
        let cfg = GenConfig::default();
        let suite = generate_suite(&pre, &cfg).unwrap();
        let shared = shared_suite(&suite.tests, &suite.tests, &pre, &pre);
        let ms = generate_mutants(&pre, &[]);
        let labels =
            label_relevance(&ms, &pre, &pre, &shared, &[], RelevanceMode::Literal, 100_000)
                .unwrap();
        assert!(labels.iter().all(|l| l.value == Relevance::NotRelevant));
        // and the refined reading agrees on an identity commit
        let refined =
            label_relevance(&ms, &pre, &pre, &shared, &[], RelevanceMode::Refined, 100_000)
                .unwrap();
        assert!(refined.iter().all(|l| l.value == Relevance::NotRelevant));
    }

    #[test]
    fn relevant_labels_carry_a_witness() {
        let (pre, post, shared, changed) = setup();
        let ms = generate_mutants(&post, &[]);
        let labels =
            label_relevance(&ms, &pre, &post, &shared, &changed, RelevanceMode::Literal, 100_000)
                .unwrap();
        for l in &labels {
            assert_eq!(l.value == Relevance::Relevant, l.witness_test_id.is_some());
        }
    }

    #[test]
    fn empty_shared_suite_is_an_error() {
        let (pre, post, _, changed) = setup();
        let ms = generate_mutants(&post, &[]);
        let r = label_relevance(&ms, &pre, &post, &[], &changed, RelevanceMode::Literal, 100_000);
        assert_eq!(r.unwrap_err(), RelevanceError::NoSharedTests);
    }

    #[test]
    fn literal_mode_is_version_symmetric() {
        let (pre, post, shared, changed) = setup();
        let post_mutants = generate_mutants(&post, &[]);
        let fwd = label_relevance(
            &post_mutants,
            &pre,
            &post,
            &shared,
            &changed,
            RelevanceMode::Literal,
            100_000,
        )
        .unwrap();
        // swap: transplant each unchanged-method mutant to pre and label
        // with the versions exchanged
        for (m, l) in post_mutants.iter().zip(&fwd) {
            if l.value == Relevance::UntransplantableInChangedCode {
                continue;
            }
            let on_pre = transplant(m, &post, &pre).unwrap();
            let back = label_relevance(
                std::slice::from_ref(&on_pre),
                &post,
                &pre,
                &shared,
                &changed,
                RelevanceMode::Literal,
                100_000,
            )
            .unwrap();
            assert_eq!(back[0].value, l.value, "{}", m.id());
        }
    }
}
