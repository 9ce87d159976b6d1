//! Dynamic classification of candidate assertions against executed test
//! suites, and the filters that turn raw VALID sets into reported ones.
//!
//! A candidate is VALID for a version when no observation falsifies it
//! and it evaluated to true often enough to trust; INVALID when some
//! observation falsifies it; UNDETERMINED otherwise. What an evaluation
//! error means is a policy knob: by default it falsifies, under `Skips`
//! the observation is ignored.
//!
//! Every candidate is evaluated on every matching observation, and the
//! falsification witness is the least (test id, call index) pair, so the
//! table is identical under any permutation of the suite's tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assertlang::eval::{eval_formula, TriVal};
use crate::assertlang::fuzz::Candidate;
use crate::interpreter::observable::TestRun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Valid,
    Invalid,
    Undetermined,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Valid => "VALID",
            Status::Invalid => "INVALID",
            Status::Undetermined => "UNDETERMINED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalErrorPolicy {
    /// An evaluation error counts as a counterexample.
    Falsifies,
    /// Erroring observations are dropped from this candidate's tally.
    Skips,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecConfig {
    /// Minimum number of true evaluations before VALID is earned.
    pub min_support: u32,
    pub eval_error_policy: EvalErrorPolicy,
    /// Drop VALID assertions that kill no mutant.
    pub mutation_filter: bool,
    /// Additionally collapse VALID assertions with identical kill
    /// vectors down to one representative each.
    pub keep_representatives: bool,
}

impl Default for SpecConfig {
    fn default() -> Self {
        SpecConfig {
            min_support: 5,
            eval_error_policy: EvalErrorPolicy::Falsifies,
            mutation_filter: true,
            keep_representatives: false,
        }
    }
}

/// Why a VALID assertion is withheld from the reported spec set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Discard {
    NoKills,
    Redundant { representative: String },
}

/// Evidence for INVALID: where the candidate was falsified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Falsification {
    pub test_id: String,
    /// Index into this point's observation list, ordered by
    /// (test id, call index).
    pub obs_index: usize,
}

#[derive(Debug, Clone)]
pub struct StatusEntry {
    pub candidate: Candidate,
    pub status: Status,
    /// Number of observations on which the formula evaluated to true.
    pub eval_count: u32,
    /// Least falsifying observation, for INVALID.
    pub falsified_by: Option<Falsification>,
    /// Mutants killed, once the mutation filter has run.
    pub kill_count: Option<u32>,
    pub discard: Option<Discard>,
    /// Keys collapsed into this entry when it is a representative.
    pub aliases: Vec<String>,
}

/// Classification of every candidate for one program version, keyed by
/// (point label, candidate key).
#[derive(Debug, Clone)]
pub struct StatusTable {
    pub unit_name: String,
    pub entries: BTreeMap<(String, String), StatusEntry>,
}

impl StatusTable {
    /// The reported specification: VALID and not filtered away.
    pub fn spec_set(&self) -> Vec<&StatusEntry> {
        self.entries
            .values()
            .filter(|e| e.status == Status::Valid && e.discard.is_none())
            .collect()
    }

    pub fn get(&self, point_label: &str, key: &str) -> Option<&StatusEntry> {
        self.entries.get(&(point_label.to_string(), key.to_string()))
    }
}

/// Buckets observations by point label and sorts each bucket into the
/// canonical (test id, call index) order. Classification built on these
/// buckets cannot depend on suite order.
pub fn bucket_observations<'a>(
    runs: &'a [TestRun],
) -> BTreeMap<String, Vec<&'a crate::interpreter::Observation>> {
    let mut by_point: BTreeMap<String, Vec<&crate::interpreter::Observation>> = BTreeMap::new();
    for run in runs {
        for obs in &run.observations {
            by_point.entry(obs.point.label()).or_default().push(obs);
        }
    }
    for bucket in by_point.values_mut() {
        bucket.sort_by(|a, b| (&a.test_id, a.call_index).cmp(&(&b.test_id, b.call_index)));
    }
    by_point
}

pub fn classify(
    unit_name: &str,
    runs: &[TestRun],
    candidates: &[Candidate],
    cfg: &SpecConfig,
) -> StatusTable {
    let by_point = bucket_observations(runs);
    let empty = Vec::new();
    let mut entries = BTreeMap::new();
    for c in candidates {
        let label = c.point.label();
        let obs_list = by_point.get(&label).unwrap_or(&empty);
        let mut eval_count = 0u32;
        let mut falsified_by = None;
        for (i, obs) in obs_list.iter().enumerate() {
            let falsifies = match eval_formula(&c.formula, *obs) {
                TriVal::True => {
                    eval_count += 1;
                    false
                }
                TriVal::False => true,
                TriVal::Err(_) => cfg.eval_error_policy == EvalErrorPolicy::Falsifies,
            };
            if falsifies && falsified_by.is_none() {
                falsified_by = Some(Falsification { test_id: obs.test_id.clone(), obs_index: i });
            }
        }
        let status = if falsified_by.is_some() {
            Status::Invalid
        } else if eval_count >= cfg.min_support {
            Status::Valid
        } else {
            Status::Undetermined
        };
        entries.insert(
            (label, c.key.clone()),
            StatusEntry {
                candidate: c.clone(),
                status,
                eval_count,
                falsified_by,
                kill_count: None,
                discard: None,
                aliases: Vec::new(),
            },
        );
    }
    StatusTable { unit_name: unit_name.to_string(), entries }
}

/// Violations found by re-running every VALID entry over the suite.
/// A sound table yields an empty list.
pub fn recheck_valid(table: &StatusTable, runs: &[TestRun], cfg: &SpecConfig) -> Vec<String> {
    let by_point = bucket_observations(runs);
    let empty = Vec::new();
    let mut bad = Vec::new();
    for ((label, key), e) in &table.entries {
        if e.status != Status::Valid {
            continue;
        }
        for obs in by_point.get(label).unwrap_or(&empty) {
            let broken = match eval_formula(&e.candidate.formula, *obs) {
                TriVal::True => false,
                TriVal::False => true,
                TriVal::Err(_) => cfg.eval_error_policy == EvalErrorPolicy::Falsifies,
            };
            if broken {
                bad.push(format!("{label} :: {key} falsified by {}", obs.test_id));
                break;
            }
        }
    }
    bad
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("kill matrix rows do not match the table's VALID set: {detail}")]
pub struct MatrixMismatch {
    pub detail: String,
}

/// Applies kill information to the VALID entries: zero-kill assertions
/// are discarded, and with `keep_representatives` each group of
/// assertions with an identical kill vector keeps only its shortest key
/// (ties broken lexicographically), the rest becoming aliases.
///
/// The matrix must have exactly one row per VALID entry.
pub fn apply_mutation_filter(
    table: &mut StatusTable,
    kill_vectors: &BTreeMap<(String, String), Vec<bool>>,
    keep_representatives: bool,
) -> Result<(), MatrixMismatch> {
    let valid: Vec<&(String, String)> = table
        .entries
        .iter()
        .filter(|(_, e)| e.status == Status::Valid)
        .map(|(k, _)| k)
        .collect();
    if valid.len() != kill_vectors.len() || !valid.iter().all(|k| kill_vectors.contains_key(*k)) {
        let missing = valid.iter().find(|k| !kill_vectors.contains_key(**k));
        let detail = match missing {
            Some((p, k)) => format!("no row for VALID entry {p} :: {k}"),
            None => format!("{} rows for {} VALID entries", kill_vectors.len(), valid.len()),
        };
        return Err(MatrixMismatch { detail });
    }
    for (k, e) in table.entries.iter_mut() {
        if e.status != Status::Valid {
            continue;
        }
        let vector = &kill_vectors[k];
        let kills = vector.iter().filter(|b| **b).count() as u32;
        e.kill_count = Some(kills);
        if kills == 0 {
            e.discard = Some(Discard::NoKills);
        }
    }
    if !keep_representatives {
        return Ok(());
    }
    // group per point by kill vector over the survivors
    let mut groups: BTreeMap<(String, Vec<bool>), Vec<(String, String)>> = BTreeMap::new();
    for (k, e) in table.entries.iter() {
        if e.status != Status::Valid || e.discard.is_some() {
            continue;
        }
        let vector = kill_vectors.get(k).cloned().unwrap_or_default();
        groups.entry((k.0.clone(), vector)).or_default().push(k.clone());
    }
    for (_, mut members) in groups {
        if members.len() < 2 {
            continue;
        }
        members.sort_by(|a, b| (a.1.len(), &a.1).cmp(&(b.1.len(), &b.1)));
        let rep = members[0].clone();
        let alias_keys: Vec<String> = members[1..].iter().map(|m| m.1.clone()).collect();
        for m in &members[1..] {
            let e = table.entries.get_mut(m).unwrap();
            e.discard = Some(Discard::Redundant { representative: rep.1.clone() });
        }
        let r = table.entries.get_mut(&rep).unwrap();
        r.aliases = alias_keys;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InferError {
    #[error("suite does not fit the unit: {0}")]
    Suite(#[from] crate::interpreter::CallError),
    #[error(transparent)]
    Matrix(#[from] MatrixMismatch),
}

/// Everything one inference pass produces; mutants and the matrix are
/// present iff the mutation filter ran.
#[derive(Debug, Clone)]
pub struct Inferred {
    pub table: StatusTable,
    pub runs: Vec<TestRun>,
    pub mutants: Vec<crate::mutation::Mutant>,
    pub matrix: Option<crate::mutation::KillMatrix>,
    pub warnings: Vec<String>,
}

/// One version's full inference: execute the suite, classify every
/// candidate, and (by default) filter the VALID set by mutation
/// analysis using this same version's mutants.
pub fn infer_spec(
    unit: &crate::minilang::ast::Unit,
    suite: &crate::testgen::TestSuite,
    candidates: &[Candidate],
    cfg: &SpecConfig,
) -> Result<Inferred, InferError> {
    let runs = crate::testgen::execute_suite(unit, suite)?;
    let mut warnings = Vec::new();
    if suite.tests.is_empty() {
        warnings.push("empty suite: every candidate is UNDETERMINED and the spec is empty".into());
    }
    let mut table = classify(&unit.name, &runs, candidates, cfg);
    let (mutants, matrix) = if cfg.mutation_filter {
        let mutants = crate::mutation::generate_mutants(unit, &[]);
        let matrix = crate::mutation::kill_matrix(&table, &mutants, unit, suite);
        apply_mutation_filter(&mut table, &matrix.kill_vectors(), cfg.keep_representatives)?;
        (mutants, Some(matrix))
    } else {
        (Vec::new(), None)
    };
    Ok(Inferred { table, runs, mutants, matrix, warnings })
}

/// Stable per-point seed derivation so candidate generation and any
/// point-local randomness decouple from iteration order.
pub fn point_seed(seed: u64, label: &str) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 27;
    }
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertlang::normalize::normalize;
    use crate::assertlang::parser::parse_formula;
    use crate::interpreter::observable::run_test;
    use crate::minilang::points::ProgramPoint;
    use crate::minilang::typecheck::load_unit;
    use crate::testgen::{execute_suite, generate_suite, GenConfig};

    const SRC: &str = "class Tally {\n  field n: int;\n\n  ctor() {\n    n := 0;\n  }\n\n  method add(k: int): int {\n    n := n + k;\n    return n;\n  }\n}\n";

    fn cand(label: &str, src: &str) -> Candidate {
        let f = normalize(&parse_formula(src).unwrap());
        Candidate {
            point: ProgramPoint::from_label(label).unwrap(),
            key: f.print(),
            formula: f,
        }
    }

    fn runs_for(src: &str) -> Vec<crate::interpreter::observable::TestRun> {
        let unit = load_unit(src).unwrap();
        let suite = generate_suite(&unit, &GenConfig::default()).unwrap();
        execute_suite(&unit, &suite).unwrap()
    }

    #[test]
    fn statuses_fall_out_of_observations() {
        let runs = runs_for(SRC);
        let cands = vec![
            cand("post:ctor", "n == 0"),
            cand("post:add", "n == result"),
            cand("post:add", "n == old(n) + k"),
            cand("post:add", "n == old(n)"),
            cand("inv", "ghost == 0"),
        ];
        let table = classify("Tally", &runs, &cands, &SpecConfig::default());
        assert_eq!(table.get("post:ctor", "n == 0").unwrap().status, Status::Valid);
        assert_eq!(table.get("post:add", "n == result").unwrap().status, Status::Valid);
        assert_eq!(table.get("post:add", "n == old(n) + k").unwrap().status, Status::Valid);
        let wrong = table.get("post:add", "n == old(n)").unwrap();
        assert_eq!(wrong.status, Status::Invalid);
        assert!(wrong.falsified_by.is_some());
        // unknown identifier errors falsify under the default policy
        assert_eq!(table.get("inv", "ghost == 0").unwrap().status, Status::Invalid);
    }

    #[test]
    fn error_policy_skips_leaves_candidates_undetermined() {
        let runs = runs_for(SRC);
        let cands = vec![cand("inv", "ghost == 0")];
        let cfg = SpecConfig { eval_error_policy: EvalErrorPolicy::Skips, ..SpecConfig::default() };
        let table = classify("Tally", &runs, &cands, &cfg);
        let e = table.get("inv", "ghost == 0").unwrap();
        assert_eq!(e.status, Status::Undetermined);
        assert_eq!(e.eval_count, 0);
    }

    #[test]
    fn min_support_gates_validity() {
        // a single hand-built test gives exactly one post:add observation
        let unit = load_unit(SRC).unwrap();
        let tc = crate::testgen::TestCase {
            id: "only".to_string(),
            calls: vec![
                crate::testgen::Call { method: "ctor".into(), args: vec![] },
                crate::testgen::Call {
                    method: "add".into(),
                    args: vec![crate::values::Value::Int(2)],
                },
            ],
        };
        let run = run_test(&unit, &tc, 100_000).unwrap();
        let cands = vec![cand("post:add", "n == result")];
        let strict = SpecConfig { min_support: 5, ..SpecConfig::default() };
        let lax = SpecConfig { min_support: 1, ..SpecConfig::default() };
        let t1 = classify("Tally", std::slice::from_ref(&run), &cands, &strict);
        assert_eq!(t1.get("post:add", "n == result").unwrap().status, Status::Undetermined);
        let t2 = classify("Tally", &[run], &cands, &lax);
        assert_eq!(t2.get("post:add", "n == result").unwrap().status, Status::Valid);
    }

    #[test]
    fn mutation_filter_discards_and_collapses() {
        let runs = runs_for(SRC);
        let cands = vec![
            cand("post:add", "n == result"),
            cand("post:add", "n == old(n) + k"),
            cand("post:ctor", "n == 0"),
        ];
        let mut table = classify("Tally", &runs, &cands, &SpecConfig::default());
        let mut kv = BTreeMap::new();
        kv.insert(("post:add".to_string(), "n == result".to_string()), vec![true, false]);
        kv.insert(("post:add".to_string(), "n == old(n) + k".to_string()), vec![true, false]);
        kv.insert(("post:ctor".to_string(), "n == 0".to_string()), vec![false, false]);
        apply_mutation_filter(&mut table, &kv, true).unwrap();

        let ctor = table.get("post:ctor", "n == 0").unwrap();
        assert_eq!(ctor.discard, Some(Discard::NoKills));
        assert_eq!(ctor.kill_count, Some(0));

        // equal kill vectors collapse to the shorter key
        let rep = table.get("post:add", "n == result").unwrap();
        assert!(rep.discard.is_none());
        assert_eq!(rep.aliases, vec!["n == old(n) + k".to_string()]);
        let alias = table.get("post:add", "n == old(n) + k").unwrap();
        assert_eq!(
            alias.discard,
            Some(Discard::Redundant { representative: "n == result".to_string() })
        );
        assert_eq!(table.spec_set().len(), 1);
    }

    #[test]
    fn filter_rejects_mismatched_matrices() {
        let runs = runs_for(SRC);
        let cands = vec![cand("post:ctor", "n == 0")];
        let mut table = classify("Tally", &runs, &cands, &SpecConfig::default());
        let kv = BTreeMap::new();
        assert!(apply_mutation_filter(&mut table, &kv, false).is_err());
    }

    #[test]
    fn classification_ignores_test_order() {
        let runs = runs_for(SRC);
        let mut reversed = runs.clone();
        reversed.reverse();
        let cands = vec![
            cand("post:ctor", "n == 0"),
            cand("post:add", "n == result"),
            cand("post:add", "n == old(n)"),
            cand("inv", "n >= 0"),
        ];
        let cfg = SpecConfig::default();
        let a = classify("Tally", &runs, &cands, &cfg);
        let b = classify("Tally", &reversed, &cands, &cfg);
        for (k, ea) in &a.entries {
            let eb = &b.entries[k];
            assert_eq!(ea.status, eb.status, "{k:?}");
            assert_eq!(ea.eval_count, eb.eval_count, "{k:?}");
            assert_eq!(ea.falsified_by, eb.falsified_by, "{k:?}");
        }
    }

    #[test]
    fn valid_entries_survive_a_recheck() {
        let runs = runs_for(SRC);
        let cands = vec![cand("post:ctor", "n == 0"), cand("post:add", "n == old(n) + k")];
        let table = classify("Tally", &runs, &cands, &SpecConfig::default());
        assert!(recheck_valid(&table, &runs, &SpecConfig::default()).is_empty());
    }

    #[test]
    fn infer_spec_filters_by_kills_and_warns_on_empty_suites() {
        let unit = load_unit(SRC).unwrap();
        let suite = generate_suite(&unit, &GenConfig::default()).unwrap();
        let cands = vec![
            cand("post:ctor", "n == 0"),
            cand("post:add", "n == old(n) + k"),
            cand("inv", "n + 0 == n"),
        ];
        let inf = infer_spec(&unit, &suite, &cands, &SpecConfig::default()).unwrap();
        assert!(inf.warnings.is_empty());
        assert!(inf.matrix.is_some());
        for e in inf.table.spec_set() {
            assert!(e.kill_count.unwrap() > 0);
        }
        // the tautology burns no mutants and is dropped from the spec
        let taut = inf.table.get("inv", "n == n + 0").unwrap();
        assert_eq!(taut.status, Status::Valid);
        assert_eq!(taut.discard, Some(Discard::NoKills));

        let empty = crate::testgen::TestSuite {
            unit_name: unit.name.clone(),
            config: GenConfig::default(),
            tests: Vec::new(),
            content_hash: String::new(),
        };
        let inf2 = infer_spec(&unit, &empty, &cands, &SpecConfig::default()).unwrap();
        assert!(!inf2.warnings.is_empty());
        assert!(inf2.table.spec_set().is_empty());
        assert!(inf2
            .table
            .entries
            .values()
            .all(|e| e.status == Status::Undetermined));
    }

    #[test]
    fn point_seed_is_stable_and_label_sensitive() {
        assert_eq!(point_seed(1, "inv"), point_seed(1, "inv"));
        assert_ne!(point_seed(1, "inv"), point_seed(1, "post:add"));
        assert_ne!(point_seed(1, "inv"), point_seed(2, "inv"));
    }
}
