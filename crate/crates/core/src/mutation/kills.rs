//! Assertion x mutant kill matrix. A VALID assertion kills a mutant when
//! some suite test drives the mutant into an observation on which the
//! assertion evaluates false or errors. Mutant runs that abort (runtime
//! error, budget) on a test the original completed set an implicit-oracle
//! flag on the mutant instead; no assertion gets credit for those.

use std::collections::BTreeMap;

use super::operators::Mutant;
use crate::assertlang::ast::Formula;
use crate::assertlang::eval::{eval_formula, TriVal};
use crate::inference::{Status, StatusTable};
use crate::interpreter::observable::{run_test, TestRun};
use crate::interpreter::Observation;
use crate::minilang::ast::Unit;
use crate::testgen::TestSuite;

#[derive(Debug, Clone, PartialEq)]
pub struct KillMatrix {
    pub unit_name: String,
    /// (point label, assertion key), in table order.
    pub rows: Vec<(String, String)>,
    /// Mutant ids, in generation order.
    pub cols: Vec<String>,
    /// Witness test id per killed cell, indexed [row][col].
    pub cells: Vec<Vec<Option<String>>>,
    /// Per mutant: aborted on a test the original completed.
    pub implicit_kill: Vec<bool>,
}

impl KillMatrix {
    pub fn kill_vectors(&self) -> BTreeMap<(String, String), Vec<bool>> {
        self.rows
            .iter()
            .zip(&self.cells)
            .map(|(k, row)| (k.clone(), row.iter().map(|c| c.is_some()).collect()))
            .collect()
    }

    /// Columns killed by any assertion (implicit kills not counted).
    pub fn assertion_killed_cols(&self) -> Vec<bool> {
        let mut killed = vec![false; self.cols.len()];
        for row in &self.cells {
            for (i, c) in row.iter().enumerate() {
                if c.is_some() {
                    killed[i] = true;
                }
            }
        }
        killed
    }

    /// Mutation score over all mutants, any kill source. None if there
    /// are no mutants.
    pub fn mutation_score(&self) -> Option<f64> {
        if self.cols.is_empty() {
            return None;
        }
        let by_assert = self.assertion_killed_cols();
        let killed = (0..self.cols.len())
            .filter(|&i| by_assert[i] || self.implicit_kill[i])
            .count();
        Some(killed as f64 / self.cols.len() as f64)
    }
}

fn falsifies(f: &Formula, obs: &Observation) -> bool {
    !matches!(eval_formula(f, obs), TriVal::True)
}

fn mutant_runs(m: &Mutant, suite: &TestSuite) -> Vec<TestRun> {
    suite
        .tests
        .iter()
        .map(|t| run_test(&m.unit, t, suite.config.step_budget).expect("suite fits the mutant"))
        .collect()
}

/// Builds the matrix over `table`'s VALID entries (its rows, in key
/// order) and `mutants` (its columns, in generation order).
pub fn kill_matrix(
    table: &StatusTable,
    mutants: &[Mutant],
    unit: &Unit,
    suite: &TestSuite,
) -> KillMatrix {
    let rows: Vec<(&(String, String), &Formula)> = table
        .entries
        .iter()
        .filter(|(_, e)| e.status == Status::Valid)
        .map(|(k, e)| (k, &e.candidate.formula))
        .collect();

    let original: Vec<TestRun> = suite
        .tests
        .iter()
        .map(|t| run_test(unit, t, suite.config.step_budget).expect("suite fits its unit"))
        .collect();

    let mut cells: Vec<Vec<Option<String>>> = vec![vec![None; mutants.len()]; rows.len()];
    let mut implicit = vec![false; mutants.len()];

    for (ci, m) in mutants.iter().enumerate() {
        let runs = mutant_runs(m, suite);
        implicit[ci] = runs
            .iter()
            .zip(&original)
            .any(|(mr, or)| or.completed() && !mr.completed());
        // per point, observations in suite order
        let mut by_point: BTreeMap<String, Vec<&Observation>> = BTreeMap::new();
        for run in &runs {
            for obs in &run.observations {
                by_point.entry(obs.point.label()).or_default().push(obs);
            }
        }
        let empty = Vec::new();
        for (ri, ((label, _), formula)) in rows.iter().enumerate() {
            let hit = by_point
                .get(label)
                .unwrap_or(&empty)
                .iter()
                .find(|obs| falsifies(formula, obs));
            cells[ri][ci] = hit.map(|obs| obs.test_id.clone());
        }
    }

    KillMatrix {
        unit_name: table.unit_name.clone(),
        rows: rows.iter().map(|(k, _)| (*k).clone()).collect(),
        cols: mutants.iter().map(|m| m.id()).collect(),
        cells,
        implicit_kill: implicit,
    }
}

/// Re-runs one witness test on the mutant and checks the falsification
/// is reproduced. Used to audit every killed cell.
pub fn replay_kill(
    formula: &Formula,
    point_label: &str,
    mutant: &Mutant,
    suite: &TestSuite,
    witness_test_id: &str,
) -> bool {
    let Some(test) = suite.tests.iter().find(|t| t.id == witness_test_id) else {
        return false;
    };
    let run = run_test(&mutant.unit, test, suite.config.step_budget).expect("test fits");
    run.observations
        .iter()
        .any(|obs| obs.point.label() == point_label && falsifies(formula, obs))
}

/// Audits the whole matrix; returns a description of every killed cell
/// whose witness fails to replay. Empty for a sound matrix.
pub fn verify_witnesses(
    matrix: &KillMatrix,
    table: &StatusTable,
    mutants: &[Mutant],
    suite: &TestSuite,
) -> Vec<String> {
    let mut bad = Vec::new();
    for (ri, key) in matrix.rows.iter().enumerate() {
        let formula = &table.entries[key].candidate.formula;
        for (ci, cell) in matrix.cells[ri].iter().enumerate() {
            if let Some(witness) = cell {
                if !replay_kill(formula, &key.0, &mutants[ci], suite, witness) {
                    bad.push(format!("{} x {} via {witness}", key.1, matrix.cols[ci]));
                }
            }
        }
    }
    bad
}
