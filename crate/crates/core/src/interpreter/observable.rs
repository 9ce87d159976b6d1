//! Replaying a fixed call sequence and the canonical observable output:
//! the per-call outcomes plus the field state at termination. Two runs are
//! behaviorally equal iff these strings are equal.

use std::collections::BTreeMap;

use super::{CallError, CallOutcome, Observation, Session};
use crate::minilang::ast::Unit;
use crate::testgen::TestCase;
use crate::values::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct TestRun {
    pub test_id: String,
    /// One entry per executed call; execution stops after the first
    /// abnormal call, so this can be shorter than the test.
    pub outcomes: Vec<(String, CallOutcome)>,
    pub observations: Vec<Observation>,
    pub final_state: BTreeMap<String, Value>,
}

impl TestRun {
    pub fn completed(&self) -> bool {
        self.outcomes.iter().all(|(_, o)| o.completed())
    }
}

/// Replays `test` from a fresh object. Call errors (bad arity or types)
/// are setup bugs, not program behavior, and surface as Err.
pub fn run_test(unit: &Unit, test: &TestCase, step_budget: u64) -> Result<TestRun, CallError> {
    let mut session = Session::new(unit, step_budget);
    let mut outcomes = Vec::new();
    let mut observations = Vec::new();
    for call in &test.calls {
        let rec = session.call(&call.method, &call.args, &test.id)?;
        let done = !rec.outcome.completed();
        outcomes.push((rec.method, rec.outcome));
        observations.extend(rec.observations);
        if done {
            break;
        }
    }
    Ok(TestRun {
        test_id: test.id.clone(),
        outcomes,
        observations,
        final_state: session.state().clone(),
    })
}

/// Canonical text form, stable across runs and platforms. Field order is
/// declaration order; reals print with 17 significant digits.
pub fn observable_output(unit: &Unit, run: &TestRun) -> String {
    let mut s = String::new();
    for (i, (method, outcome)) in run.outcomes.iter().enumerate() {
        s.push_str(&format!("call {i} {method}: {}\n", outcome.canon()));
    }
    s.push_str("state:");
    for f in &unit.fields {
        let v = run.final_state.get(&f.name).expect("state covers all fields");
        s.push_str(&format!(" {}={}", f.name, v.canon()));
    }
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::typecheck::load_unit;
    use crate::testgen::Call;

    fn acc() -> Unit {
        load_unit(
            "class Acc {\n  field total: real;\n  ctor(start: real) { total := start; }\n  method add(d: real): real { total := total + d; return total; }\n  method expect(lo: real): void { if (total < lo) { fail; } }\n}",
        )
        .unwrap()
    }

    fn test(calls: Vec<Call>) -> TestCase {
        TestCase { id: "t0".to_string(), calls }
    }

    #[test]
    fn output_lists_outcomes_then_state() {
        let u = acc();
        let t = test(vec![
            Call { method: "ctor".into(), args: vec![Value::Real(1.0)] },
            Call { method: "add".into(), args: vec![Value::Real(1.5)] },
        ]);
        let run = run_test(&u, &t, 100_000).unwrap();
        let out = observable_output(&u, &run);
        assert_eq!(
            out,
            "call 0 ctor: void\ncall 1 add: ret 2.5000000000000000e0\nstate: total=2.5000000000000000e0\n"
        );
    }

    #[test]
    fn execution_stops_at_the_first_abnormal_call() {
        let u = acc();
        let t = test(vec![
            Call { method: "ctor".into(), args: vec![Value::Real(0.0)] },
            Call { method: "expect".into(), args: vec![Value::Real(5.0)] },
            Call { method: "add".into(), args: vec![Value::Real(1.0)] },
        ]);
        let run = run_test(&u, &t, 100_000).unwrap();
        assert_eq!(run.outcomes.len(), 2);
        assert!(!run.completed());
        let out = observable_output(&u, &run);
        assert!(out.contains("call 1 expect: error fail"));
        assert!(!out.contains("call 2"));
    }

    #[test]
    fn two_completed_calls_give_four_observations() {
        let u = acc();
        let t = test(vec![
            Call { method: "ctor".into(), args: vec![Value::Real(0.0)] },
            Call { method: "add".into(), args: vec![Value::Real(2.0)] },
        ]);
        let run = run_test(&u, &t, 100_000).unwrap();
        assert_eq!(run.observations.len(), 4);
    }
}
