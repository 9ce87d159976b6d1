//! Tree-walking interpreter for DL with a per-call step budget.
//!
//! A `Session` holds the object state across calls so test generation can
//! interleave generation and execution; `exec_test` replays a finished
//! call sequence from scratch (used when running suites against mutants).

pub mod observable;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::minilang::ast::*;
use crate::minilang::points::ProgramPoint;
use crate::values::{Ty, Value};

pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuntimeErrorKind {
    DivByZero,
    IntOverflow,
    IndexOutOfBounds,
    Fail,
}

impl RuntimeErrorKind {
    pub fn label(self) -> &'static str {
        match self {
            RuntimeErrorKind::DivByZero => "div-by-zero",
            RuntimeErrorKind::IntOverflow => "int-overflow",
            RuntimeErrorKind::IndexOutOfBounds => "index-out-of-bounds",
            RuntimeErrorKind::Fail => "fail",
        }
    }
}

/// Why a call stopped early. Budget exhaustion is not a runtime error:
/// it never comes from program semantics, only from the harness bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Abort {
    Error(RuntimeErrorKind),
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CallOutcome {
    Completed { ret: Option<Value> },
    RuntimeError(RuntimeErrorKind),
    BudgetExhausted,
}

impl CallOutcome {
    pub fn completed(&self) -> bool {
        matches!(self, CallOutcome::Completed { .. })
    }

    /// Canonical one-token-ish form used in observable output and reports.
    pub fn canon(&self) -> String {
        match self {
            CallOutcome::Completed { ret: None } => "void".to_string(),
            CallOutcome::Completed { ret: Some(v) } => format!("ret {}", v.canon()),
            CallOutcome::RuntimeError(k) => format!("error {}", k.label()),
            CallOutcome::BudgetExhausted => "budget".to_string(),
        }
    }
}

/// One assertion-evaluation context: the state pair, arguments, and return
/// value captured around a single completed call.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub point: ProgramPoint,
    pub test_id: String,
    pub call_index: usize,
    pub pre_state: BTreeMap<String, Value>,
    pub post_state: BTreeMap<String, Value>,
    pub params: BTreeMap<String, Value>,
    pub ret: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CallError {
    #[error("no method named `{0}`")]
    NoSuchMethod(String),
    #[error("`{method}` takes {expected} argument(s), got {got}")]
    ArityMismatch { method: String, expected: usize, got: usize },
    #[error("argument {index} of `{method}` has type {got}, expected {expected}")]
    ArgTypeMismatch { method: String, index: usize, got: Ty, expected: Ty },
    #[error("constructor already ran")]
    CtorTwice,
    #[error("constructor must run first")]
    CtorFirst,
}

pub struct Session<'u> {
    unit: &'u Unit,
    state: BTreeMap<String, Value>,
    step_budget: u64,
    calls_done: usize,
    ctor_ran: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub method: String,
    pub args: Vec<Value>,
    pub outcome: CallOutcome,
    /// Post + invariant observation for a completed call, empty otherwise.
    pub observations: Vec<Observation>,
}

impl<'u> Session<'u> {
    pub fn new(unit: &'u Unit, step_budget: u64) -> Self {
        let mut state = BTreeMap::new();
        for f in &unit.fields {
            state.insert(f.name.clone(), Value::default_for(f.ty));
        }
        Session { unit, state, step_budget, calls_done: 0, ctor_ran: false }
    }

    pub fn state(&self) -> &BTreeMap<String, Value> {
        &self.state
    }

    pub fn calls_done(&self) -> usize {
        self.calls_done
    }

    /// Runs one call. The first call must be "ctor"; an abnormal outcome
    /// leaves whatever field writes already happened in place.
    pub fn call(&mut self, method: &str, args: &[Value], test_id: &str) -> Result<CallRecord, CallError> {
        let m = if method == "ctor" {
            if self.ctor_ran {
                return Err(CallError::CtorTwice);
            }
            self.unit.effective_ctor()
        } else {
            if !self.ctor_ran {
                return Err(CallError::CtorFirst);
            }
            self.unit.method(method).ok_or_else(|| CallError::NoSuchMethod(method.to_string()))?.clone()
        };

        if args.len() != m.params.len() {
            return Err(CallError::ArityMismatch {
                method: method.to_string(),
                expected: m.params.len(),
                got: args.len(),
            });
        }
        for (i, (p, a)) in m.params.iter().zip(args).enumerate() {
            if a.ty() != p.ty {
                return Err(CallError::ArgTypeMismatch {
                    method: method.to_string(),
                    index: i,
                    got: a.ty(),
                    expected: p.ty,
                });
            }
        }

        let pre_state = self.state.clone();
        let mut params = BTreeMap::new();
        for (p, a) in m.params.iter().zip(args) {
            params.insert(p.name.clone(), a.clone());
        }

        let mut exec = Exec {
            unit: self.unit,
            fields: &mut self.state,
            locals: vec![params.clone()],
            steps_left: self.step_budget,
        };
        let outcome = match exec.block(&m.body) {
            Ok(Flow::Return(v)) => CallOutcome::Completed { ret: v },
            Ok(Flow::Normal) => CallOutcome::Completed { ret: None },
            Err(Abort::Error(k)) => CallOutcome::RuntimeError(k),
            Err(Abort::Budget) => CallOutcome::BudgetExhausted,
        };

        if method == "ctor" {
            self.ctor_ran = true;
        }
        let call_index = self.calls_done;
        self.calls_done += 1;

        let mut observations = Vec::new();
        if let CallOutcome::Completed { ret } = &outcome {
            let post_state = self.state.clone();
            observations.push(Observation {
                point: ProgramPoint::MethodPost(method.to_string()),
                test_id: test_id.to_string(),
                call_index,
                pre_state: pre_state.clone(),
                post_state: post_state.clone(),
                params,
                ret: ret.clone(),
            });
            observations.push(Observation {
                point: ProgramPoint::ClassInvariant,
                test_id: test_id.to_string(),
                call_index,
                pre_state,
                post_state,
                params: BTreeMap::new(),
                ret: None,
            });
        }

        Ok(CallRecord { method: method.to_string(), args: args.to_vec(), outcome, observations })
    }
}

enum Flow {
    Normal,
    Return(Option<Value>),
}

struct Exec<'a> {
    unit: &'a Unit,
    fields: &'a mut BTreeMap<String, Value>,
    locals: Vec<BTreeMap<String, Value>>,
    steps_left: u64,
}

impl<'a> Exec<'a> {
    fn charge(&mut self) -> Result<(), Abort> {
        if self.steps_left == 0 {
            return Err(Abort::Budget);
        }
        self.steps_left -= 1;
        Ok(())
    }

    fn lookup(&self, name: &str) -> Option<Value> {
        for scope in self.locals.iter().rev() {
            if let Some(v) = scope.get(name) {
                return Some(v.clone());
            }
        }
        self.fields.get(name).cloned()
    }

    fn store(&mut self, name: &str, v: Value) {
        for scope in self.locals.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = v;
                return;
            }
        }
        // the type checker guarantees the name exists
        self.fields.insert(name.to_string(), v);
    }

    fn block(&mut self, b: &Block) -> Result<Flow, Abort> {
        self.locals.push(BTreeMap::new());
        let r = self.stmts(&b.stmts);
        self.locals.pop();
        r
    }

    fn stmts(&mut self, stmts: &[Stmt]) -> Result<Flow, Abort> {
        for st in stmts {
            if let Flow::Return(v) = self.stmt(st)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, st: &Stmt) -> Result<Flow, Abort> {
        self.charge()?;
        match &st.kind {
            StmtKind::Local { name, init, .. } => {
                let v = self.eval(init)?;
                self.locals.last_mut().unwrap().insert(name.clone(), v);
                Ok(Flow::Normal)
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval(value)?;
                self.store(name, v);
                Ok(Flow::Normal)
            }
            StmtKind::AssignElem { array, index, value } => {
                let iv = self.eval(index)?;
                let v = self.eval(value)?;
                let Value::Int(i) = iv else { unreachable!("typechecked index") };
                let mut arr = self.lookup(array).expect("typechecked array name");
                match (&mut arr, v) {
                    (Value::IntArray(xs), Value::Int(x)) => {
                        let idx = usize::try_from(i).map_err(|_| Abort::Error(RuntimeErrorKind::IndexOutOfBounds))?;
                        if idx >= xs.len() {
                            return Err(Abort::Error(RuntimeErrorKind::IndexOutOfBounds));
                        }
                        xs[idx] = x;
                    }
                    (Value::RealArray(xs), Value::Real(x)) => {
                        let idx = usize::try_from(i).map_err(|_| Abort::Error(RuntimeErrorKind::IndexOutOfBounds))?;
                        if idx >= xs.len() {
                            return Err(Abort::Error(RuntimeErrorKind::IndexOutOfBounds));
                        }
                        xs[idx] = x;
                    }
                    _ => unreachable!("typechecked element assignment"),
                }
                self.store(array, arr);
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then_blk, else_blk } => {
                let c = self.truth(cond)?;
                if c {
                    self.block(then_blk)
                } else if let Some(e) = else_blk {
                    self.block(e)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                loop {
                    let c = self.truth(cond)?;
                    if !c {
                        return Ok(Flow::Normal);
                    }
                    if let Flow::Return(v) = self.block(body)? {
                        return Ok(Flow::Return(v));
                    }
                    // each iteration pays for the condition re-check
                    self.charge()?;
                }
            }
            StmtKind::For { var, array, body } => {
                let arr = self.eval(array)?;
                let items: Vec<Value> = match arr {
                    Value::IntArray(xs) => xs.into_iter().map(Value::Int).collect(),
                    Value::RealArray(xs) => xs.into_iter().map(Value::Real).collect(),
                    _ => unreachable!("typechecked for-in array"),
                };
                // iterates the array value captured at loop entry
                for item in items {
                    self.charge()?;
                    self.locals.push(BTreeMap::new());
                    self.locals.last_mut().unwrap().insert(var.clone(), item);
                    let flow = self.stmts(&body.stmts);
                    self.locals.pop();
                    if let Flow::Return(v) = flow? {
                        return Ok(Flow::Return(v));
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Return { value } => {
                let v = match value {
                    Some(e) => Some(self.eval(e)?),
                    None => None,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::Fail => Err(Abort::Error(RuntimeErrorKind::Fail)),
        }
    }

    fn truth(&mut self, e: &Expr) -> Result<bool, Abort> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            _ => unreachable!("typechecked condition"),
        }
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, Abort> {
        match &e.kind {
            ExprKind::IntLit(v) => Ok(Value::Int(*v)),
            ExprKind::RealLit(v) => Ok(Value::Real(*v)),
            ExprKind::BoolLit(v) => Ok(Value::Bool(*v)),
            ExprKind::NanLit => Ok(Value::Real(f64::NAN)),
            ExprKind::Ident(name) => Ok(self.lookup(name).expect("typechecked name")),
            ExprKind::Paren(inner) => self.eval(inner),
            ExprKind::Index { array, index } => {
                let a = self.eval(array)?;
                let i = self.eval(index)?;
                let Value::Int(i) = i else { unreachable!() };
                let idx = usize::try_from(i).map_err(|_| Abort::Error(RuntimeErrorKind::IndexOutOfBounds))?;
                match a {
                    Value::IntArray(xs) => xs
                        .get(idx)
                        .map(|v| Value::Int(*v))
                        .ok_or(Abort::Error(RuntimeErrorKind::IndexOutOfBounds)),
                    Value::RealArray(xs) => xs
                        .get(idx)
                        .map(|v| Value::Real(*v))
                        .ok_or(Abort::Error(RuntimeErrorKind::IndexOutOfBounds)),
                    _ => unreachable!("typechecked indexing"),
                }
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand)?;
                match (op, v) {
                    (UnOp::Neg, Value::Int(x)) => x
                        .checked_neg()
                        .map(Value::Int)
                        .ok_or(Abort::Error(RuntimeErrorKind::IntOverflow)),
                    (UnOp::Neg, Value::Real(x)) => Ok(Value::Real(-x)),
                    (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    _ => unreachable!("typechecked unary"),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs)?;
                let r = self.eval(rhs)?;
                binop(*op, l, r).map_err(Abort::Error)
            }
            ExprKind::Call { f, args } => {
                let vs: Result<Vec<Value>, Abort> = args.iter().map(|a| self.eval(a)).collect();
                let vs = vs?;
                builtin(*f, &vs, self.unit).map_err(Abort::Error)
            }
        }
    }
}

/// Shared by the interpreter; int arithmetic is checked, real arithmetic
/// is plain IEEE (division by zero gives inf/nan, never an error).
pub fn binop(op: BinOp, l: Value, r: Value) -> Result<Value, RuntimeErrorKind> {
    use RuntimeErrorKind as E;
    match (op, l, r) {
        (BinOp::Add, Value::Int(a), Value::Int(b)) => a.checked_add(b).map(Value::Int).ok_or(E::IntOverflow),
        (BinOp::Sub, Value::Int(a), Value::Int(b)) => a.checked_sub(b).map(Value::Int).ok_or(E::IntOverflow),
        (BinOp::Mul, Value::Int(a), Value::Int(b)) => a.checked_mul(b).map(Value::Int).ok_or(E::IntOverflow),
        (BinOp::Div, Value::Int(a), Value::Int(b)) => {
            if b == 0 {
                Err(E::DivByZero)
            } else {
                a.checked_div(b).map(Value::Int).ok_or(E::IntOverflow)
            }
        }
        (BinOp::Rem, Value::Int(a), Value::Int(b)) => {
            if b == 0 {
                Err(E::DivByZero)
            } else {
                a.checked_rem(b).map(Value::Int).ok_or(E::IntOverflow)
            }
        }
        (BinOp::Add, Value::Real(a), Value::Real(b)) => Ok(Value::Real(a + b)),
        (BinOp::Sub, Value::Real(a), Value::Real(b)) => Ok(Value::Real(a - b)),
        (BinOp::Mul, Value::Real(a), Value::Real(b)) => Ok(Value::Real(a * b)),
        (BinOp::Div, Value::Real(a), Value::Real(b)) => Ok(Value::Real(a / b)),
        (BinOp::Lt, Value::Int(a), Value::Int(b)) => Ok(Value::Bool(a < b)),
        (BinOp::Le, Value::Int(a), Value::Int(b)) => Ok(Value::Bool(a <= b)),
        (BinOp::Gt, Value::Int(a), Value::Int(b)) => Ok(Value::Bool(a > b)),
        (BinOp::Ge, Value::Int(a), Value::Int(b)) => Ok(Value::Bool(a >= b)),
        (BinOp::Lt, Value::Real(a), Value::Real(b)) => Ok(Value::Bool(a < b)),
        (BinOp::Le, Value::Real(a), Value::Real(b)) => Ok(Value::Bool(a <= b)),
        (BinOp::Gt, Value::Real(a), Value::Real(b)) => Ok(Value::Bool(a > b)),
        (BinOp::Ge, Value::Real(a), Value::Real(b)) => Ok(Value::Bool(a >= b)),
        (BinOp::Eq, a, b) => Ok(Value::Bool(scalar_eq(&a, &b))),
        (BinOp::Ne, a, b) => Ok(Value::Bool(!scalar_eq(&a, &b))),
        (BinOp::And, Value::Bool(a), Value::Bool(b)) => Ok(Value::Bool(a && b)),
        (BinOp::Or, Value::Bool(a), Value::Bool(b)) => Ok(Value::Bool(a || b)),
        _ => unreachable!("typechecked binary op"),
    }
}

/// Program-level `==`: strict IEEE on reals, so `nan == nan` is false.
fn scalar_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Real(x), Value::Real(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        _ => unreachable!("typechecked equality"),
    }
}

pub fn builtin(f: Builtin, args: &[Value], _unit: &Unit) -> Result<Value, RuntimeErrorKind> {
    use RuntimeErrorKind as E;
    match (f, args) {
        (Builtin::Abs, [Value::Int(x)]) => x.checked_abs().map(Value::Int).ok_or(E::IntOverflow),
        (Builtin::Abs, [Value::Real(x)]) => Ok(Value::Real(x.abs())),
        (Builtin::Max, [Value::Int(a), Value::Int(b)]) => Ok(Value::Int(*a.max(b))),
        (Builtin::Min, [Value::Int(a), Value::Int(b)]) => Ok(Value::Int(*a.min(b))),
        // real max/min propagate nan from either side
        (Builtin::Max, [Value::Real(a), Value::Real(b)]) => {
            Ok(Value::Real(if a.is_nan() || b.is_nan() {
                f64::NAN
            } else if *a >= *b {
                *a
            } else {
                *b
            }))
        }
        (Builtin::Min, [Value::Real(a), Value::Real(b)]) => {
            Ok(Value::Real(if a.is_nan() || b.is_nan() {
                f64::NAN
            } else if *a <= *b {
                *a
            } else {
                *b
            }))
        }
        (Builtin::ToReal, [Value::Int(x)]) => Ok(Value::Real(*x as f64)),
        (Builtin::Len, [Value::IntArray(xs)]) => Ok(Value::Int(xs.len() as i64)),
        (Builtin::Len, [Value::RealArray(xs)]) => Ok(Value::Int(xs.len() as i64)),
        _ => unreachable!("typechecked builtin"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::typecheck::load_unit;

    fn counter() -> Unit {
        load_unit(
            "class Counter {\n  field n: int;\n  ctor(start: int) { n := start; }\n  method bump(d: int): int { n := n + d; return n; }\n  method half(): int { n := n / (n - n); return n; }\n}",
        )
        .unwrap()
    }

    #[test]
    fn a_completed_call_yields_post_and_invariant_observations() {
        let u = counter();
        let mut s = Session::new(&u, DEFAULT_STEP_BUDGET);
        let r = s.call("ctor", &[Value::Int(3)], "t").unwrap();
        assert!(r.outcome.completed());
        assert_eq!(r.observations.len(), 2);
        assert_eq!(r.observations[0].point.label(), "post:ctor");
        assert_eq!(r.observations[1].point.label(), "inv");
        // ctor prestate is the field-default state
        assert_eq!(r.observations[0].pre_state["n"], Value::Int(0));
        assert_eq!(r.observations[0].post_state["n"], Value::Int(3));

        let r2 = s.call("bump", &[Value::Int(4)], "t").unwrap();
        assert_eq!(r2.observations[0].ret, Some(Value::Int(7)));
        assert_eq!(r2.observations[0].params["d"], Value::Int(4));
        // invariant observation carries no params and no return
        assert!(r2.observations[1].params.is_empty());
        assert_eq!(r2.observations[1].ret, None);
    }

    #[test]
    fn runtime_errors_yield_no_observations_but_keep_state() {
        let u = counter();
        let mut s = Session::new(&u, DEFAULT_STEP_BUDGET);
        s.call("ctor", &[Value::Int(5)], "t").unwrap();
        let r = s.call("half", &[], "t").unwrap();
        assert_eq!(r.outcome, CallOutcome::RuntimeError(RuntimeErrorKind::DivByZero));
        assert!(r.observations.is_empty());
        assert_eq!(s.state()["n"], Value::Int(5));
    }

    #[test]
    fn int_overflow_is_an_error_not_a_wrap() {
        let u = load_unit("class C { field n: int; ctor(k: int) { n := k; } method sq(): int { n := n * n; return n; } }").unwrap();
        let mut s = Session::new(&u, DEFAULT_STEP_BUDGET);
        s.call("ctor", &[Value::Int(3_037_000_500)], "t").unwrap();
        let r = s.call("sq", &[], "t").unwrap();
        assert_eq!(r.outcome, CallOutcome::RuntimeError(RuntimeErrorKind::IntOverflow));
    }

    #[test]
    fn budget_stops_infinite_loops() {
        let u = load_unit("class C { ctor() { } method spin(): void { while (true) { } } }").unwrap();
        let mut s = Session::new(&u, 1000);
        s.call("ctor", &[], "t").unwrap();
        let r = s.call("spin", &[], "t").unwrap();
        assert_eq!(r.outcome, CallOutcome::BudgetExhausted);
    }

    #[test]
    fn real_division_by_zero_is_ieee_not_an_error() {
        let u = load_unit("class C { field x: real; ctor() { } method m(a: real): real { x := a / 0.0; return x; } }").unwrap();
        let mut s = Session::new(&u, DEFAULT_STEP_BUDGET);
        s.call("ctor", &[], "t").unwrap();
        let r = s.call("m", &[Value::Real(1.0)], "t").unwrap();
        assert_eq!(r.outcome, CallOutcome::Completed { ret: Some(Value::Real(f64::INFINITY)) });
    }

    #[test]
    fn arrays_copy_on_assign() {
        let u = load_unit(
            "class C { field a: int[]; field b: int[]; ctor(xs: int[]) { a := xs; b := a; }\n  method poke(): int { if (len(a) < 1) { return -1; } a[0] := 9; return b[0]; } }",
        )
        .unwrap();
        let mut s = Session::new(&u, DEFAULT_STEP_BUDGET);
        s.call("ctor", &[Value::IntArray(vec![1, 2])], "t").unwrap();
        let r = s.call("poke", &[], "t").unwrap();
        // b kept the old copy
        assert_eq!(r.outcome, CallOutcome::Completed { ret: Some(Value::Int(1)) });
        assert_eq!(s.state()["a"], Value::IntArray(vec![9, 2]));
    }

    #[test]
    fn dl_max_propagates_nan_unlike_ieee_max() {
        let u = load_unit("class C { ctor() { } method m(a: real, b: real): real { return max(a, b); } }").unwrap();
        let mut s = Session::new(&u, DEFAULT_STEP_BUDGET);
        s.call("ctor", &[], "t").unwrap();
        let r = s.call("m", &[Value::Real(f64::NAN), Value::Real(1.0)], "t").unwrap();
        let CallOutcome::Completed { ret: Some(Value::Real(v)) } = r.outcome else {
            panic!("expected completion");
        };
        assert!(v.is_nan());
    }

    #[test]
    fn fail_is_a_runtime_error() {
        let u = load_unit("class C { ctor() { } method nope(): void { fail; } }").unwrap();
        let mut s = Session::new(&u, DEFAULT_STEP_BUDGET);
        s.call("ctor", &[], "t").unwrap();
        let r = s.call("nope", &[], "t").unwrap();
        assert_eq!(r.outcome, CallOutcome::RuntimeError(RuntimeErrorKind::Fail));
    }
}
