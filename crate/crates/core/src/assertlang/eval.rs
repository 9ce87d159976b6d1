//! Three-valued assertion evaluation. Connectives are symmetric (strong
//! Kleene): a false conjunct or true disjunct decides the result even if
//! the other side errors, and a false antecedent makes an implication
//! true regardless of its consequent. That keeps guarded assertions like
//! `len(a) > 0 ==> max(a) < x` well-behaved on empty arrays, and makes
//! operand order irrelevant to semantics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ast::{AggKind, ArithOp, CmpOp, Formula, FreeVar, Term};
use crate::interpreter::Observation;
use crate::values::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvalErrorKind {
    /// The environment has no value of the required shape for a name.
    UnboundIdentifier,
    /// Int overflow, int division or modulo by zero. Real arithmetic
    /// never errors: division by zero follows IEEE.
    Arithmetic,
    /// max/maxabs/min over an empty array. sum/sumabs of empty is 0.
    EmptyAggregate,
}

impl EvalErrorKind {
    pub fn label(self) -> &'static str {
        match self {
            EvalErrorKind::UnboundIdentifier => "unbound-identifier",
            EvalErrorKind::Arithmetic => "arithmetic",
            EvalErrorKind::EmptyAggregate => "empty-aggregate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriVal {
    True,
    False,
    Err(EvalErrorKind),
}

impl TriVal {
    pub fn is_err(self) -> bool {
        matches!(self, TriVal::Err(_))
    }

    /// Collapses error kinds: the classification outcome classes are
    /// true, false, and error.
    pub fn outcome_byte(self) -> u8 {
        match self {
            TriVal::True => 1,
            TriVal::False => 0,
            TriVal::Err(_) => 2,
        }
    }
}

/// A source of values for free identifiers.
pub trait EvalEnv {
    /// Current-state lookup: parameters take precedence over fields
    /// (they cannot collide in well-formed DL anyway).
    fn cur(&self, name: &str) -> Option<Value>;
    fn old(&self, name: &str) -> Option<Value>;
    fn result(&self) -> Option<Value>;
}

impl EvalEnv for Observation {
    fn cur(&self, name: &str) -> Option<Value> {
        self.params.get(name).or_else(|| self.post_state.get(name)).cloned()
    }

    fn old(&self, name: &str) -> Option<Value> {
        self.pre_state.get(name).cloned()
    }

    fn result(&self) -> Option<Value> {
        self.ret.clone()
    }
}

/// Plain map environment for bounded-domain enumeration.
#[derive(Debug, Clone, Default)]
pub struct MapEnv {
    pub vals: BTreeMap<FreeVar, Value>,
}

impl EvalEnv for MapEnv {
    fn cur(&self, name: &str) -> Option<Value> {
        self.vals.get(&FreeVar::Cur(name.to_string())).cloned()
    }

    fn old(&self, name: &str) -> Option<Value> {
        self.vals.get(&FreeVar::Old(name.to_string())).cloned()
    }

    fn result(&self) -> Option<Value> {
        self.vals.get(&FreeVar::Result).cloned()
    }
}

pub fn eval_formula(f: &Formula, env: &dyn EvalEnv) -> TriVal {
    eval_f(f, env, &mut Vec::new())
}

pub fn eval_term(t: &Term, env: &dyn EvalEnv) -> Result<Value, EvalErrorKind> {
    eval_t(t, env, &mut Vec::new())
}

fn eval_f(f: &Formula, env: &dyn EvalEnv, bound: &mut Vec<(String, Value, Value)>) -> TriVal {
    match f {
        Formula::Lit(true) => TriVal::True,
        Formula::Lit(false) => TriVal::False,
        Formula::BoolTerm(t) => match eval_t(t, env, bound) {
            Ok(Value::Bool(true)) => TriVal::True,
            Ok(Value::Bool(false)) => TriVal::False,
            Ok(_) => TriVal::Err(EvalErrorKind::UnboundIdentifier),
            Err(e) => TriVal::Err(e),
        },
        Formula::IsNan(t) => match eval_t(t, env, bound) {
            Ok(Value::Real(v)) => {
                if v.is_nan() {
                    TriVal::True
                } else {
                    TriVal::False
                }
            }
            Ok(_) => TriVal::Err(EvalErrorKind::UnboundIdentifier),
            Err(e) => TriVal::Err(e),
        },
        Formula::Not(g) => match eval_f(g, env, bound) {
            TriVal::True => TriVal::False,
            TriVal::False => TriVal::True,
            e => e,
        },
        Formula::And(a, b) => kleene_and(eval_f(a, env, bound), eval_f(b, env, bound)),
        Formula::Or(a, b) => kleene_or(eval_f(a, env, bound), eval_f(b, env, bound)),
        Formula::Implies(a, b) => {
            let av = eval_f(a, env, bound);
            let neg = match av {
                TriVal::True => TriVal::False,
                TriVal::False => TriVal::True,
                e => e,
            };
            kleene_or(neg, eval_f(b, env, bound))
        }
        Formula::Cmp { op, lhs, rhs } => {
            let l = match eval_t(lhs, env, bound) {
                Ok(v) => v,
                Err(e) => return TriVal::Err(e),
            };
            let r = match eval_t(rhs, env, bound) {
                Ok(v) => v,
                Err(e) => return TriVal::Err(e),
            };
            match cmp_values(*op, &l, &r) {
                Some(true) => TriVal::True,
                Some(false) => TriVal::False,
                None => TriVal::Err(EvalErrorKind::UnboundIdentifier),
            }
        }
        Formula::Forall { var, array, body } => quant(true, var, array, body, env, bound),
        Formula::Exists { var, array, body } => quant(false, var, array, body, env, bound),
    }
}

fn quant(
    is_forall: bool,
    var: &str,
    array: &Term,
    body: &Formula,
    env: &dyn EvalEnv,
    bound: &mut Vec<(String, Value, Value)>,
) -> TriVal {
    let arr = match eval_t(array, env, bound) {
        Ok(v) => v,
        Err(e) => return TriVal::Err(e),
    };
    let elems: Vec<Value> = match arr {
        Value::IntArray(xs) => xs.into_iter().map(Value::Int).collect(),
        Value::RealArray(xs) => xs.into_iter().map(Value::Real).collect(),
        _ => return TriVal::Err(EvalErrorKind::UnboundIdentifier),
    };
    let mut saw_err: Option<EvalErrorKind> = None;
    for (i, elem) in elems.into_iter().enumerate() {
        // the variable is the index; the element rides along for a[i]
        bound.push((var.to_string(), Value::Int(i as i64), elem));
        let v = eval_f(body, env, bound);
        bound.pop();
        match (is_forall, v) {
            (true, TriVal::False) => return TriVal::False,
            (false, TriVal::True) => return TriVal::True,
            (_, TriVal::Err(e)) => saw_err = Some(saw_err.unwrap_or(e)),
            _ => {}
        }
    }
    if let Some(e) = saw_err {
        TriVal::Err(e)
    } else if is_forall {
        TriVal::True
    } else {
        TriVal::False
    }
}

fn kleene_and(a: TriVal, b: TriVal) -> TriVal {
    match (a, b) {
        (TriVal::False, _) | (_, TriVal::False) => TriVal::False,
        (TriVal::Err(e), _) | (_, TriVal::Err(e)) => TriVal::Err(e),
        _ => TriVal::True,
    }
}

fn kleene_or(a: TriVal, b: TriVal) -> TriVal {
    match (a, b) {
        (TriVal::True, _) | (_, TriVal::True) => TriVal::True,
        (TriVal::Err(e), _) | (_, TriVal::Err(e)) => TriVal::Err(e),
        _ => TriVal::False,
    }
}

/// Assertion comparison semantics. Equality is reflexive even for nan
/// (two nans are equal, nan differs from every number); ordered
/// comparisons follow IEEE and are false when either side is nan.
fn cmp_values(op: CmpOp, l: &Value, r: &Value) -> Option<bool> {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => Some(match op {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }),
        (Value::Real(a), Value::Real(b)) => Some(match op {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => (a.is_nan() && b.is_nan()) || a == b,
            CmpOp::Ne => !((a.is_nan() && b.is_nan()) || a == b),
        }),
        _ => None,
    }
}

fn eval_t(t: &Term, env: &dyn EvalEnv, bound: &mut Vec<(String, Value, Value)>) -> Result<Value, EvalErrorKind> {
    match t {
        Term::IntLit(v) => Ok(Value::Int(*v)),
        Term::RealLit(v) => Ok(Value::Real(*v)),
        Term::Ident(n) => {
            if let Some((_, idx, _)) = bound.iter().rev().find(|(v, _, _)| v == n) {
                return Ok(idx.clone());
            }
            env.cur(n).ok_or(EvalErrorKind::UnboundIdentifier)
        }
        Term::Old(n) => env.old(n).ok_or(EvalErrorKind::UnboundIdentifier),
        Term::Result => env.result().ok_or(EvalErrorKind::UnboundIdentifier),
        Term::Idx { array: _, index } => {
            // typing pinned the index to the bound var of this array, so
            // use the element value carried on the binding
            let Term::Ident(ix) = index.as_ref() else {
                return Err(EvalErrorKind::UnboundIdentifier);
            };
            match bound.iter().rev().find(|(v, _, _)| v == ix) {
                Some((_, _, elem)) => Ok(elem.clone()),
                None => Err(EvalErrorKind::UnboundIdentifier),
            }
        }
        Term::Len(a) => match eval_t(a, env, bound)? {
            Value::IntArray(xs) => Ok(Value::Int(xs.len() as i64)),
            Value::RealArray(xs) => Ok(Value::Int(xs.len() as i64)),
            _ => Err(EvalErrorKind::UnboundIdentifier),
        },
        Term::Neg(a) => match eval_t(a, env, bound)? {
            Value::Int(v) => v.checked_neg().map(Value::Int).ok_or(EvalErrorKind::Arithmetic),
            Value::Real(v) => Ok(Value::Real(-v)),
            _ => Err(EvalErrorKind::UnboundIdentifier),
        },
        Term::Arith { op, lhs, rhs } => {
            let l = eval_t(lhs, env, bound)?;
            let r = eval_t(rhs, env, bound)?;
            match (l, r) {
                (Value::Int(a), Value::Int(b)) => {
                    let v = match op {
                        ArithOp::Add => a.checked_add(b),
                        ArithOp::Sub => a.checked_sub(b),
                        ArithOp::Mul => a.checked_mul(b),
                        ArithOp::Div => {
                            if b == 0 {
                                None
                            } else {
                                a.checked_div(b)
                            }
                        }
                    };
                    v.map(Value::Int).ok_or(EvalErrorKind::Arithmetic)
                }
                (Value::Real(a), Value::Real(b)) => {
                    let v = match op {
                        ArithOp::Add => a + b,
                        ArithOp::Sub => a - b,
                        ArithOp::Mul => a * b,
                        ArithOp::Div => a / b,
                    };
                    Ok(Value::Real(v))
                }
                _ => Err(EvalErrorKind::UnboundIdentifier),
            }
        }
        Term::Agg { kind, array } => {
            let arr = eval_t(array, env, bound)?;
            match arr {
                Value::IntArray(xs) => agg_int(*kind, &xs),
                Value::RealArray(xs) => agg_real(*kind, &xs),
                _ => Err(EvalErrorKind::UnboundIdentifier),
            }
        }
    }
}

fn agg_int(kind: AggKind, xs: &[i64]) -> Result<Value, EvalErrorKind> {
    match kind {
        AggKind::Sum => {
            let mut acc = 0i64;
            for x in xs {
                acc = acc.checked_add(*x).ok_or(EvalErrorKind::Arithmetic)?;
            }
            Ok(Value::Int(acc))
        }
        AggKind::SumAbs => {
            let mut acc = 0i64;
            for x in xs {
                let a = x.checked_abs().ok_or(EvalErrorKind::Arithmetic)?;
                acc = acc.checked_add(a).ok_or(EvalErrorKind::Arithmetic)?;
            }
            Ok(Value::Int(acc))
        }
        AggKind::Max => xs.iter().max().map(|v| Value::Int(*v)).ok_or(EvalErrorKind::EmptyAggregate),
        AggKind::Min => xs.iter().min().map(|v| Value::Int(*v)).ok_or(EvalErrorKind::EmptyAggregate),
        AggKind::MaxAbs => {
            let mut best: Option<i64> = None;
            for x in xs {
                let a = x.checked_abs().ok_or(EvalErrorKind::Arithmetic)?;
                best = Some(best.map_or(a, |b| b.max(a)));
            }
            best.map(Value::Int).ok_or(EvalErrorKind::EmptyAggregate)
        }
    }
}

/// Real folds run left to right; max/min/maxabs propagate nan like the
/// DL builtins do.
fn agg_real(kind: AggKind, xs: &[f64]) -> Result<Value, EvalErrorKind> {
    let nanmax = |a: f64, b: f64| if a.is_nan() || b.is_nan() { f64::NAN } else if a >= b { a } else { b };
    let nanmin = |a: f64, b: f64| if a.is_nan() || b.is_nan() { f64::NAN } else if a <= b { a } else { b };
    match kind {
        AggKind::Sum => Ok(Value::Real(xs.iter().fold(0.0, |acc, x| acc + x))),
        AggKind::SumAbs => Ok(Value::Real(xs.iter().fold(0.0, |acc, x| acc + x.abs()))),
        AggKind::Max => {
            if xs.is_empty() {
                Err(EvalErrorKind::EmptyAggregate)
            } else {
                Ok(Value::Real(xs.iter().skip(1).fold(xs[0], |a, b| nanmax(a, *b))))
            }
        }
        AggKind::Min => {
            if xs.is_empty() {
                Err(EvalErrorKind::EmptyAggregate)
            } else {
                Ok(Value::Real(xs.iter().skip(1).fold(xs[0], |a, b| nanmin(a, *b))))
            }
        }
        AggKind::MaxAbs => {
            if xs.is_empty() {
                Err(EvalErrorKind::EmptyAggregate)
            } else {
                Ok(Value::Real(xs.iter().skip(1).fold(xs[0].abs(), |a, b| nanmax(a, b.abs()))))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertlang::parser::parse_formula;

    fn env(pairs: &[(&str, Value)]) -> MapEnv {
        let mut vals = BTreeMap::new();
        for (k, v) in pairs {
            let fv = if let Some(n) = k.strip_prefix("old(") {
                FreeVar::Old(n.trim_end_matches(')').to_string())
            } else if *k == "result" {
                FreeVar::Result
            } else {
                FreeVar::Cur(k.to_string())
            };
            vals.insert(fv, v.clone());
        }
        MapEnv { vals }
    }

    fn ev(src: &str, e: &MapEnv) -> TriVal {
        eval_formula(&parse_formula(src).unwrap(), e)
    }

    #[test]
    fn equality_is_nan_reflexive_ordering_is_not() {
        let e = env(&[("x", Value::Real(f64::NAN)), ("y", Value::Real(1.0))]);
        assert_eq!(ev("x == x", &e), TriVal::True);
        assert_eq!(ev("x != x", &e), TriVal::False);
        assert_eq!(ev("x == y", &e), TriVal::False);
        assert_eq!(ev("x <= x", &e), TriVal::False);
        assert_eq!(ev("x < y", &e), TriVal::False);
        assert_eq!(ev("isnan(x)", &e), TriVal::True);
        assert_eq!(ev("isnan(y)", &e), TriVal::False);
    }

    #[test]
    fn negative_zero_equals_zero() {
        let e = env(&[("x", Value::Real(-0.0))]);
        assert_eq!(ev("x == 0.0", &e), TriVal::True);
    }

    #[test]
    fn false_guard_shields_an_erroring_consequent() {
        let e = env(&[("a", Value::IntArray(vec![]))]);
        assert_eq!(ev("0 < len(a) ==> max(a) <= 5", &e), TriVal::True);
        // unguarded, the empty aggregate errors
        assert_eq!(ev("max(a) <= 5", &e), TriVal::Err(EvalErrorKind::EmptyAggregate));
        // sum of empty is zero, not an error
        assert_eq!(ev("sum(a) == 0", &e), TriVal::True);
    }

    #[test]
    fn connectives_are_symmetric_under_errors() {
        let e = env(&[("a", Value::IntArray(vec![])), ("p", Value::Bool(false)), ("q", Value::Bool(true))]);
        assert_eq!(ev("p && max(a) == 0", &e), TriVal::False);
        assert_eq!(ev("max(a) == 0 && p", &e), TriVal::False);
        assert_eq!(ev("q || max(a) == 0", &e), TriVal::True);
        assert_eq!(ev("max(a) == 0 || q", &e), TriVal::True);
        assert_eq!(ev("q && max(a) == 0", &e), TriVal::Err(EvalErrorKind::EmptyAggregate));
    }

    #[test]
    fn quantifiers_over_indices_with_empty_defaults() {
        let e = env(&[("xs", Value::IntArray(vec![3, 5, 7])), ("n", Value::Int(9)), ("es", Value::IntArray(vec![]))]);
        assert_eq!(ev("forall i in xs: xs[i] < n", &e), TriVal::True);
        assert_eq!(ev("exists i in xs: xs[i] == 5", &e), TriVal::True);
        assert_eq!(ev("forall i in xs: i < 3", &e), TriVal::True);
        assert_eq!(ev("forall i in es: xs[1] == 0", &e), TriVal::True, "vacuous forall");
        assert_eq!(ev("exists i in es: 0 == 0", &e), TriVal::False, "empty exists");
    }

    #[test]
    fn int_overflow_and_div_zero_are_eval_errors() {
        let e = env(&[("n", Value::Int(i64::MAX)), ("z", Value::Int(0))]);
        assert_eq!(ev("n + 1 == n", &e), TriVal::Err(EvalErrorKind::Arithmetic));
        assert_eq!(ev("n / z == n", &e), TriVal::Err(EvalErrorKind::Arithmetic));
        // real division by zero is IEEE infinity, not an error
        let e2 = env(&[("x", Value::Real(1.0))]);
        assert_eq!(ev("0.0 < x / 0.0", &e2), TriVal::True);
    }

    #[test]
    fn unbound_names_error() {
        let e = env(&[]);
        assert_eq!(ev("ghost == 0", &e), TriVal::Err(EvalErrorKind::UnboundIdentifier));
    }

    #[test]
    fn observation_env_reads_params_then_fields_and_old() {
        use crate::minilang::points::ProgramPoint;
        let mut pre_state = BTreeMap::new();
        pre_state.insert("value".to_string(), Value::Real(0.0));
        let mut post_state = BTreeMap::new();
        post_state.insert("value".to_string(), Value::Real(2.5));
        let mut params = BTreeMap::new();
        params.insert("d".to_string(), Value::Real(2.5));
        let obs = Observation {
            point: ProgramPoint::MethodPost("add".into()),
            test_id: "t".into(),
            call_index: 1,
            pre_state,
            post_state,
            params,
            ret: Some(Value::Real(2.5)),
        };
        let f = parse_formula("value == old(value) + d && result == value").unwrap();
        assert_eq!(eval_formula(&f, &obs), TriVal::True);
    }
}
