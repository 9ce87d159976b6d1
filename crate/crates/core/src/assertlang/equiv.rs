//! Bounded semantic comparison. Two assertions are bounded-equivalent
//! when they agree in outcome class (true / false / error) on every
//! environment drawn from small value domains. This is a cheap stand-in
//! for real equivalence: sound for distinguishing, heuristic for
//! merging, and entirely deterministic.

use std::ops::RangeInclusive;

use super::ast::{free_vars, Formula, FreeVar};
use super::eval::{eval_formula, MapEnv, TriVal};
use super::scope::{scope_slots, PointScope};
use crate::values::{real_cmp, Ty, Value};

#[derive(Debug, Clone)]
pub struct DomainConfig {
    pub int_domain: Vec<i64>,
    pub real_domain: Vec<f64>,
    pub array_lens: RangeInclusive<usize>,
    /// Refuse enumerations bigger than this many environments.
    pub env_cap: u64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            int_domain: vec![-2, -1, 0, 1, 2],
            real_domain: vec![-1.5, 0.0, 1.0, f64::NAN],
            array_lens: 0..=3,
            env_cap: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bounded domain too large: {envs} environments exceed the cap of {cap}")]
pub struct DomainTooLarge {
    pub envs: u128,
    pub cap: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Equivalence {
    Equal,
    Differs {
        /// Rendering of the first environment the two formulas disagree on.
        witness: String,
        lhs: &'static str,
        rhs: &'static str,
    },
}

fn outcome_name(v: TriVal) -> &'static str {
    match v {
        TriVal::True => "true",
        TriVal::False => "false",
        TriVal::Err(_) => "error",
    }
}

/// All domain values for one slot type, in a fixed order: ints
/// ascending, reals by total order (nan last), bools false then true,
/// arrays by length then lexicographically.
fn values_for(ty: Ty, d: &DomainConfig) -> Vec<Value> {
    let mut ints = d.int_domain.clone();
    ints.sort_unstable();
    ints.dedup();
    let mut reals = d.real_domain.clone();
    reals.sort_by(|a, b| real_cmp(*a, *b));
    reals.dedup_by(|a, b| a.to_bits() == b.to_bits());
    match ty {
        Ty::Int => ints.into_iter().map(Value::Int).collect(),
        Ty::Real => reals.into_iter().map(Value::Real).collect(),
        Ty::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Ty::IntArray => enumerate_arrays(&ints, d.array_lens.clone())
            .into_iter()
            .map(Value::IntArray)
            .collect(),
        Ty::RealArray => enumerate_arrays(&reals, d.array_lens.clone())
            .into_iter()
            .map(Value::RealArray)
            .collect(),
    }
}

fn enumerate_arrays<T: Copy>(elems: &[T], lens: RangeInclusive<usize>) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    for len in lens {
        if len == 0 {
            out.push(Vec::new());
            continue;
        }
        if elems.is_empty() {
            continue;
        }
        let mut idx = vec![0usize; len];
        'gen: loop {
            out.push(idx.iter().map(|i| elems[*i]).collect());
            // odometer with the last position as least significant digit
            let mut pos = len;
            loop {
                if pos == 0 {
                    break 'gen;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < elems.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    out
}

struct Enumeration {
    slots: Vec<(FreeVar, Vec<Value>)>,
    total: u128,
}

fn build_enumeration(
    scope: &PointScope,
    only: Option<&std::collections::BTreeSet<FreeVar>>,
    d: &DomainConfig,
) -> Result<Enumeration, DomainTooLarge> {
    let mut slots = Vec::new();
    let mut total: u128 = 1;
    for (fv, ty) in scope_slots(scope) {
        if let Some(keep) = only {
            if !keep.contains(&fv) {
                continue;
            }
        }
        let vals = values_for(ty, d);
        total = total.saturating_mul(vals.len() as u128);
        slots.push((fv, vals));
    }
    if total > d.env_cap as u128 {
        return Err(DomainTooLarge { envs: total, cap: d.env_cap });
    }
    Ok(Enumeration { slots, total })
}

fn env_at(e: &Enumeration, mut index: u128) -> MapEnv {
    let mut env = MapEnv::default();
    // least significant digit is the LAST slot, so earlier slots vary
    // slowest and the enumeration reads like nested loops
    for (fv, vals) in e.slots.iter().rev() {
        let n = vals.len() as u128;
        let digit = (index % n) as usize;
        index /= n;
        env.vals.insert(fv.clone(), vals[digit].clone());
    }
    env
}

fn render_env(env: &MapEnv) -> String {
    let mut parts = Vec::new();
    for (fv, v) in &env.vals {
        parts.push(format!("{}={}", fv.label(), v.canon()));
    }
    parts.join(" ")
}

/// Outcome vector over the full scope enumeration. Formulas with equal
/// signatures behave identically on the bounded domain; the byte per
/// environment is 0 false, 1 true, 2 error (kinds collapsed).
pub fn signature(f: &Formula, scope: &PointScope, d: &DomainConfig) -> Result<Vec<u8>, DomainTooLarge> {
    let e = build_enumeration(scope, None, d)?;
    let mut out = Vec::with_capacity(e.total as usize);
    for i in 0..e.total {
        let env = env_at(&e, i);
        out.push(eval_formula(f, &env).outcome_byte());
    }
    Ok(out)
}

/// Compare two formulas over the union of their free variables only,
/// which keeps the enumeration small when they touch few names.
pub fn bounded_equiv(
    a: &Formula,
    b: &Formula,
    scope: &PointScope,
    d: &DomainConfig,
) -> Result<Equivalence, DomainTooLarge> {
    let mut fv = free_vars(a);
    fv.extend(free_vars(b));
    let e = build_enumeration(scope, Some(&fv), d)?;
    for i in 0..e.total {
        let env = env_at(&e, i);
        let va = eval_formula(a, &env);
        let vb = eval_formula(b, &env);
        if va.outcome_byte() != vb.outcome_byte() {
            return Ok(Equivalence::Differs {
                witness: render_env(&env),
                lhs: outcome_name(va),
                rhs: outcome_name(vb),
            });
        }
    }
    Ok(Equivalence::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertlang::parser::parse_formula;
    use crate::assertlang::scope::PointScope;
    use crate::minilang::points::ProgramPoint;
    use std::collections::BTreeMap;

    fn scope_xy() -> PointScope {
        let mut fields = BTreeMap::new();
        fields.insert("x".to_string(), Ty::Int);
        fields.insert("y".to_string(), Ty::Int);
        PointScope {
            point: ProgramPoint::ClassInvariant,
            fields,
            params: BTreeMap::new(),
            result: None,
            old_allowed: false,
        }
    }

    #[test]
    fn array_enumeration_counts() {
        let d = DomainConfig::default();
        assert_eq!(values_for(Ty::Int, &d).len(), 5);
        assert_eq!(values_for(Ty::Real, &d).len(), 4);
        // 1 + 5 + 25 + 125
        assert_eq!(values_for(Ty::IntArray, &d).len(), 156);
        // 1 + 4 + 16 + 64
        assert_eq!(values_for(Ty::RealArray, &d).len(), 85);
    }

    #[test]
    fn equivalent_and_distinct_pairs() {
        let s = scope_xy();
        let d = DomainConfig::default();
        let a = parse_formula("x < y").unwrap();
        let b = parse_formula("!(y <= x)").unwrap();
        // int ordered negation is a real equivalence
        assert_eq!(bounded_equiv(&a, &b, &s, &d).unwrap(), Equivalence::Equal);
        let c = parse_formula("x <= y").unwrap();
        match bounded_equiv(&a, &c, &s, &d).unwrap() {
            Equivalence::Differs { witness, lhs, rhs } => {
                assert_eq!(lhs, "false");
                assert_eq!(rhs, "true");
                assert!(witness.contains("x=") && witness.contains("y="), "{witness}");
            }
            other => panic!("expected a disagreement, got {other:?}"),
        }
    }

    #[test]
    fn signature_equality_matches_bounded_equiv() {
        let s = scope_xy();
        let d = DomainConfig::default();
        let a = parse_formula("x == y").unwrap();
        let b = parse_formula("y == x").unwrap();
        assert_eq!(signature(&a, &s, &d).unwrap(), signature(&b, &s, &d).unwrap());
        assert_eq!(signature(&a, &s, &d).unwrap().len(), 25);
    }

    #[test]
    fn cap_is_enforced() {
        let s = scope_xy();
        let d = DomainConfig { env_cap: 10, ..DomainConfig::default() };
        let a = parse_formula("x == y").unwrap();
        let err = signature(&a, &s, &d).unwrap_err();
        assert_eq!(err.envs, 25);
    }

    #[test]
    fn error_kinds_collapse_in_signatures() {
        // both formulas error on every env (unbound name), one via
        // arithmetic on an overflow... keep it simple: two different
        // unbound names still error identically
        let s = scope_xy();
        let d = DomainConfig::default();
        let a = parse_formula("ghost == 0").unwrap();
        let b = parse_formula("phantom == 1").unwrap();
        assert_eq!(bounded_equiv(&a, &b, &s, &d).unwrap(), Equivalence::Equal);
    }
}
