//! Canonical form for assertions. Two formulas that normalize to the
//! same printed text are treated as the same candidate.
//!
//! Every rule here preserves three-valued semantics on every
//! environment, including ones where subterms error. That rules out
//! some classically valid rewrites: `p ==> p` and `t == t` are NOT
//! folded to true (they error when `t` errors), quantified formulas are
//! never dropped (the array lookup can error), and arithmetic is never
//! reassociated or reordered (float addition is not associative and int
//! overflow is observable). Literal arithmetic folds only when the
//! fold itself cannot error.

use super::ast::{ArithOp, CmpOp, Formula, Term};

/// The canonical text of the normalized formula. Candidate identity.
pub fn normalized_key(f: &Formula) -> String {
    normalize(f).print()
}

pub fn normalize(f: &Formula) -> Formula {
    match f {
        Formula::Lit(_) => f.clone(),
        Formula::BoolTerm(t) => Formula::BoolTerm(norm_term(t)),
        Formula::IsNan(t) => Formula::IsNan(norm_term(t)),
        Formula::Not(g) => norm_not(normalize(g)),
        Formula::And(..) => norm_nary(f, true),
        Formula::Or(..) => norm_nary(f, false),
        Formula::Implies(a, b) => {
            let a = normalize(a);
            let b = normalize(b);
            match (&a, &b) {
                (Formula::Lit(true), _) => b,
                (Formula::Lit(false), _) => Formula::Lit(true),
                (_, Formula::Lit(true)) => Formula::Lit(true),
                (_, Formula::Lit(false)) => norm_not(a),
                _ => Formula::Implies(Box::new(a), Box::new(b)),
            }
        }
        Formula::Cmp { op, lhs, rhs } => norm_cmp(*op, norm_term(lhs), norm_term(rhs)),
        Formula::Forall { var, array, body } => Formula::Forall {
            var: var.clone(),
            array: norm_term(array),
            body: Box::new(normalize(body)),
        },
        Formula::Exists { var, array, body } => Formula::Exists {
            var: var.clone(),
            array: norm_term(array),
            body: Box::new(normalize(body)),
        },
    }
}

fn norm_not(g: Formula) -> Formula {
    match g {
        Formula::Lit(b) => Formula::Lit(!b),
        Formula::Not(inner) => *inner,
        Formula::Cmp { op: CmpOp::Eq, lhs, rhs } => Formula::Cmp { op: CmpOp::Ne, lhs, rhs },
        Formula::Cmp { op: CmpOp::Ne, lhs, rhs } => Formula::Cmp { op: CmpOp::Eq, lhs, rhs },
        // ordered negation is NOT pushed through: !(a < b) and b <= a
        // disagree when a real side is nan
        g => Formula::Not(Box::new(g)),
    }
}

/// Flatten a same-connective tree, normalize the leaves, apply literal
/// absorption, sort by printed key, drop duplicates (`p && p` and `p`
/// agree in all three outcomes), and rebuild left-associated.
fn norm_nary(f: &Formula, is_and: bool) -> Formula {
    let mut leaves = Vec::new();
    flatten(f, is_and, &mut leaves);
    let mut keep: Vec<Formula> = Vec::new();
    for leaf in leaves {
        match leaf {
            Formula::Lit(b) => {
                if b == is_and {
                    continue; // neutral element
                }
                return Formula::Lit(!is_and); // absorbing element
            }
            other => keep.push(other),
        }
    }
    let mut keyed: Vec<(String, Formula)> = keep.into_iter().map(|g| (g.print(), g)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    let mut it = keyed.into_iter().map(|(_, g)| g);
    let Some(first) = it.next() else {
        return Formula::Lit(is_and);
    };
    it.fold(first, |acc, g| {
        if is_and {
            Formula::And(Box::new(acc), Box::new(g))
        } else {
            Formula::Or(Box::new(acc), Box::new(g))
        }
    })
}

fn flatten(f: &Formula, is_and: bool, out: &mut Vec<Formula>) {
    match (f, is_and) {
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => {
            flatten(a, is_and, out);
            flatten(b, is_and, out);
        }
        _ => out.push(normalize(f)),
    }
}

fn norm_cmp(op: CmpOp, lhs: Term, rhs: Term) -> Formula {
    // orient strictly: > and >= always rewrite to < and <=
    let (op, lhs, rhs) = match op {
        CmpOp::Gt => (CmpOp::Lt, rhs, lhs),
        CmpOp::Ge => (CmpOp::Le, rhs, lhs),
        op => (op, lhs, rhs),
    };
    // literal-literal comparisons fold (int == on nan-free ints, real
    // cmp per assertion semantics which the fold mirrors)
    if let (Some(l), Some(r)) = (lit_of(&lhs), lit_of(&rhs)) {
        if let Some(b) = fold_cmp(op, l, r) {
            return Formula::Lit(b);
        }
    }
    // symmetric ops get a canonical operand order
    let (lhs, rhs) = if matches!(op, CmpOp::Eq | CmpOp::Ne) && lhs.sort_key() > rhs.sort_key() {
        (rhs, lhs)
    } else {
        (lhs, rhs)
    };
    Formula::Cmp { op, lhs, rhs }
}

enum LitVal {
    Int(i64),
    Real(f64),
}

fn lit_of(t: &Term) -> Option<LitVal> {
    match t {
        Term::IntLit(v) => Some(LitVal::Int(*v)),
        Term::RealLit(v) => Some(LitVal::Real(*v)),
        _ => None,
    }
}

fn fold_cmp(op: CmpOp, l: LitVal, r: LitVal) -> Option<bool> {
    match (l, r) {
        (LitVal::Int(a), LitVal::Int(b)) => Some(match op {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }),
        (LitVal::Real(a), LitVal::Real(b)) => Some(match op {
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

fn norm_term(t: &Term) -> Term {
    match t {
        Term::IntLit(_) | Term::RealLit(_) | Term::Ident(_) | Term::Old(_) | Term::Result => t.clone(),
        Term::Idx { array, index } => Term::Idx {
            array: Box::new(norm_term(array)),
            index: Box::new(norm_term(index)),
        },
        Term::Len(a) => Term::Len(Box::new(norm_term(a))),
        Term::Neg(a) => {
            let a = norm_term(a);
            match a {
                // -MIN overflows at eval time, so leave that node alone
                Term::IntLit(v) if v != i64::MIN => Term::IntLit(-v),
                Term::RealLit(v) => Term::RealLit(-v),
                a => Term::Neg(Box::new(a)),
            }
        }
        Term::Arith { op, lhs, rhs } => {
            let l = norm_term(lhs);
            let r = norm_term(rhs);
            if let (Term::IntLit(a), Term::IntLit(b)) = (&l, &r) {
                let folded = match op {
                    ArithOp::Add => a.checked_add(*b),
                    ArithOp::Sub => a.checked_sub(*b),
                    ArithOp::Mul => a.checked_mul(*b),
                    ArithOp::Div => {
                        if *b == 0 {
                            None
                        } else {
                            a.checked_div(*b)
                        }
                    }
                };
                // a fold that would error must stay a runtime error
                if let Some(v) = folded {
                    return Term::IntLit(v);
                }
            } else if let (Term::RealLit(a), Term::RealLit(b)) = (&l, &r) {
                let v = match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => a * b,
                    ArithOp::Div => a / b,
                };
                // literals stay finite; 1.0 / 0.0 keeps its node and
                // produces its infinity at evaluation time instead
                if v.is_finite() {
                    return Term::RealLit(v);
                }
            }
            Term::Arith { op: *op, lhs: Box::new(l), rhs: Box::new(r) }
        }
        Term::Agg { kind, array } => Term::Agg { kind: *kind, array: Box::new(norm_term(array)) },
    }
}
