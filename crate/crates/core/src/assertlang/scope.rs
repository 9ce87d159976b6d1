//! What an assertion may mention at a given program point, and the typing
//! rules that keep candidate formulas well-formed by construction.

use std::collections::BTreeMap;

use super::ast::{CmpOp, Formula, Term};
use crate::minilang::ast::Unit;
use crate::minilang::points::ProgramPoint;
use crate::values::Ty;

/// The vocabulary of one program point. Fields are the union over both
/// versions (on a type clash the post version wins); params/result exist
/// only at method postconditions, where `old(field)` is also available.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointScope {
    pub point: ProgramPoint,
    pub fields: BTreeMap<String, Ty>,
    pub params: BTreeMap<String, Ty>,
    pub result: Option<Ty>,
    pub old_allowed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScopeError {
    #[error("point {0} does not exist in both versions")]
    UnknownPoint(String),
}

/// Builds the scope of a shared point from the two versions.
pub fn scope_for_point(pre: &Unit, post: &Unit, point: &ProgramPoint) -> Result<PointScope, ScopeError> {
    let mut fields = BTreeMap::new();
    for f in &pre.fields {
        fields.insert(f.name.clone(), f.ty);
    }
    for f in &post.fields {
        fields.insert(f.name.clone(), f.ty); // post wins on clash
    }
    match point {
        ProgramPoint::ClassInvariant => Ok(PointScope {
            point: point.clone(),
            fields,
            params: BTreeMap::new(),
            result: None,
            old_allowed: false,
        }),
        ProgramPoint::MethodPost(name) => {
            let m_pre = if name == "ctor" { Some(pre.effective_ctor()) } else { pre.method(name).cloned() };
            let m_post = if name == "ctor" { Some(post.effective_ctor()) } else { post.method(name).cloned() };
            let (Some(mp), Some(mq)) = (m_pre, m_post) else {
                return Err(ScopeError::UnknownPoint(point.label()));
            };
            if mp.signature() != mq.signature() {
                return Err(ScopeError::UnknownPoint(point.label()));
            }
            let params = mq.params.iter().map(|p| (p.name.clone(), p.ty)).collect();
            Ok(PointScope {
                point: point.clone(),
                fields,
                params,
                result: mq.ret,
                old_allowed: true,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unknown identifier `{0}`")]
    Unknown(String),
    #[error("old() is not available at this point")]
    OldNotAllowed,
    #[error("old({0}) must name a field")]
    OldNotAField(String),
    #[error("result is not available at this point")]
    NoResult,
    #[error("expected {expected}, got {got}")]
    Mismatch { expected: String, got: Ty },
    #[error("array index must be the quantified variable of that array")]
    BadIndex,
    #[error("quantified variable `{0}` shadows an existing name")]
    QuantShadow(String),
    #[error("comparison operands must both be int or both real")]
    BadCmp,
    #[error("equality is numeric-only; use the bool term directly")]
    BoolEq,
    #[error("`{0}` is not a bool atom")]
    NotBool(String),
}

struct Bound {
    var: String,
    /// Canonical text of the array term the variable ranges over.
    array_key: String,
    elem: Ty,
}

/// Type of a term under the scope, or why it has none. The full formula
/// check is `check_formula`.
pub fn ty_term(scope: &PointScope, t: &Term) -> Result<Ty, TypeError> {
    ty_term_in(scope, t, &[])
}

fn ty_term_in(scope: &PointScope, t: &Term, bound: &[Bound]) -> Result<Ty, TypeError> {
    match t {
        Term::IntLit(_) => Ok(Ty::Int),
        Term::RealLit(_) => Ok(Ty::Real),
        Term::Ident(n) => {
            if let Some(b) = bound.iter().rev().find(|b| &b.var == n) {
                // the variable itself is the index
                let _ = b;
                return Ok(Ty::Int);
            }
            scope
                .params
                .get(n)
                .or_else(|| scope.fields.get(n))
                .copied()
                .ok_or_else(|| TypeError::Unknown(n.clone()))
        }
        Term::Old(n) => {
            if !scope.old_allowed {
                return Err(TypeError::OldNotAllowed);
            }
            scope.fields.get(n).copied().ok_or_else(|| TypeError::OldNotAField(n.clone()))
        }
        Term::Result => scope.result.ok_or(TypeError::NoResult),
        Term::Idx { array, index } => {
            let at = ty_term_in(scope, array, bound)?;
            let Some(elem) = at.elem() else {
                return Err(TypeError::Mismatch { expected: "an array".to_string(), got: at });
            };
            // the index must be the variable bound over this very array,
            // which keeps every access in bounds by construction
            let Term::Ident(ix) = index.as_ref() else {
                return Err(TypeError::BadIndex);
            };
            let arr_key = array.print();
            match bound.iter().rev().find(|b| &b.var == ix) {
                Some(b) if b.array_key == arr_key && b.elem == elem => Ok(elem),
                _ => Err(TypeError::BadIndex),
            }
        }
        Term::Len(a) => {
            let at = ty_term_in(scope, a, bound)?;
            if at.is_array() {
                Ok(Ty::Int)
            } else {
                Err(TypeError::Mismatch { expected: "an array".to_string(), got: at })
            }
        }
        Term::Neg(a) => {
            let t = ty_term_in(scope, a, bound)?;
            if t == Ty::Int || t == Ty::Real {
                Ok(t)
            } else {
                Err(TypeError::Mismatch { expected: "a number".to_string(), got: t })
            }
        }
        Term::Arith { op, lhs, rhs } => {
            let lt = ty_term_in(scope, lhs, bound)?;
            let rt = ty_term_in(scope, rhs, bound)?;
            let _ = op;
            if lt == rt && (lt == Ty::Int || lt == Ty::Real) {
                Ok(lt)
            } else {
                Err(TypeError::Mismatch { expected: format!("both {lt}"), got: rt })
            }
        }
        Term::Agg { kind, array } => {
            let at = ty_term_in(scope, array, bound)?;
            let _ = kind;
            match at.elem() {
                Some(e) => Ok(e),
                None => Err(TypeError::Mismatch { expected: "an array".to_string(), got: at }),
            }
        }
    }
}

pub fn check_formula(scope: &PointScope, f: &Formula) -> Result<(), TypeError> {
    check_in(scope, f, &mut Vec::new())
}

fn check_in(scope: &PointScope, f: &Formula, bound: &mut Vec<Bound>) -> Result<(), TypeError> {
    match f {
        Formula::Lit(_) => Ok(()),
        Formula::BoolTerm(t) => {
            let ty = ty_term_in(scope, t, bound)?;
            if ty == Ty::Bool {
                Ok(())
            } else {
                Err(TypeError::NotBool(t.print()))
            }
        }
        Formula::IsNan(t) => {
            let ty = ty_term_in(scope, t, bound)?;
            if ty == Ty::Real {
                Ok(())
            } else {
                Err(TypeError::Mismatch { expected: "real".to_string(), got: ty })
            }
        }
        Formula::Not(g) => check_in(scope, g, bound),
        Formula::Cmp { op, lhs, rhs } => {
            let lt = ty_term_in(scope, lhs, bound)?;
            let rt = ty_term_in(scope, rhs, bound)?;
            if lt != rt {
                return Err(TypeError::BadCmp);
            }
            match lt {
                Ty::Int | Ty::Real => Ok(()),
                Ty::Bool if matches!(op, CmpOp::Eq | CmpOp::Ne) => Err(TypeError::BoolEq),
                _ => Err(TypeError::BadCmp),
            }
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            check_in(scope, a, bound)?;
            check_in(scope, b, bound)
        }
        Formula::Forall { var, array, body } | Formula::Exists { var, array, body } => {
            let at = ty_term_in(scope, array, bound)?;
            let Some(elem) = at.elem() else {
                return Err(TypeError::Mismatch { expected: "an array".to_string(), got: at });
            };
            let shadows = scope.fields.contains_key(var)
                || scope.params.contains_key(var)
                || bound.iter().any(|b| &b.var == var)
                || var == "result";
            if shadows {
                return Err(TypeError::QuantShadow(var.clone()));
            }
            bound.push(Bound { var: var.clone(), array_key: array.print(), elem });
            let r = check_in(scope, body, bound);
            bound.pop();
            r
        }
    }
}

/// All environment slots of the scope in canonical order: current fields,
/// old fields (when allowed), params, result. This is the enumeration
/// order for behavior signatures.
pub fn scope_slots(scope: &PointScope) -> Vec<(super::ast::FreeVar, Ty)> {
    use super::ast::FreeVar;
    let mut out = Vec::new();
    for (n, t) in &scope.fields {
        out.push((FreeVar::Cur(n.clone()), *t));
    }
    if scope.old_allowed {
        for (n, t) in &scope.fields {
            out.push((FreeVar::Old(n.clone()), *t));
        }
    }
    for (n, t) in &scope.params {
        out.push((FreeVar::Cur(n.clone()), *t));
    }
    if let Some(rt) = scope.result {
        out.push((FreeVar::Result, rt));
    }
    out
}
