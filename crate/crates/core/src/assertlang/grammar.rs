//! Candidate vocabulary for one program point, harvested from both
//! program versions. Branch conditions become guard formulas, literals
//! seed the constant pools, and a small default pool is always present
//! so sparse programs still get usable candidates.

use std::collections::BTreeMap;

use super::ast::{CmpOp, Formula, Term};
use super::normalize::normalize;
use super::scope::{check_formula, PointScope};
use crate::minilang::ast::{BinOp, Block, Builtin, Expr, ExprKind, Stmt, StmtKind, UnOp, Unit};
use crate::values::real_cmp;

/// Upper bound on candidate size, counted in formula plus term nodes.
pub const MAX_NODES: usize = 13;

#[derive(Debug, Clone)]
pub struct Grammar {
    pub scope: PointScope,
    pub int_lits: Vec<i64>,
    /// Nan never appears here; isnan(t) is the only way to talk about it.
    pub real_lits: Vec<f64>,
    /// Branch conditions that typecheck at this point, closed under
    /// comparison-operator variation and old() substitution. Normalized,
    /// deduplicated, sorted by printed text.
    pub guards: Vec<Formula>,
    pub max_nodes: usize,
}

pub fn build_grammar(pre: &Unit, post: &Unit, scope: &PointScope) -> Grammar {
    let mut ints = vec![-1i64, 0, 1];
    let mut reals = vec![-1.0f64, 0.0, 1.0];
    let mut conds: Vec<Expr> = Vec::new();
    for unit in [pre, post] {
        harvest_unit(unit, &mut ints, &mut reals, &mut conds);
    }
    ints.sort_unstable();
    ints.dedup();
    reals.sort_by(|a, b| real_cmp(*a, *b));
    reals.dedup_by(|a, b| a.to_bits() == b.to_bits());

    let mut raw: Vec<Formula> = Vec::new();
    for cond in &conds {
        let Some(f) = expr_to_formula(cond) else { continue };
        match &f {
            Formula::Cmp { lhs, rhs, .. } => {
                let (l, r) = (lhs.clone(), rhs.clone());
                for g in [
                    Formula::Cmp { op: CmpOp::Lt, lhs: l.clone(), rhs: r.clone() },
                    Formula::Cmp { op: CmpOp::Le, lhs: l.clone(), rhs: r.clone() },
                    Formula::Cmp { op: CmpOp::Lt, lhs: r.clone(), rhs: l.clone() },
                    Formula::Cmp { op: CmpOp::Le, lhs: r.clone(), rhs: l.clone() },
                    Formula::Cmp { op: CmpOp::Eq, lhs: l.clone(), rhs: r.clone() },
                    Formula::Cmp { op: CmpOp::Ne, lhs: l, rhs: r },
                ] {
                    raw.push(g);
                }
            }
            _ => {
                raw.push(f.clone());
                raw.push(Formula::Not(Box::new(f)));
            }
        }
    }
    if scope.old_allowed {
        let with_old: Vec<Formula> = raw.iter().map(|f| formula_to_old(f, &scope.fields)).collect();
        raw.extend(with_old);
    }

    let mut guards: Vec<(String, Formula)> = Vec::new();
    for f in raw {
        if check_formula(scope, &f).is_err() {
            continue;
        }
        let n = normalize(&f);
        if matches!(n, Formula::Lit(_)) {
            continue;
        }
        guards.push((n.print(), n));
    }
    guards.sort_by(|a, b| a.0.cmp(&b.0));
    guards.dedup_by(|a, b| a.0 == b.0);

    Grammar {
        scope: scope.clone(),
        int_lits: ints,
        real_lits: reals,
        guards: guards.into_iter().map(|(_, f)| f).collect(),
        max_nodes: MAX_NODES,
    }
}

fn harvest_unit(u: &Unit, ints: &mut Vec<i64>, reals: &mut Vec<f64>, conds: &mut Vec<Expr>) {
    let ctor = u.effective_ctor();
    harvest_block(&ctor.body, ints, reals, conds);
    for m in &u.methods {
        harvest_block(&m.body, ints, reals, conds);
    }
}

fn harvest_block(b: &Block, ints: &mut Vec<i64>, reals: &mut Vec<f64>, conds: &mut Vec<Expr>) {
    for s in &b.stmts {
        harvest_stmt(s, ints, reals, conds);
    }
}

fn harvest_stmt(s: &Stmt, ints: &mut Vec<i64>, reals: &mut Vec<f64>, conds: &mut Vec<Expr>) {
    match &s.kind {
        StmtKind::Local { init, .. } => harvest_expr(init, ints, reals),
        StmtKind::Assign { value, .. } => harvest_expr(value, ints, reals),
        StmtKind::AssignElem { index, value, .. } => {
            harvest_expr(index, ints, reals);
            harvest_expr(value, ints, reals);
        }
        StmtKind::If { cond, then_blk, else_blk } => {
            conds.push(cond.clone());
            harvest_expr(cond, ints, reals);
            harvest_block(then_blk, ints, reals, conds);
            if let Some(e) = else_blk {
                harvest_block(e, ints, reals, conds);
            }
        }
        StmtKind::While { cond, body } => {
            conds.push(cond.clone());
            harvest_expr(cond, ints, reals);
            harvest_block(body, ints, reals, conds);
        }
        StmtKind::For { array, body, .. } => {
            harvest_expr(array, ints, reals);
            harvest_block(body, ints, reals, conds);
        }
        StmtKind::Return { value: Some(v) } => harvest_expr(v, ints, reals),
        StmtKind::Return { value: None } | StmtKind::Fail => {}
    }
}

fn harvest_expr(e: &Expr, ints: &mut Vec<i64>, reals: &mut Vec<f64>) {
    match &e.kind {
        ExprKind::IntLit(v) => ints.push(*v),
        ExprKind::RealLit(v) => {
            if v.is_finite() {
                reals.push(*v);
            }
        }
        ExprKind::BoolLit(_) | ExprKind::NanLit | ExprKind::Ident(_) => {}
        ExprKind::Index { array, index } => {
            harvest_expr(array, ints, reals);
            harvest_expr(index, ints, reals);
        }
        ExprKind::Unary { op: UnOp::Neg, operand } => {
            // a negated literal also contributes its signed value
            match &operand.kind {
                ExprKind::IntLit(v) => {
                    ints.push(*v);
                    ints.push(v.wrapping_neg());
                }
                ExprKind::RealLit(v) if v.is_finite() => {
                    reals.push(*v);
                    reals.push(-*v);
                }
                _ => harvest_expr(operand, ints, reals),
            }
        }
        ExprKind::Unary { operand, .. } => harvest_expr(operand, ints, reals),
        ExprKind::Binary { lhs, rhs, .. } => {
            harvest_expr(lhs, ints, reals);
            harvest_expr(rhs, ints, reals);
        }
        ExprKind::Call { args, .. } => {
            for a in args {
                harvest_expr(a, ints, reals);
            }
        }
        ExprKind::Paren(inner) => harvest_expr(inner, ints, reals),
    }
}

/// DL expression to assertion term. Locals, indexing, modulo, and the
/// numeric builtins have no assertion counterpart and return None;
/// locals are weeded out later by the scope check instead.
fn expr_to_term(e: &Expr) -> Option<Term> {
    match &e.kind {
        ExprKind::IntLit(v) => Some(Term::IntLit(*v)),
        ExprKind::RealLit(v) => {
            if v.is_finite() {
                Some(Term::RealLit(*v))
            } else {
                None
            }
        }
        ExprKind::NanLit | ExprKind::BoolLit(_) | ExprKind::Index { .. } => None,
        ExprKind::Ident(n) => Some(Term::Ident(n.clone())),
        ExprKind::Unary { op: UnOp::Neg, operand } => Some(Term::Neg(Box::new(expr_to_term(operand)?))),
        ExprKind::Unary { op: UnOp::Not, .. } => None,
        ExprKind::Binary { op, lhs, rhs } => {
            let op = match op {
                BinOp::Add => super::ast::ArithOp::Add,
                BinOp::Sub => super::ast::ArithOp::Sub,
                BinOp::Mul => super::ast::ArithOp::Mul,
                BinOp::Div => super::ast::ArithOp::Div,
                _ => return None,
            };
            Some(Term::Arith {
                op,
                lhs: Box::new(expr_to_term(lhs)?),
                rhs: Box::new(expr_to_term(rhs)?),
            })
        }
        ExprKind::Call { f: Builtin::Len, args } => Some(Term::Len(Box::new(expr_to_term(&args[0])?))),
        ExprKind::Call { .. } => None,
        ExprKind::Paren(inner) => expr_to_term(inner),
    }
}

fn expr_to_formula(e: &Expr) -> Option<Formula> {
    match &e.kind {
        ExprKind::Binary { op, lhs, rhs } if op.is_cmp() => {
            let cop = match op {
                BinOp::Lt => CmpOp::Lt,
                BinOp::Le => CmpOp::Le,
                BinOp::Gt => CmpOp::Gt,
                BinOp::Ge => CmpOp::Ge,
                BinOp::Eq => CmpOp::Eq,
                BinOp::Ne => CmpOp::Ne,
                _ => unreachable!(),
            };
            Some(Formula::Cmp {
                op: cop,
                lhs: expr_to_term(lhs)?,
                rhs: expr_to_term(rhs)?,
            })
        }
        ExprKind::Binary { op: BinOp::And, lhs, rhs } => Some(Formula::And(
            Box::new(expr_to_formula(lhs)?),
            Box::new(expr_to_formula(rhs)?),
        )),
        ExprKind::Binary { op: BinOp::Or, lhs, rhs } => Some(Formula::Or(
            Box::new(expr_to_formula(lhs)?),
            Box::new(expr_to_formula(rhs)?),
        )),
        ExprKind::Unary { op: UnOp::Not, operand } => Some(Formula::Not(Box::new(expr_to_formula(operand)?))),
        ExprKind::Paren(inner) => expr_to_formula(inner),
        ExprKind::Ident(n) => Some(Formula::BoolTerm(Term::Ident(n.clone()))),
        _ => None,
    }
}

/// The same condition stated about the entry state: every field read
/// becomes old(field). Parameters stay as they are (they do not change
/// during a call as far as observations go).
fn formula_to_old(f: &Formula, fields: &BTreeMap<String, crate::values::Ty>) -> Formula {
    match f {
        Formula::Lit(_) => f.clone(),
        Formula::BoolTerm(t) => Formula::BoolTerm(term_to_old(t, fields)),
        Formula::IsNan(t) => Formula::IsNan(term_to_old(t, fields)),
        Formula::Not(g) => Formula::Not(Box::new(formula_to_old(g, fields))),
        Formula::And(a, b) => Formula::And(
            Box::new(formula_to_old(a, fields)),
            Box::new(formula_to_old(b, fields)),
        ),
        Formula::Or(a, b) => Formula::Or(
            Box::new(formula_to_old(a, fields)),
            Box::new(formula_to_old(b, fields)),
        ),
        Formula::Implies(a, b) => Formula::Implies(
            Box::new(formula_to_old(a, fields)),
            Box::new(formula_to_old(b, fields)),
        ),
        Formula::Cmp { op, lhs, rhs } => Formula::Cmp {
            op: *op,
            lhs: term_to_old(lhs, fields),
            rhs: term_to_old(rhs, fields),
        },
        Formula::Forall { var, array, body } => Formula::Forall {
            var: var.clone(),
            array: term_to_old(array, fields),
            body: Box::new(formula_to_old(body, fields)),
        },
        Formula::Exists { var, array, body } => Formula::Exists {
            var: var.clone(),
            array: term_to_old(array, fields),
            body: Box::new(formula_to_old(body, fields)),
        },
    }
}

fn term_to_old(t: &Term, fields: &BTreeMap<String, crate::values::Ty>) -> Term {
    match t {
        Term::Ident(n) if fields.contains_key(n) => Term::Old(n.clone()),
        Term::IntLit(_) | Term::RealLit(_) | Term::Ident(_) | Term::Old(_) | Term::Result => t.clone(),
        Term::Idx { array, index } => Term::Idx {
            array: Box::new(term_to_old(array, fields)),
            index: Box::new(term_to_old(index, fields)),
        },
        Term::Len(a) => Term::Len(Box::new(term_to_old(a, fields))),
        Term::Neg(a) => Term::Neg(Box::new(term_to_old(a, fields))),
        Term::Arith { op, lhs, rhs } => Term::Arith {
            op: *op,
            lhs: Box::new(term_to_old(lhs, fields)),
            rhs: Box::new(term_to_old(rhs, fields)),
        },
        Term::Agg { kind, array } => Term::Agg { kind: *kind, array: Box::new(term_to_old(array, fields)) },
    }
}
