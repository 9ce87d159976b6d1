//! Mutant enumeration. Sites are visited in AST preorder (ctor first,
//! then methods in declaration order); at each site the variants follow a
//! fixed operator table, so the mutant list and every id are stable
//! across runs.
//!
//! Operator tables:
//!   AOR  arithmetic op -> each other member of [+, -, *, /, %]
//!   ROR  relational op -> each other member of [<, <=, >, >=, ==, !=]
//!   LOR  && <-> ||
//!   CRP  int c -> c+1, c-1, 0; real c -> c+1.0, c-1.0, 0.0; bool c -> !c
//!   SDL  delete one assignment or array-element assignment
//!   NEG  wrap an if/while condition in `!`
//!
//! The variant index is the replacement's position in the table above
//! (for CRP: 0, 1, 2 in listed order; for SDL and NEG: 0).

use serde::{Deserialize, Serialize};

use crate::minilang::ast::{BinOp, Block, Expr, ExprKind, Method, Stmt, StmtKind, UnOp, Unit};
use crate::minilang::printer::{print_expr, print_unit};
use crate::minilang::typecheck::check_unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MutOp {
    Aor,
    Ror,
    Lor,
    Crp,
    Sdl,
    Neg,
}

impl MutOp {
    pub fn as_str(self) -> &'static str {
        match self {
            MutOp::Aor => "AOR",
            MutOp::Ror => "ROR",
            MutOp::Lor => "LOR",
            MutOp::Crp => "CRP",
            MutOp::Sdl => "SDL",
            MutOp::Neg => "NEG",
        }
    }

    pub fn all() -> [MutOp; 6] {
        [MutOp::Aor, MutOp::Ror, MutOp::Lor, MutOp::Crp, MutOp::Sdl, MutOp::Neg]
    }
}

/// One concrete edit, applicable at a path.
#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    ReplaceOp(BinOp),
    ReplaceLit(ExprKind),
    DeleteStmt,
    NegateCond,
}

/// A single-edit variant of a unit. Identity is (operator, method, path,
/// variant); the path addresses a node inside the method body (statement
/// index, then child indices).
#[derive(Debug, Clone)]
pub struct Mutant {
    pub op: MutOp,
    pub method: String,
    pub path: Vec<usize>,
    pub variant: u32,
    pub edit: Edit,
    /// Short human-readable rendering of the change.
    pub change: String,
    pub unit: Unit,
}

impl Mutant {
    pub fn id(&self) -> String {
        let p: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        format!("{}@{}:{}#{}", self.op.as_str(), self.method, p.join("."), self.variant)
    }
}

const AOR_TABLE: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem];
const ROR_TABLE: [BinOp; 6] = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne];
const LOR_TABLE: [BinOp; 2] = [BinOp::And, BinOp::Or];

struct RawMutant {
    op: MutOp,
    method: String,
    path: Vec<usize>,
    variant: u32,
    edit: Edit,
    change: String,
}

/// All mutants of `unit` under the selected operators, preorder, with
/// type-check failures and no-op edits dropped. `ops` empty means all.
pub fn generate_mutants(unit: &Unit, ops: &[MutOp]) -> Vec<Mutant> {
    let ops: Vec<MutOp> = if ops.is_empty() { MutOp::all().to_vec() } else { ops.to_vec() };
    let mut raw = Vec::new();
    if let Some(ctor) = &unit.ctor {
        emit_method(ctor, &ops, &mut raw);
    }
    for m in &unit.methods {
        emit_method(m, &ops, &mut raw);
    }

    let original_text = print_unit(unit);
    let mut seen_texts = std::collections::BTreeSet::new();
    seen_texts.insert(original_text);
    let mut out = Vec::new();
    for r in raw {
        let mut mutated = unit.clone();
        if apply_edit(&mut mutated, &r.method, &r.path, &r.edit).is_none() {
            continue;
        }
        let text = print_unit(&mutated);
        // drops both edits that reproduce the original and duplicates of
        // an earlier mutant (CRP can emit the same constant twice)
        if !seen_texts.insert(text) {
            continue;
        }
        if check_unit(&mutated).is_err() {
            continue;
        }
        out.push(Mutant {
            op: r.op,
            method: r.method,
            path: r.path,
            variant: r.variant,
            edit: r.edit,
            change: r.change,
            unit: mutated,
        });
    }
    out
}

fn emit_method(m: &Method, ops: &[MutOp], out: &mut Vec<RawMutant>) {
    let mut path = Vec::new();
    emit_block(&m.body, &m.name, ops, &mut path, out);
}

fn emit_block(
    b: &Block,
    method: &str,
    ops: &[MutOp],
    path: &mut Vec<usize>,
    out: &mut Vec<RawMutant>,
) {
    for (i, stmt) in b.stmts.iter().enumerate() {
        path.push(i);
        emit_stmt(stmt, method, ops, path, out);
        path.pop();
    }
}

fn emit_stmt(
    s: &Stmt,
    method: &str,
    ops: &[MutOp],
    path: &mut Vec<usize>,
    out: &mut Vec<RawMutant>,
) {
    match &s.kind {
        StmtKind::Local { init, .. } => {
            path.push(0);
            emit_expr(init, method, ops, path, out);
            path.pop();
        }
        StmtKind::Assign { name, value } => {
            if ops.contains(&MutOp::Sdl) {
                out.push(RawMutant {
                    op: MutOp::Sdl,
                    method: method.to_string(),
                    path: path.clone(),
                    variant: 0,
                    edit: Edit::DeleteStmt,
                    change: format!("delete `{name} := {};`", print_expr(value)),
                });
            }
            path.push(0);
            emit_expr(value, method, ops, path, out);
            path.pop();
        }
        StmtKind::AssignElem { array, index, value } => {
            if ops.contains(&MutOp::Sdl) {
                out.push(RawMutant {
                    op: MutOp::Sdl,
                    method: method.to_string(),
                    path: path.clone(),
                    variant: 0,
                    edit: Edit::DeleteStmt,
                    change: format!(
                        "delete `{array}[{}] := {};`",
                        print_expr(index),
                        print_expr(value)
                    ),
                });
            }
            path.push(0);
            emit_expr(index, method, ops, path, out);
            path.pop();
            path.push(1);
            emit_expr(value, method, ops, path, out);
            path.pop();
        }
        StmtKind::If { cond, then_blk, else_blk } => {
            emit_neg(cond, method, ops, path, out);
            path.push(0);
            emit_expr(cond, method, ops, path, out);
            path.pop();
            path.push(1);
            emit_block(then_blk, method, ops, path, out);
            path.pop();
            if let Some(e) = else_blk {
                path.push(2);
                emit_block(e, method, ops, path, out);
                path.pop();
            }
        }
        StmtKind::While { cond, body } => {
            emit_neg(cond, method, ops, path, out);
            path.push(0);
            emit_expr(cond, method, ops, path, out);
            path.pop();
            path.push(1);
            emit_block(body, method, ops, path, out);
            path.pop();
        }
        StmtKind::For { array, body, .. } => {
            path.push(0);
            emit_expr(array, method, ops, path, out);
            path.pop();
            path.push(1);
            emit_block(body, method, ops, path, out);
            path.pop();
        }
        StmtKind::Return { value: Some(v) } => {
            path.push(0);
            emit_expr(v, method, ops, path, out);
            path.pop();
        }
        StmtKind::Return { value: None } | StmtKind::Fail => {}
    }
}

fn emit_neg(
    cond: &Expr,
    method: &str,
    ops: &[MutOp],
    path: &mut Vec<usize>,
    out: &mut Vec<RawMutant>,
) {
    if !ops.contains(&MutOp::Neg) {
        return;
    }
    let mut p = path.clone();
    p.push(0);
    out.push(RawMutant {
        op: MutOp::Neg,
        method: method.to_string(),
        path: p,
        variant: 0,
        edit: Edit::NegateCond,
        change: format!("`{}` -> `!({})`", print_expr(cond), print_expr(cond)),
    });
}

fn emit_expr(
    e: &Expr,
    method: &str,
    ops: &[MutOp],
    path: &mut Vec<usize>,
    out: &mut Vec<RawMutant>,
) {
    match &e.kind {
        ExprKind::Binary { op, lhs, rhs } => {
            let table: Option<(MutOp, &[BinOp])> = if op.is_arith() {
                Some((MutOp::Aor, &AOR_TABLE))
            } else if op.is_cmp() {
                Some((MutOp::Ror, &ROR_TABLE))
            } else {
                Some((MutOp::Lor, &LOR_TABLE))
            };
            if let Some((mop, table)) = table {
                if ops.contains(&mop) {
                    for (vi, alt) in table.iter().enumerate() {
                        if alt == op {
                            continue;
                        }
                        out.push(RawMutant {
                            op: mop,
                            method: method.to_string(),
                            path: path.clone(),
                            variant: vi as u32,
                            edit: Edit::ReplaceOp(*alt),
                            change: format!("`{}` -> `{}`", op.as_str(), alt.as_str()),
                        });
                    }
                }
            }
            path.push(0);
            emit_expr(lhs, method, ops, path, out);
            path.pop();
            path.push(1);
            emit_expr(rhs, method, ops, path, out);
            path.pop();
        }
        ExprKind::IntLit(c) => {
            if ops.contains(&MutOp::Crp) {
                let variants = [c.checked_add(1), c.checked_sub(1), Some(0)];
                for (vi, v) in variants.iter().enumerate() {
                    if let Some(v) = v {
                        out.push(RawMutant {
                            op: MutOp::Crp,
                            method: method.to_string(),
                            path: path.clone(),
                            variant: vi as u32,
                            edit: Edit::ReplaceLit(ExprKind::IntLit(*v)),
                            change: format!("`{c}` -> `{v}`"),
                        });
                    }
                }
            }
        }
        ExprKind::RealLit(c) => {
            if ops.contains(&MutOp::Crp) {
                for (vi, v) in [c + 1.0, c - 1.0, 0.0].iter().enumerate() {
                    if !v.is_finite() {
                        continue;
                    }
                    out.push(RawMutant {
                        op: MutOp::Crp,
                        method: method.to_string(),
                        path: path.clone(),
                        variant: vi as u32,
                        edit: Edit::ReplaceLit(ExprKind::RealLit(*v)),
                        change: format!("`{c:?}` -> `{v:?}`"),
                    });
                }
            }
        }
        ExprKind::BoolLit(b) => {
            if ops.contains(&MutOp::Crp) {
                out.push(RawMutant {
                    op: MutOp::Crp,
                    method: method.to_string(),
                    path: path.clone(),
                    variant: 0,
                    edit: Edit::ReplaceLit(ExprKind::BoolLit(!b)),
                    change: format!("`{b}` -> `{}`", !b),
                });
            }
        }
        ExprKind::Index { array, index } => {
            path.push(0);
            emit_expr(array, method, ops, path, out);
            path.pop();
            path.push(1);
            emit_expr(index, method, ops, path, out);
            path.pop();
        }
        ExprKind::Unary { operand, .. } | ExprKind::Paren(operand) => {
            path.push(0);
            emit_expr(operand, method, ops, path, out);
            path.pop();
        }
        ExprKind::Call { args, .. } => {
            for (i, a) in args.iter().enumerate() {
                path.push(i);
                emit_expr(a, method, ops, path, out);
                path.pop();
            }
        }
        ExprKind::NanLit | ExprKind::Ident(_) => {}
    }
}

/// Applies `edit` at `path` inside `method`'s body. None when the path
/// does not address a node the edit fits (a transplant onto a diverged
/// tree).
pub fn apply_edit(unit: &mut Unit, method: &str, path: &[usize], edit: &Edit) -> Option<()> {
    let m = if method == "ctor" {
        unit.ctor.as_mut()?
    } else {
        unit.methods.iter_mut().find(|m| m.name == method)?
    };
    edit_block(&mut m.body, path, edit)
}

fn edit_block(b: &mut Block, path: &[usize], edit: &Edit) -> Option<()> {
    let (&i, rest) = path.split_first()?;
    if i >= b.stmts.len() {
        return None;
    }
    if rest.is_empty() {
        if let Edit::DeleteStmt = edit {
            match b.stmts[i].kind {
                StmtKind::Assign { .. } | StmtKind::AssignElem { .. } => {
                    b.stmts.remove(i);
                    return Some(());
                }
                _ => return None,
            }
        }
        return None;
    }
    edit_stmt(&mut b.stmts[i], rest, edit)
}

fn edit_stmt(s: &mut Stmt, path: &[usize], edit: &Edit) -> Option<()> {
    let (&i, rest) = path.split_first()?;
    match &mut s.kind {
        StmtKind::Local { init, .. } if i == 0 => edit_expr(init, rest, edit),
        StmtKind::Assign { value, .. } if i == 0 => edit_expr(value, rest, edit),
        StmtKind::AssignElem { index, .. } if i == 0 => edit_expr(index, rest, edit),
        StmtKind::AssignElem { value, .. } if i == 1 => edit_expr(value, rest, edit),
        StmtKind::If { cond, .. } if i == 0 => edit_expr(cond, rest, edit),
        StmtKind::If { then_blk, .. } if i == 1 => edit_block(then_blk, rest, edit),
        StmtKind::If { else_blk: Some(e), .. } if i == 2 => edit_block(e, rest, edit),
        StmtKind::While { cond, .. } if i == 0 => edit_expr(cond, rest, edit),
        StmtKind::While { body, .. } if i == 1 => edit_block(body, rest, edit),
        StmtKind::For { array, .. } if i == 0 => edit_expr(array, rest, edit),
        StmtKind::For { body, .. } if i == 1 => edit_block(body, rest, edit),
        StmtKind::Return { value: Some(v) } if i == 0 => edit_expr(v, rest, edit),
        _ => None,
    }
}

fn edit_expr(e: &mut Expr, path: &[usize], edit: &Edit) -> Option<()> {
    if path.is_empty() {
        match edit {
            Edit::ReplaceOp(new_op) => {
                if let ExprKind::Binary { op, .. } = &mut e.kind {
                    *op = *new_op;
                    return Some(());
                }
                None
            }
            Edit::ReplaceLit(kind) => {
                let fits = matches!(
                    (&e.kind, kind),
                    (ExprKind::IntLit(_), ExprKind::IntLit(_))
                        | (ExprKind::RealLit(_), ExprKind::RealLit(_))
                        | (ExprKind::BoolLit(_), ExprKind::BoolLit(_))
                );
                if fits {
                    e.kind = kind.clone();
                    return Some(());
                }
                None
            }
            Edit::NegateCond => {
                let old = e.clone();
                e.kind = ExprKind::Unary {
                    op: UnOp::Not,
                    operand: Box::new(Expr { kind: ExprKind::Paren(Box::new(old)), span: e.span }),
                };
                Some(())
            }
            Edit::DeleteStmt => None,
        }
    } else {
        let (&i, rest) = path.split_first()?;
        match &mut e.kind {
            ExprKind::Binary { lhs, .. } if i == 0 => edit_expr(lhs, rest, edit),
            ExprKind::Binary { rhs, .. } if i == 1 => edit_expr(rhs, rest, edit),
            ExprKind::Index { array, .. } if i == 0 => edit_expr(array, rest, edit),
            ExprKind::Index { index, .. } if i == 1 => edit_expr(index, rest, edit),
            ExprKind::Unary { operand, .. } | ExprKind::Paren(operand) if i == 0 => {
                edit_expr(operand, rest, edit)
            }
            ExprKind::Call { args, .. } if i < args.len() => edit_expr(&mut args[i], rest, edit),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::typecheck::load_unit;

    fn sum_unit() -> Unit {
        load_unit(
            "class Sum {\n  field n: int;\n  field value: real;\n  ctor() {\n    n := 0;\n    value := 0.0;\n  }\n  method increment(d: real): void {\n    n := n + 1;\n    value := value + d;\n  }\n  method getResult(): real {\n    return value;\n  }\n}",
        )
        .unwrap()
    }

    #[test]
    fn enumeration_is_deterministic_and_single_edit() {
        let u = sum_unit();
        let a = generate_mutants(&u, &[]);
        let b = generate_mutants(&u, &[]);
        let ids: Vec<String> = a.iter().map(|m| m.id()).collect();
        assert_eq!(ids, b.iter().map(|m| m.id()).collect::<Vec<_>>());
        let unique: std::collections::BTreeSet<&String> = ids.iter().collect();
        assert_eq!(unique.len(), ids.len());
        for m in &a {
            assert_ne!(print_unit(&m.unit), print_unit(&u), "{} is a no-op", m.id());
            assert!(check_unit(&m.unit).is_ok());
        }
    }

    #[test]
    fn aor_on_plus_yields_four_variants() {
        let u = sum_unit();
        let ms = generate_mutants(&u, &[MutOp::Aor]);
        // two `+` sites (n + 1, value + d), four replacements each, except
        // `%` on reals fails the type check
        let inc: Vec<&Mutant> = ms.iter().filter(|m| m.method == "increment").collect();
        assert_eq!(inc.iter().filter(|m| m.path == vec![0, 0]).count(), 4);
        assert_eq!(inc.iter().filter(|m| m.path == vec![1, 0]).count(), 3);
    }

    #[test]
    fn ror_on_int_compare_yields_five_variants() {
        let u = load_unit(
            "class C {\n  field n: int;\n  ctor() { n := 0; }\n  method probe(k: int): bool {\n    return n < k;\n  }\n}",
        )
        .unwrap();
        let ms = generate_mutants(&u, &[MutOp::Ror]);
        assert_eq!(ms.len(), 5);
    }

    #[test]
    fn crp_skips_the_original_constant() {
        let u = sum_unit();
        let ms = generate_mutants(&u, &[MutOp::Crp]);
        // ctor `n := 0` keeps only +1 and -1 (0 -> 0 is a no-op), same for
        // `value := 0.0`; `n + 1` keeps 2 and 0 (1 - 1 = 0 twice, deduped)
        for m in &ms {
            assert_ne!(print_unit(&m.unit), print_unit(&u));
        }
        let ctor_zero: Vec<&Mutant> =
            ms.iter().filter(|m| m.method == "ctor" && m.path == vec![0, 0]).collect();
        assert_eq!(ctor_zero.len(), 2);
    }

    #[test]
    fn sdl_deletes_exactly_one_assignment() {
        let u = sum_unit();
        let ms = generate_mutants(&u, &[MutOp::Sdl]);
        assert_eq!(ms.len(), 4);
        for m in &ms {
            let total: usize = count_stmts(&m.unit);
            assert_eq!(total, count_stmts(&u) - 1);
        }
    }

    fn count_stmts(u: &Unit) -> usize {
        fn blk(b: &Block) -> usize {
            b.stmts
                .iter()
                .map(|s| {
                    1 + match &s.kind {
                        StmtKind::If { then_blk, else_blk, .. } => {
                            blk(then_blk) + else_blk.as_ref().map_or(0, blk)
                        }
                        StmtKind::While { body, .. } | StmtKind::For { body, .. } => blk(body),
                        _ => 0,
                    }
                })
                .sum()
        }
        u.ctor.as_ref().map_or(0, |c| blk(&c.body)) + u.methods.iter().map(|m| blk(&m.body)).sum::<usize>()
    }

    #[test]
    fn neg_wraps_a_condition() {
        let u = load_unit(
            "class C {\n  field n: int;\n  ctor() { n := 0; }\n  method cap(k: int): void {\n    if (n < k) {\n      n := k;\n    }\n  }\n}",
        )
        .unwrap();
        let ms = generate_mutants(&u, &[MutOp::Neg]);
        assert_eq!(ms.len(), 1);
        assert!(print_unit(&ms[0].unit).contains("!(n < k)"));
    }

    #[test]
    fn empty_body_has_no_mutants() {
        let u = load_unit("class C {\n  ctor() { }\n  method idle(): void { return; }\n}").unwrap();
        assert!(generate_mutants(&u, &[]).is_empty());
    }
}
