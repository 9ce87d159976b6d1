//! Pretty-printer. The printed text of a parsed unit lexes to the same
//! token stream as the original source; for synthetic trees (mutants) the
//! printer inserts parentheses wherever the grammar needs them, so printing
//! is a fixpoint: parse(print(t)) prints back to the same text.

use super::ast::*;
use crate::values::{format_real, Ty};

pub fn print_unit(u: &Unit) -> String {
    let mut s = String::new();
    s.push_str(&format!("class {} {{\n", u.name));
    for f in &u.fields {
        s.push_str(&format!("  field {}: {};\n", f.name, ty_str(f.ty)));
    }
    if let Some(ctor) = &u.ctor {
        s.push('\n');
        s.push_str(&format!("  ctor({}) {{\n", params_str(&ctor.params)));
        print_block(&mut s, &ctor.body, 2);
        s.push_str("  }\n");
    }
    for m in &u.methods {
        s.push('\n');
        let ret = match m.ret {
            None => "void".to_string(),
            Some(t) => ty_str(t).to_string(),
        };
        s.push_str(&format!("  method {}({}): {} {{\n", m.name, params_str(&m.params), ret));
        print_block(&mut s, &m.body, 2);
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}

/// Body text alone; lexing this is the unit of "same body" comparison.
pub fn print_body(b: &Block) -> String {
    let mut s = String::new();
    print_block(&mut s, b, 0);
    s
}

fn ty_str(t: Ty) -> &'static str {
    match t {
        Ty::Int => "int",
        Ty::Real => "real",
        Ty::Bool => "bool",
        Ty::IntArray => "int[]",
        Ty::RealArray => "real[]",
    }
}

fn params_str(ps: &[Param]) -> String {
    let items: Vec<String> = ps.iter().map(|p| format!("{}: {}", p.name, ty_str(p.ty))).collect();
    items.join(", ")
}

fn indent(s: &mut String, depth: usize) {
    for _ in 0..depth {
        s.push_str("  ");
    }
}

fn print_block(s: &mut String, b: &Block, depth: usize) {
    for st in &b.stmts {
        print_stmt(s, st, depth);
    }
}

fn print_stmt(s: &mut String, st: &Stmt, depth: usize) {
    indent(s, depth);
    match &st.kind {
        StmtKind::Local { name, ty, init } => {
            s.push_str(&format!("var {}: {} := {};\n", name, ty_str(*ty), print_expr(init)));
        }
        StmtKind::Assign { name, value } => {
            s.push_str(&format!("{} := {};\n", name, print_expr(value)));
        }
        StmtKind::AssignElem { array, index, value } => {
            s.push_str(&format!("{}[{}] := {};\n", array, print_expr(index), print_expr(value)));
        }
        StmtKind::If { cond, then_blk, else_blk } => {
            s.push_str(&format!("if ({}) {{\n", print_expr(cond)));
            print_block(s, then_blk, depth + 1);
            indent(s, depth);
            match else_blk {
                Some(e) => {
                    s.push_str("} else {\n");
                    print_block(s, e, depth + 1);
                    indent(s, depth);
                    s.push_str("}\n");
                }
                None => s.push_str("}\n"),
            }
        }
        StmtKind::While { cond, body } => {
            s.push_str(&format!("while ({}) {{\n", print_expr(cond)));
            print_block(s, body, depth + 1);
            indent(s, depth);
            s.push_str("}\n");
        }
        StmtKind::For { var, array, body } => {
            s.push_str(&format!("for {} in {} {{\n", var, print_expr(array)));
            print_block(s, body, depth + 1);
            indent(s, depth);
            s.push_str("}\n");
        }
        StmtKind::Return { value } => match value {
            Some(e) => s.push_str(&format!("return {};\n", print_expr(e))),
            None => s.push_str("return;\n"),
        },
        StmtKind::Fail => s.push_str("fail;\n"),
    }
}

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
    }
}

pub fn print_expr(e: &Expr) -> String {
    print_prec(e, 0)
}

/// `min_prec` is the binding strength of the context; a child whose own
/// operator binds no tighter gets wrapped.
fn print_prec(e: &Expr, min_prec: u8) -> String {
    match &e.kind {
        ExprKind::IntLit(v) => v.to_string(),
        ExprKind::RealLit(v) => format_real(*v),
        ExprKind::BoolLit(v) => v.to_string(),
        ExprKind::NanLit => "nan".to_string(),
        ExprKind::Ident(s) => s.clone(),
        ExprKind::Index { array, index } => {
            format!("{}[{}]", print_prec(array, 7), print_expr(index))
        }
        ExprKind::Unary { op, operand } => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            format!("{}{}", sym, print_prec(operand, 6))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = prec(*op);
            // comparisons do not chain, so both sides need strictly tighter
            // operands; other binary ops are left-associative
            let (lmin, rmin) = if op.is_cmp() { (p + 1, p + 1) } else { (p, p + 1) };
            let text = format!(
                "{} {} {}",
                print_prec(lhs, lmin),
                op.as_str(),
                print_prec(rhs, rmin)
            );
            if p < min_prec {
                format!("({text})")
            } else {
                text
            }
        }
        ExprKind::Call { f, args } => {
            let items: Vec<String> = args.iter().map(print_expr).collect();
            format!("{}({})", f.as_str(), items.join(", "))
        }
        ExprKind::Paren(inner) => format!("({})", print_expr(inner)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::lexer::token_kinds;
    use crate::minilang::parser::parse_unit;

    const SRC: &str = "class Acc {\n  field total: real;\n\n  ctor(start: real) {\n    total := start;\n  }\n\n  method add(d: real): void {\n    if (d < 0.0) {\n      total := total - d;\n    } else {\n      total := total + d;\n    }\n  }\n\n  method get(): real {\n    return total;\n  }\n}\n";

    #[test]
    fn printing_preserves_the_token_stream() {
        let u = parse_unit(SRC).unwrap();
        let printed = print_unit(&u);
        assert_eq!(token_kinds(&printed).unwrap(), token_kinds(SRC).unwrap());
    }

    #[test]
    fn printing_is_a_fixpoint() {
        let u = parse_unit(SRC).unwrap();
        let once = print_unit(&u);
        let twice = print_unit(&parse_unit(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn synthetic_right_nested_ops_get_parens() {
        // a - (b - c): flattening to a - b - c would reassociate
        let sub = |l: Expr, r: Expr| Expr {
            kind: ExprKind::Binary { op: BinOp::Sub, lhs: Box::new(l), rhs: Box::new(r) },
            span: Default::default(),
        };
        let id = |n: &str| Expr { kind: ExprKind::Ident(n.into()), span: Default::default() };
        let e = sub(id("a"), sub(id("b"), id("c")));
        assert_eq!(print_expr(&e), "a - (b - c)");
    }
}
