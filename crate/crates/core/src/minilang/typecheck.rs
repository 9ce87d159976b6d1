use std::collections::HashMap;

use super::ast::*;
use super::parser::{parse_unit, ParseError};
use super::token::Span;
use crate::values::Ty;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub msg: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.span, self.msg)
    }
}

impl From<ParseError> for Diagnostic {
    fn from(e: ParseError) -> Self {
        Diagnostic { span: e.span, msg: e.msg }
    }
}

/// Parse and type-check in one step; syntax errors arrive as a single
/// diagnostic, type errors are collected exhaustively.
pub fn load_unit(src: &str) -> Result<Unit, Vec<Diagnostic>> {
    let unit = parse_unit(src).map_err(|e| vec![e.into()])?;
    check_unit(&unit)?;
    Ok(unit)
}

pub fn check_unit(u: &Unit) -> Result<(), Vec<Diagnostic>> {
    let mut ck = Checker { unit: u, diags: Vec::new() };
    ck.run();
    if ck.diags.is_empty() {
        Ok(())
    } else {
        Err(ck.diags)
    }
}

struct Checker<'u> {
    unit: &'u Unit,
    diags: Vec<Diagnostic>,
}

struct MethodEnv {
    // name -> type; params and locals share the namespace with fields,
    // shadowing is a duplicate-name error
    scopes: Vec<HashMap<String, Ty>>,
    loop_vars: Vec<String>,
    ret: Option<Ty>,
}

impl MethodEnv {
    fn lookup(&self, name: &str) -> Option<Ty> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn declared_anywhere(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains_key(name))
    }
}

impl<'u> Checker<'u> {
    fn err(&mut self, span: Span, msg: String) {
        self.diags.push(Diagnostic { span, msg });
    }

    fn run(&mut self) {
        let mut seen_fields: HashMap<&str, ()> = HashMap::new();
        for f in &self.unit.fields {
            if seen_fields.insert(&f.name, ()).is_some() {
                self.err(f.span, format!("duplicate field `{}`", f.name));
            }
        }
        let mut seen_methods: HashMap<&str, ()> = HashMap::new();
        for m in &self.unit.methods {
            if seen_methods.insert(&m.name, ()).is_some() {
                self.err(m.span, format!("duplicate method `{}`", m.name));
            }
        }
        let ctor = self.unit.effective_ctor();
        self.check_method(&ctor);
        for m in &self.unit.methods {
            self.check_method(m);
        }
    }

    fn check_method(&mut self, m: &Method) {
        let mut top = HashMap::new();
        for f in &self.unit.fields {
            top.insert(f.name.clone(), f.ty);
        }
        for p in &m.params {
            if top.contains_key(&p.name) {
                if self.unit.field_ty(&p.name).is_some() {
                    self.err(p.span, format!("parameter `{}` shadows a field", p.name));
                } else {
                    self.err(p.span, format!("duplicate parameter `{}`", p.name));
                }
            } else {
                top.insert(p.name.clone(), p.ty);
            }
        }
        let mut env = MethodEnv { scopes: vec![top], loop_vars: Vec::new(), ret: m.ret };
        self.check_block(&m.body, &mut env);
        if m.ret.is_some() && !block_exits(&m.body) {
            self.err(m.span, format!("method `{}` must return on every path", m.name));
        }
    }

    fn check_block(&mut self, b: &Block, env: &mut MethodEnv) {
        env.scopes.push(HashMap::new());
        for st in &b.stmts {
            self.check_stmt(st, env);
        }
        env.scopes.pop();
    }

    fn check_stmt(&mut self, st: &Stmt, env: &mut MethodEnv) {
        match &st.kind {
            StmtKind::Local { name, ty, init } => {
                let it = self.ty_expr(init, env);
                if let Some(it) = it {
                    if it != *ty {
                        self.err(st.span, format!("initializer for `{name}` has type {it}, expected {ty}"));
                    }
                }
                if env.declared_anywhere(name) {
                    self.err(st.span, format!("`{name}` is already declared"));
                } else {
                    env.scopes.last_mut().unwrap().insert(name.clone(), *ty);
                }
            }
            StmtKind::Assign { name, value } => {
                let vt = self.ty_expr(value, env);
                if env.loop_vars.iter().any(|v| v == name) {
                    self.err(st.span, format!("cannot assign to loop variable `{name}`"));
                    return;
                }
                match env.lookup(name) {
                    None => self.err(st.span, format!("unknown name `{name}`")),
                    Some(t) => {
                        if let Some(vt) = vt {
                            if vt != t {
                                self.err(st.span, format!("cannot assign {vt} to `{name}` of type {t}"));
                            }
                        }
                    }
                }
            }
            StmtKind::AssignElem { array, index, value } => {
                let it = self.ty_expr(index, env);
                let vt = self.ty_expr(value, env);
                if let Some(it) = it {
                    if it != Ty::Int {
                        self.err(st.span, format!("array index has type {it}, expected int"));
                    }
                }
                match env.lookup(array) {
                    None => self.err(st.span, format!("unknown name `{array}`")),
                    Some(t) => match t.elem() {
                        None => self.err(st.span, format!("`{array}` has type {t}, not an array")),
                        Some(et) => {
                            if let Some(vt) = vt {
                                if vt != et {
                                    self.err(st.span, format!("cannot store {vt} in `{array}` of type {t}"));
                                }
                            }
                        }
                    },
                }
            }
            StmtKind::If { cond, then_blk, else_blk } => {
                self.expect_bool(cond, env, "if condition");
                self.check_block(then_blk, env);
                if let Some(e) = else_blk {
                    self.check_block(e, env);
                }
            }
            StmtKind::While { cond, body } => {
                self.expect_bool(cond, env, "while condition");
                self.check_block(body, env);
            }
            StmtKind::For { var, array, body } => {
                let at = self.ty_expr(array, env);
                let elem = match at {
                    Some(t) => match t.elem() {
                        Some(et) => Some(et),
                        None => {
                            self.err(st.span, format!("for-in needs an array, got {t}"));
                            None
                        }
                    },
                    None => None,
                };
                if env.declared_anywhere(var) {
                    self.err(st.span, format!("`{var}` is already declared"));
                }
                env.scopes.push(HashMap::new());
                if let Some(et) = elem {
                    env.scopes.last_mut().unwrap().insert(var.clone(), et);
                }
                env.loop_vars.push(var.clone());
                for s in &body.stmts {
                    self.check_stmt(s, env);
                }
                env.loop_vars.pop();
                env.scopes.pop();
            }
            StmtKind::Return { value } => match (env.ret, value) {
                (None, None) => {}
                (None, Some(_)) => self.err(st.span, "void method cannot return a value".to_string()),
                (Some(rt), None) => self.err(st.span, format!("method must return a {rt}")),
                (Some(rt), Some(e)) => {
                    if let Some(et) = self.ty_expr(e, env) {
                        if et != rt {
                            self.err(st.span, format!("return type is {et}, expected {rt}"));
                        }
                    }
                }
            },
            StmtKind::Fail => {}
        }
    }

    fn expect_bool(&mut self, e: &Expr, env: &mut MethodEnv, what: &str) {
        if let Some(t) = self.ty_expr(e, env) {
            if t != Ty::Bool {
                self.err(e.span, format!("{what} has type {t}, expected bool"));
            }
        }
    }

    fn ty_expr(&mut self, e: &Expr, env: &MethodEnv) -> Option<Ty> {
        match &e.kind {
            ExprKind::IntLit(_) => Some(Ty::Int),
            ExprKind::RealLit(_) | ExprKind::NanLit => Some(Ty::Real),
            ExprKind::BoolLit(_) => Some(Ty::Bool),
            ExprKind::Ident(name) => match env.lookup(name) {
                Some(t) => Some(t),
                None => {
                    self.err(e.span, format!("unknown name `{name}`"));
                    None
                }
            },
            ExprKind::Index { array, index } => {
                let at = self.ty_expr(array, env);
                if let Some(it) = self.ty_expr(index, env) {
                    if it != Ty::Int {
                        self.err(e.span, format!("array index has type {it}, expected int"));
                    }
                }
                match at {
                    Some(t) => match t.elem() {
                        Some(et) => Some(et),
                        None => {
                            self.err(e.span, format!("cannot index into {t}"));
                            None
                        }
                    },
                    None => None,
                }
            }
            ExprKind::Unary { op, operand } => {
                let t = self.ty_expr(operand, env)?;
                match op {
                    UnOp::Neg => {
                        if t == Ty::Int || t == Ty::Real {
                            Some(t)
                        } else {
                            self.err(e.span, format!("cannot negate {t}"));
                            None
                        }
                    }
                    UnOp::Not => {
                        if t == Ty::Bool {
                            Some(Ty::Bool)
                        } else {
                            self.err(e.span, format!("`!` needs bool, got {t}"));
                            None
                        }
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let lt = self.ty_expr(lhs, env);
                let rt = self.ty_expr(rhs, env);
                let (lt, rt) = (lt?, rt?);
                if *op == BinOp::Rem {
                    return if lt == Ty::Int && rt == Ty::Int {
                        Some(Ty::Int)
                    } else {
                        self.err(e.span, format!("`%` needs int operands, got {lt} and {rt}"));
                        None
                    };
                }
                if op.is_arith() {
                    return if lt == rt && (lt == Ty::Int || lt == Ty::Real) {
                        Some(lt)
                    } else {
                        self.err(
                            e.span,
                            format!("`{}` needs matching numeric operands, got {lt} and {rt}", op.as_str()),
                        );
                        None
                    };
                }
                if matches!(op, BinOp::Eq | BinOp::Ne) {
                    return if lt == rt && !lt.is_array() {
                        Some(Ty::Bool)
                    } else {
                        self.err(
                            e.span,
                            format!("`{}` needs matching scalar operands, got {lt} and {rt}", op.as_str()),
                        );
                        None
                    };
                }
                if op.is_cmp() {
                    return if lt == rt && (lt == Ty::Int || lt == Ty::Real) {
                        Some(Ty::Bool)
                    } else {
                        self.err(
                            e.span,
                            format!("`{}` needs matching numeric operands, got {lt} and {rt}", op.as_str()),
                        );
                        None
                    };
                }
                // && and ||
                if lt == Ty::Bool && rt == Ty::Bool {
                    Some(Ty::Bool)
                } else {
                    self.err(e.span, format!("`{}` needs bool operands, got {lt} and {rt}", op.as_str()));
                    None
                }
            }
            ExprKind::Call { f, args } => {
                let ts: Vec<Option<Ty>> = args.iter().map(|a| self.ty_expr(a, env)).collect();
                match f {
                    Builtin::Abs => {
                        let t = ts[0]?;
                        if t == Ty::Int || t == Ty::Real {
                            Some(t)
                        } else {
                            self.err(e.span, format!("abs needs a numeric argument, got {t}"));
                            None
                        }
                    }
                    Builtin::Max | Builtin::Min => {
                        let (a, b) = (ts[0]?, ts[1]?);
                        if a == b && (a == Ty::Int || a == Ty::Real) {
                            Some(a)
                        } else {
                            self.err(
                                e.span,
                                format!("{} needs matching numeric arguments, got {a} and {b}", f.as_str()),
                            );
                            None
                        }
                    }
                    Builtin::ToReal => {
                        let t = ts[0]?;
                        if t == Ty::Int {
                            Some(Ty::Real)
                        } else {
                            self.err(e.span, format!("toReal needs an int argument, got {t}"));
                            None
                        }
                    }
                    Builtin::Len => {
                        let t = ts[0]?;
                        if t.is_array() {
                            Some(Ty::Int)
                        } else {
                            self.err(e.span, format!("len needs an array argument, got {t}"));
                            None
                        }
                    }
                }
            }
            ExprKind::Paren(inner) => self.ty_expr(inner, env),
        }
    }
}

/// Whether every path through the block reaches a `return` or `fail`.
fn block_exits(b: &Block) -> bool {
    b.stmts.iter().any(stmt_exits)
}

fn stmt_exits(st: &Stmt) -> bool {
    match &st.kind {
        StmtKind::Return { .. } | StmtKind::Fail => true,
        StmtKind::If { then_blk, else_blk: Some(e), .. } => block_exits(then_blk) && block_exits(e),
        _ => false,
    }
}
