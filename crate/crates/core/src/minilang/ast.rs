//! Abstract syntax for DL. Parenthesised expressions keep an explicit node
//! so printing reproduces the parsed token stream exactly.

use super::token::Span;
use crate::values::Ty;

#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub name: String,
    pub fields: Vec<Field>,
    /// Present iff the source declared one. An absent ctor behaves as
    /// `ctor() { }` everywhere except the printer.
    pub ctor: Option<Method>,
    pub methods: Vec<Method>,
}

impl Unit {
    /// The constructor to execute: declared or the implicit empty one.
    pub fn effective_ctor(&self) -> Method {
        self.ctor.clone().unwrap_or_else(|| Method {
            name: "ctor".to_string(),
            params: Vec::new(),
            ret: None,
            body: Block { stmts: Vec::new() },
            span: Span::default(),
        })
    }

    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn field_ty(&self, name: &str) -> Option<Ty> {
        self.fields.iter().find(|f| f.name == name).map(|f| f.ty)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub ty: Ty,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub params: Vec<Param>,
    /// None is `void`.
    pub ret: Option<Ty>,
    pub body: Block,
    pub span: Span,
}

impl Method {
    /// Signature identity: name plus parameter names, parameter types, and
    /// return type. Renaming a parameter changes the signature.
    pub fn signature(&self) -> (String, Vec<(String, Ty)>, Option<Ty>) {
        (
            self.name.clone(),
            self.params.iter().map(|p| (p.name.clone(), p.ty)).collect(),
            self.ret,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Ty,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `var x: int := e;` local declaration, initializer mandatory.
    Local { name: String, ty: Ty, init: Expr },
    /// `x := e;`
    Assign { name: String, value: Expr },
    /// `a[i] := e;`
    AssignElem { array: String, index: Expr, value: Expr },
    If { cond: Expr, then_blk: Block, else_blk: Option<Block> },
    While { cond: Expr, body: Block },
    For { var: String, array: Expr, body: Block },
    Return { value: Option<Expr> },
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem)
    }

    pub fn is_cmp(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }

    pub fn is_logic(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Abs,
    Max,
    Min,
    ToReal,
    Len,
}

impl Builtin {
    pub fn as_str(self) -> &'static str {
        match self {
            Builtin::Abs => "abs",
            Builtin::Max => "max",
            Builtin::Min => "min",
            Builtin::ToReal => "toReal",
            Builtin::Len => "len",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Abs | Builtin::ToReal | Builtin::Len => 1,
            Builtin::Max | Builtin::Min => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    IntLit(i64),
    RealLit(f64),
    BoolLit(bool),
    NanLit,
    Ident(String),
    Index { array: Box<Expr>, index: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { f: Builtin, args: Vec<Expr> },
    Paren(Box<Expr>),
}
