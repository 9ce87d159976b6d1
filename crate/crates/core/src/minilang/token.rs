use std::fmt;

/// Source position, 1-based. Used in diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kw {
    Class,
    Field,
    Ctor,
    Method,
    Var,
    If,
    Else,
    While,
    For,
    In,
    Return,
    Fail,
    True,
    False,
    Nan,
    Int,
    Real,
    Bool,
    Void,
    Abs,
    Max,
    Min,
    ToReal,
    Len,
}

impl Kw {
    pub fn as_str(self) -> &'static str {
        match self {
            Kw::Class => "class",
            Kw::Field => "field",
            Kw::Ctor => "ctor",
            Kw::Method => "method",
            Kw::Var => "var",
            Kw::If => "if",
            Kw::Else => "else",
            Kw::While => "while",
            Kw::For => "for",
            Kw::In => "in",
            Kw::Return => "return",
            Kw::Fail => "fail",
            Kw::True => "true",
            Kw::False => "false",
            Kw::Nan => "nan",
            Kw::Int => "int",
            Kw::Real => "real",
            Kw::Bool => "bool",
            Kw::Void => "void",
            Kw::Abs => "abs",
            Kw::Max => "max",
            Kw::Min => "min",
            Kw::ToReal => "toReal",
            Kw::Len => "len",
        }
    }

    pub fn lookup(s: &str) -> Option<Kw> {
        let kw = match s {
            "class" => Kw::Class,
            "field" => Kw::Field,
            "ctor" => Kw::Ctor,
            "method" => Kw::Method,
            "var" => Kw::Var,
            "if" => Kw::If,
            "else" => Kw::Else,
            "while" => Kw::While,
            "for" => Kw::For,
            "in" => Kw::In,
            "return" => Kw::Return,
            "fail" => Kw::Fail,
            "true" => Kw::True,
            "false" => Kw::False,
            "nan" => Kw::Nan,
            "int" => Kw::Int,
            "real" => Kw::Real,
            "bool" => Kw::Bool,
            "void" => Kw::Void,
            "abs" => Kw::Abs,
            "max" => Kw::Max,
            "min" => Kw::Min,
            "toReal" => Kw::ToReal,
            "len" => Kw::Len,
            _ => return None,
        };
        Some(kw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Punct {
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Colon,
    Comma,
    Assign, // :=
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Bang,
}

impl Punct {
    pub fn as_str(self) -> &'static str {
        match self {
            Punct::LBrace => "{",
            Punct::RBrace => "}",
            Punct::LParen => "(",
            Punct::RParen => ")",
            Punct::LBracket => "[",
            Punct::RBracket => "]",
            Punct::Semi => ";",
            Punct::Colon => ":",
            Punct::Comma => ",",
            Punct::Assign => ":=",
            Punct::Plus => "+",
            Punct::Minus => "-",
            Punct::Star => "*",
            Punct::Slash => "/",
            Punct::Percent => "%",
            Punct::Lt => "<",
            Punct::Le => "<=",
            Punct::Gt => ">",
            Punct::Ge => ">=",
            Punct::EqEq => "==",
            Punct::Ne => "!=",
            Punct::AndAnd => "&&",
            Punct::OrOr => "||",
            Punct::Bang => "!",
        }
    }
}

/// Token kind. Real literals are stored as bits so token streams can be
/// compared for exact equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TokKind {
    Ident(String),
    IntLit(i64),
    RealLit(u64),
    Kw(Kw),
    Punct(Punct),
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Ident(s) => f.write_str(s),
            TokKind::IntLit(v) => write!(f, "{v}"),
            TokKind::RealLit(bits) => f.write_str(&crate::values::format_real(f64::from_bits(*bits))),
            TokKind::Kw(k) => f.write_str(k.as_str()),
            TokKind::Punct(p) => f.write_str(p.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokKind,
    pub span: Span,
}
