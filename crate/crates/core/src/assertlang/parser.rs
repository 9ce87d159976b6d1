//! Text form of assertions, used by ground-truth files, reports, and
//! tests. The canonical printed form of any formula parses back to the
//! same formula.

use super::ast::{AggKind, ArithOp, CmpOp, Formula, Term};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("col {col}: {msg}")]
pub struct AssertParseError {
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(u64),
    Kw(&'static str),
    P(&'static str),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, AssertParseError> {
    const KWS: [&str; 14] = [
        "forall", "exists", "in", "isnan", "old", "result", "len", "sum", "sumabs", "max",
        "maxabs", "min", "true", "false",
    ];
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut is_real = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_real = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // exponent with or without a fraction: 2.5e-7, 1e300
            if i < chars.len() && chars[i] == 'e' {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            if is_real {
                let v: f64 = text
                    .parse()
                    .map_err(|_| AssertParseError { col, msg: format!("bad real literal `{text}`") })?;
                if !v.is_finite() {
                    return Err(AssertParseError { col, msg: format!("real literal `{text}` out of range") });
                }
                out.push((Tok::Real(v.to_bits()), col));
            } else {
                let v: i64 = text
                    .parse()
                    .map_err(|_| AssertParseError { col, msg: format!("int literal `{text}` out of range") })?;
                out.push((Tok::Int(v), col));
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            if text == "nan" {
                return Err(AssertParseError {
                    col,
                    msg: "nan is not a literal here; write isnan(<term>)".to_string(),
                });
            }
            match KWS.iter().find(|k| **k == text) {
                Some(k) => out.push((Tok::Kw(k), col)),
                None => out.push((Tok::Ident(text), col)),
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let three = ["==>"];
        let two = ["<=", ">=", "==", "!=", "&&", "||"];
        let one = ["(", ")", "[", "]", ":", "+", "-", "*", "/", "<", ">", "!"];
        if let Some(p) = three.iter().find(|p| rest.starts_with(**p)) {
            out.push((Tok::P(p), col));
            i += 3;
            continue;
        }
        if let Some(p) = two.iter().find(|p| rest.starts_with(**p)) {
            out.push((Tok::P(p), col));
            i += 2;
            continue;
        }
        if let Some(p) = one.iter().find(|p| rest.starts_with(**p)) {
            out.push((Tok::P(p), col));
            i += 1;
            continue;
        }
        return Err(AssertParseError { col, msg: format!("unexpected character `{c}`") });
    }
    Ok(out)
}

pub fn parse_formula(src: &str) -> Result<Formula, AssertParseError> {
    let toks = lex(src)?;
    let mut p = P { toks, pos: 0 };
    let f = p.implies()?;
    if p.pos < p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}

/// Parse a standalone term (used in tests and tooling).
pub fn parse_term(src: &str) -> Result<Term, AssertParseError> {
    let toks = lex(src)?;
    let mut p = P { toks, pos: 0 };
    let t = p.term()?;
    if p.pos < p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(t)
}

struct P {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).or_else(|| self.toks.last()).map(|(_, c)| *c).unwrap_or(0)
    }

    fn err(&self, msg: &str) -> AssertParseError {
        let found = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            Some(Tok::Int(v)) => v.to_string(),
            Some(Tok::Real(b)) => format!("{:?}", f64::from_bits(*b)),
            Some(Tok::Kw(k)) => k.to_string(),
            Some(Tok::P(p)) => p.to_string(),
            None => "end of input".to_string(),
        };
        AssertParseError { col: self.col(), msg: format!("{msg}, found `{found}`") }
    }

    fn eat_p(&mut self, p: &str) -> bool {
        if self.peek() == Some(&Tok::P(match_p(p))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_p(&mut self, p: &str) -> Result<(), AssertParseError> {
        if self.eat_p(p) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{p}`")))
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if let Some(Tok::Kw(kw)) = self.peek() {
            if *kw == k {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn implies(&mut self) -> Result<Formula, AssertParseError> {
        let lhs = self.or()?;
        if self.eat_p("==>") {
            let rhs = self.implies()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, AssertParseError> {
        let mut lhs = self.and()?;
        while self.eat_p("||") {
            let rhs = self.and()?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, AssertParseError> {
        let mut lhs = self.unary()?;
        while self.eat_p("&&") {
            let rhs = self.unary()?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, AssertParseError> {
        if self.eat_p("!") {
            let f = self.unary()?;
            return Ok(Formula::Not(Box::new(f)));
        }
        if self.eat_kw("isnan") {
            self.expect_p("(")?;
            let t = self.term()?;
            self.expect_p(")")?;
            return Ok(Formula::IsNan(t));
        }
        if self.eat_kw("true") || self.eat_kw("false") {
            return Err(AssertParseError {
                col: self.col(),
                msg: "boolean literals are not assertion atoms".to_string(),
            });
        }
        for (kw, is_forall) in [("forall", true), ("exists", false)] {
            if self.eat_kw(kw) {
                let var = match self.peek().cloned() {
                    Some(Tok::Ident(v)) => {
                        self.pos += 1;
                        v
                    }
                    _ => return Err(self.err("expected quantified variable name")),
                };
                if !self.eat_kw("in") {
                    return Err(self.err("expected `in`"));
                }
                let array = self.term()?;
                self.expect_p(":")?;
                // the body extends as far right as possible
                let body = self.implies()?;
                return Ok(if is_forall {
                    Formula::Forall { var, array, body: Box::new(body) }
                } else {
                    Formula::Exists { var, array, body: Box::new(body) }
                });
            }
        }

        // a comparison, a bare bool term, or a parenthesized formula: try
        // the term route first and fall back to the formula paren
        let snapshot = self.pos;
        match self.term() {
            Ok(t) => {
                let op = match self.peek() {
                    Some(Tok::P("<")) => Some(CmpOp::Lt),
                    Some(Tok::P("<=")) => Some(CmpOp::Le),
                    Some(Tok::P(">")) => Some(CmpOp::Gt),
                    Some(Tok::P(">=")) => Some(CmpOp::Ge),
                    Some(Tok::P("==")) => Some(CmpOp::Eq),
                    Some(Tok::P("!=")) => Some(CmpOp::Ne),
                    _ => None,
                };
                match op {
                    Some(op) => {
                        self.pos += 1;
                        let rhs = self.term()?;
                        Ok(Formula::Cmp { op, lhs: t, rhs })
                    }
                    None => Ok(Formula::BoolTerm(t)),
                }
            }
            Err(term_err) => {
                self.pos = snapshot;
                if self.peek() == Some(&Tok::P("(")) {
                    self.pos += 1;
                    let f = self.implies()?;
                    self.expect_p(")")?;
                    Ok(f)
                } else {
                    Err(term_err)
                }
            }
        }
    }

    fn term(&mut self) -> Result<Term, AssertParseError> {
        let mut lhs = self.muldiv()?;
        loop {
            let op = match self.peek() {
                Some(Tok::P("+")) => ArithOp::Add,
                Some(Tok::P("-")) => ArithOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.muldiv()?;
            lhs = Term::Arith { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn muldiv(&mut self) -> Result<Term, AssertParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::P("*")) => ArithOp::Mul,
                Some(Tok::P("/")) => ArithOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Term::Arith { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Term, AssertParseError> {
        if self.eat_p("-") {
            let t = self.factor()?;
            return Ok(Term::Neg(Box::new(t)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Term, AssertParseError> {
        let mut t = self.primary()?;
        while self.eat_p("[") {
            let idx = self.term()?;
            self.expect_p("]")?;
            t = Term::Idx { array: Box::new(t), index: Box::new(idx) };
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<Term, AssertParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(Term::IntLit(v))
            }
            Some(Tok::Real(bits)) => {
                self.pos += 1;
                Ok(Term::RealLit(f64::from_bits(bits)))
            }
            Some(Tok::Ident(n)) => {
                self.pos += 1;
                Ok(Term::Ident(n))
            }
            Some(Tok::Kw("result")) => {
                self.pos += 1;
                Ok(Term::Result)
            }
            Some(Tok::Kw("old")) => {
                self.pos += 1;
                self.expect_p("(")?;
                let name = match self.peek().cloned() {
                    Some(Tok::Ident(n)) => {
                        self.pos += 1;
                        n
                    }
                    _ => return Err(self.err("old() takes a field name")),
                };
                self.expect_p(")")?;
                Ok(Term::Old(name))
            }
            Some(Tok::Kw("len")) => {
                self.pos += 1;
                self.expect_p("(")?;
                let t = self.term()?;
                self.expect_p(")")?;
                Ok(Term::Len(Box::new(t)))
            }
            Some(Tok::Kw(k)) if agg_kind(k).is_some() => {
                self.pos += 1;
                self.expect_p("(")?;
                let t = self.term()?;
                self.expect_p(")")?;
                Ok(Term::Agg { kind: agg_kind(k).unwrap(), array: Box::new(t) })
            }
            Some(Tok::P("(")) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect_p(")")?;
                Ok(t)
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

fn agg_kind(k: &str) -> Option<AggKind> {
    match k {
        "sum" => Some(AggKind::Sum),
        "sumabs" => Some(AggKind::SumAbs),
        "max" => Some(AggKind::Max),
        "maxabs" => Some(AggKind::MaxAbs),
        "min" => Some(AggKind::Min),
        _ => None,
    }
}

fn match_p(p: &str) -> &'static str {
    match p {
        "==>" => "==>",
        "<=" => "<=",
        ">=" => ">=",
        "==" => "==",
        "!=" => "!=",
        "&&" => "&&",
        "||" => "||",
        "(" => "(",
        ")" => ")",
        "[" => "[",
        "]" => "]",
        ":" => ":",
        "+" => "+",
        "-" => "-",
        "*" => "*",
        "/" => "/",
        "<" => "<",
        ">" => ">",
        "!" => "!",
        _ => unreachable!("unknown punct {p}"),
    }
}
