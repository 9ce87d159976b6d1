use super::ast::*;
use super::lexer::{lex, LexError};
use super::token::{Kw, Punct, Span, TokKind, Token};
use crate::values::Ty;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {msg}")]
pub struct ParseError {
    pub span: Span,
    pub msg: String,
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError { span: e.span, msg: e.msg }
    }
}

pub fn parse_unit(src: &str) -> Result<Unit, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let unit = p.unit()?;
    if p.pos < p.toks.len() {
        return Err(p.err_here("trailing input after class body"));
    }
    Ok(unit)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn span_here(&self) -> Span {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.span)
            .unwrap_or_default()
    }

    fn err_here(&self, msg: &str) -> ParseError {
        let found = match self.peek() {
            Some(k) => format!("{k}"),
            None => "end of input".to_string(),
        };
        ParseError { span: self.span_here(), msg: format!("{msg}, found `{found}`") }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: Punct) -> bool {
        if self.peek() == Some(&TokKind::Punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: Punct) -> Result<Span, ParseError> {
        if self.peek() == Some(&TokKind::Punct(p)) {
            let sp = self.span_here();
            self.pos += 1;
            Ok(sp)
        } else {
            Err(self.err_here(&format!("expected `{}`", p.as_str())))
        }
    }

    fn eat_kw(&mut self, k: Kw) -> bool {
        if self.peek() == Some(&TokKind::Kw(k)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, k: Kw) -> Result<Span, ParseError> {
        if self.peek() == Some(&TokKind::Kw(k)) {
            let sp = self.span_here();
            self.pos += 1;
            Ok(sp)
        } else {
            Err(self.err_here(&format!("expected `{}`", k.as_str())))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek() {
            Some(TokKind::Ident(_)) => {
                let sp = self.span_here();
                let Some(Token { kind: TokKind::Ident(s), .. }) = self.next() else {
                    unreachable!()
                };
                Ok((s, sp))
            }
            _ => Err(self.err_here("expected identifier")),
        }
    }

    fn unit(&mut self) -> Result<Unit, ParseError> {
        self.expect_kw(Kw::Class)?;
        let (name, _) = self.expect_ident()?;
        self.expect_punct(Punct::LBrace)?;
        let mut fields = Vec::new();
        let mut ctor: Option<Method> = None;
        let mut methods = Vec::new();
        loop {
            if self.eat_punct(Punct::RBrace) {
                break;
            }
            match self.peek() {
                Some(TokKind::Kw(Kw::Field)) => {
                    let span = self.span_here();
                    // declaration order is part of the language: fields,
                    // then ctor, then methods
                    if ctor.is_some() || !methods.is_empty() {
                        return Err(ParseError {
                            span,
                            msg: "fields must be declared before ctor and methods".to_string(),
                        });
                    }
                    self.pos += 1;
                    let (fname, fspan) = self.expect_ident()?;
                    self.expect_punct(Punct::Colon)?;
                    let ty = self.ty()?;
                    self.expect_punct(Punct::Semi)?;
                    fields.push(Field { name: fname, ty, span: fspan });
                }
                Some(TokKind::Kw(Kw::Ctor)) => {
                    let span = self.span_here();
                    self.pos += 1;
                    if ctor.is_some() {
                        return Err(ParseError { span, msg: "duplicate ctor".to_string() });
                    }
                    if !methods.is_empty() {
                        return Err(ParseError {
                            span,
                            msg: "ctor must be declared before methods".to_string(),
                        });
                    }
                    self.expect_punct(Punct::LParen)?;
                    let params = self.params()?;
                    let body = self.block()?;
                    ctor = Some(Method { name: "ctor".to_string(), params, ret: None, body, span });
                }
                Some(TokKind::Kw(Kw::Method)) => {
                    let span = self.span_here();
                    self.pos += 1;
                    let (mname, _) = self.expect_ident()?;
                    self.expect_punct(Punct::LParen)?;
                    let params = self.params()?;
                    self.expect_punct(Punct::Colon)?;
                    let ret = if self.eat_kw(Kw::Void) { None } else { Some(self.ty()?) };
                    let body = self.block()?;
                    methods.push(Method { name: mname, params, ret, body, span });
                }
                _ => return Err(self.err_here("expected `field`, `ctor`, `method`, or `}`")),
            }
        }
        Ok(Unit { name, fields, ctor, methods })
    }

    fn params(&mut self) -> Result<Vec<Param>, ParseError> {
        let mut out = Vec::new();
        if self.eat_punct(Punct::RParen) {
            return Ok(out);
        }
        loop {
            let (name, span) = self.expect_ident()?;
            self.expect_punct(Punct::Colon)?;
            let ty = self.ty()?;
            out.push(Param { name, ty, span });
            if self.eat_punct(Punct::Comma) {
                continue;
            }
            self.expect_punct(Punct::RParen)?;
            return Ok(out);
        }
    }

    fn ty(&mut self) -> Result<Ty, ParseError> {
        let base = if self.eat_kw(Kw::Int) {
            Ty::Int
        } else if self.eat_kw(Kw::Real) {
            Ty::Real
        } else if self.eat_kw(Kw::Bool) {
            Ty::Bool
        } else {
            return Err(self.err_here("expected type"));
        };
        if self.eat_punct(Punct::LBracket) {
            let sp = self.expect_punct(Punct::RBracket)?;
            return match base {
                Ty::Int => Ok(Ty::IntArray),
                Ty::Real => Ok(Ty::RealArray),
                _ => Err(ParseError { span: sp, msg: "array element type must be int or real".to_string() }),
            };
        }
        Ok(base)
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect_punct(Punct::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat_punct(Punct::RBrace) {
            stmts.push(self.stmt()?);
        }
        Ok(Block { stmts })
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span_here();
        match self.peek() {
            Some(TokKind::Kw(Kw::Var)) => {
                self.pos += 1;
                let (name, _) = self.expect_ident()?;
                self.expect_punct(Punct::Colon)?;
                let ty = self.ty()?;
                self.expect_punct(Punct::Assign)?;
                let init = self.expr()?;
                self.expect_punct(Punct::Semi)?;
                Ok(Stmt { kind: StmtKind::Local { name, ty, init }, span })
            }
            Some(TokKind::Kw(Kw::If)) => {
                self.pos += 1;
                self.expect_punct(Punct::LParen)?;
                let cond = self.expr()?;
                self.expect_punct(Punct::RParen)?;
                let then_blk = self.block()?;
                let else_blk = if self.eat_kw(Kw::Else) { Some(self.block()?) } else { None };
                Ok(Stmt { kind: StmtKind::If { cond, then_blk, else_blk }, span })
            }
            Some(TokKind::Kw(Kw::While)) => {
                self.pos += 1;
                self.expect_punct(Punct::LParen)?;
                let cond = self.expr()?;
                self.expect_punct(Punct::RParen)?;
                let body = self.block()?;
                Ok(Stmt { kind: StmtKind::While { cond, body }, span })
            }
            Some(TokKind::Kw(Kw::For)) => {
                self.pos += 1;
                let (var, _) = self.expect_ident()?;
                self.expect_kw(Kw::In)?;
                let array = self.expr()?;
                let body = self.block()?;
                Ok(Stmt { kind: StmtKind::For { var, array, body }, span })
            }
            Some(TokKind::Kw(Kw::Return)) => {
                self.pos += 1;
                let value = if self.peek() == Some(&TokKind::Punct(Punct::Semi)) {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_punct(Punct::Semi)?;
                Ok(Stmt { kind: StmtKind::Return { value }, span })
            }
            Some(TokKind::Kw(Kw::Fail)) => {
                self.pos += 1;
                self.expect_punct(Punct::Semi)?;
                Ok(Stmt { kind: StmtKind::Fail, span })
            }
            Some(TokKind::Ident(_)) => {
                let (name, _) = self.expect_ident()?;
                if self.eat_punct(Punct::LBracket) {
                    let index = self.expr()?;
                    self.expect_punct(Punct::RBracket)?;
                    self.expect_punct(Punct::Assign)?;
                    let value = self.expr()?;
                    self.expect_punct(Punct::Semi)?;
                    Ok(Stmt { kind: StmtKind::AssignElem { array: name, index, value }, span })
                } else {
                    self.expect_punct(Punct::Assign)?;
                    let value = self.expr()?;
                    self.expect_punct(Punct::Semi)?;
                    Ok(Stmt { kind: StmtKind::Assign { name, value }, span })
                }
            }
            _ => Err(self.err_here("expected statement")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&TokKind::Punct(Punct::OrOr)) {
            let span = self.span_here();
            self.pos += 1;
            let rhs = self.and_expr()?;
            lhs = Expr {
                kind: ExprKind::Binary { op: BinOp::Or, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                span,
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.cmp_expr()?;
        while self.peek() == Some(&TokKind::Punct(Punct::AndAnd)) {
            let span = self.span_here();
            self.pos += 1;
            let rhs = self.cmp_expr()?;
            lhs = Expr {
                kind: ExprKind::Binary { op: BinOp::And, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                span,
            };
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Some(TokKind::Punct(Punct::Lt)) => Some(BinOp::Lt),
            Some(TokKind::Punct(Punct::Le)) => Some(BinOp::Le),
            Some(TokKind::Punct(Punct::Gt)) => Some(BinOp::Gt),
            Some(TokKind::Punct(Punct::Ge)) => Some(BinOp::Ge),
            Some(TokKind::Punct(Punct::EqEq)) => Some(BinOp::Eq),
            Some(TokKind::Punct(Punct::Ne)) => Some(BinOp::Ne),
            _ => None,
        };
        if let Some(op) = op {
            let span = self.span_here();
            self.pos += 1;
            let rhs = self.add_expr()?;
            return Ok(Expr {
                kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                span,
            });
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Some(TokKind::Punct(Punct::Plus)) => BinOp::Add,
                Some(TokKind::Punct(Punct::Minus)) => BinOp::Sub,
                _ => break,
            };
            let span = self.span_here();
            self.pos += 1;
            let rhs = self.mul_expr()?;
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Some(TokKind::Punct(Punct::Star)) => BinOp::Mul,
                Some(TokKind::Punct(Punct::Slash)) => BinOp::Div,
                Some(TokKind::Punct(Punct::Percent)) => BinOp::Rem,
                _ => break,
            };
            let span = self.span_here();
            self.pos += 1;
            let rhs = self.unary_expr()?;
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        let span = self.span_here();
        if self.eat_punct(Punct::Bang) {
            let operand = self.unary_expr()?;
            return Ok(Expr { kind: ExprKind::Unary { op: UnOp::Not, operand: Box::new(operand) }, span });
        }
        if self.eat_punct(Punct::Minus) {
            let operand = self.unary_expr()?;
            return Ok(Expr { kind: ExprKind::Unary { op: UnOp::Neg, operand: Box::new(operand) }, span });
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary_expr()?;
        while self.peek() == Some(&TokKind::Punct(Punct::LBracket)) {
            let span = self.span_here();
            self.pos += 1;
            let index = self.expr()?;
            self.expect_punct(Punct::RBracket)?;
            e = Expr { kind: ExprKind::Index { array: Box::new(e), index: Box::new(index) }, span };
        }
        Ok(e)
    }

    fn primary_expr(&mut self) -> Result<Expr, ParseError> {
        let span = self.span_here();
        match self.peek().cloned() {
            Some(TokKind::IntLit(v)) => {
                self.pos += 1;
                Ok(Expr { kind: ExprKind::IntLit(v), span })
            }
            Some(TokKind::RealLit(bits)) => {
                self.pos += 1;
                Ok(Expr { kind: ExprKind::RealLit(f64::from_bits(bits)), span })
            }
            Some(TokKind::Kw(Kw::True)) => {
                self.pos += 1;
                Ok(Expr { kind: ExprKind::BoolLit(true), span })
            }
            Some(TokKind::Kw(Kw::False)) => {
                self.pos += 1;
                Ok(Expr { kind: ExprKind::BoolLit(false), span })
            }
            Some(TokKind::Kw(Kw::Nan)) => {
                self.pos += 1;
                Ok(Expr { kind: ExprKind::NanLit, span })
            }
            Some(TokKind::Kw(kw @ (Kw::Abs | Kw::Max | Kw::Min | Kw::ToReal | Kw::Len))) => {
                self.pos += 1;
                let f = match kw {
                    Kw::Abs => Builtin::Abs,
                    Kw::Max => Builtin::Max,
                    Kw::Min => Builtin::Min,
                    Kw::ToReal => Builtin::ToReal,
                    Kw::Len => Builtin::Len,
                    _ => unreachable!(),
                };
                self.expect_punct(Punct::LParen)?;
                let mut args = Vec::new();
                if !self.eat_punct(Punct::RParen) {
                    loop {
                        args.push(self.expr()?);
                        if self.eat_punct(Punct::Comma) {
                            continue;
                        }
                        self.expect_punct(Punct::RParen)?;
                        break;
                    }
                }
                if args.len() != f.arity() {
                    return Err(ParseError {
                        span,
                        msg: format!("`{}` takes {} argument(s), got {}", f.as_str(), f.arity(), args.len()),
                    });
                }
                Ok(Expr { kind: ExprKind::Call { f, args }, span })
            }
            Some(TokKind::Ident(_)) => {
                let (name, span) = self.expect_ident()?;
                Ok(Expr { kind: ExprKind::Ident(name), span })
            }
            Some(TokKind::Punct(Punct::LParen)) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_punct(Punct::RParen)?;
                Ok(Expr { kind: ExprKind::Paren(Box::new(inner)), span })
            }
            _ => Err(self.err_here("expected expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_class() {
        let u = parse_unit("class C { }").unwrap();
        assert_eq!(u.name, "C");
        assert!(u.ctor.is_none());
        assert!(u.fields.is_empty() && u.methods.is_empty());
    }

    #[test]
    fn parens_are_kept_as_nodes() {
        let u = parse_unit(
            "class C { method m(x: int): int { return (x + 1) * 2; } }",
        )
        .unwrap();
        let StmtKind::Return { value: Some(e) } = &u.methods[0].body.stmts[0].kind else {
            panic!("expected return");
        };
        let ExprKind::Binary { op: BinOp::Mul, lhs, .. } = &e.kind else {
            panic!("expected mul");
        };
        assert!(matches!(lhs.kind, ExprKind::Paren(_)));
    }

    #[test]
    fn else_requires_a_block() {
        let src = "class C { method m(x: int): int { if (x < 0) { return 0; } else if (x > 0) { return 1; } return 2; } }";
        assert!(parse_unit(src).is_err());
    }

    #[test]
    fn missing_initializer_is_rejected() {
        let src = "class C { method m(): void { var x: int; } }";
        let err = parse_unit(src).unwrap_err();
        assert!(err.msg.contains(":="), "unexpected message: {}", err.msg);
    }

    #[test]
    fn bool_arrays_are_rejected() {
        let src = "class C { field xs: bool[]; }";
        assert!(parse_unit(src).is_err());
    }

    #[test]
    fn reports_line_and_column() {
        let src = "class C {\n  field x: int\n}";
        let err = parse_unit(src).unwrap_err();
        assert_eq!((err.span.line, err.span.col), (3, 1));
    }
}
