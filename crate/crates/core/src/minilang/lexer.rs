use super::token::{Kw, Punct, Span, TokKind, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {msg}")]
pub struct LexError {
    pub span: Span,
    pub msg: String,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            if bytes[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        let span = Span { line, col };

        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && i + 1 < bytes.len() && bytes[i + 1] == '/' {
            while i < bytes.len() && bytes[i] != '\n' {
                bump!();
            }
            continue;
        }

        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                bump!();
            }
            // real: digits '.' digits, the fractional part is mandatory
            if i + 1 < bytes.len() && bytes[i] == '.' && bytes[i + 1].is_ascii_digit() {
                bump!();
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    bump!();
                }
                // optional exponent, as produced by the printer: e0, e-12
                if i < bytes.len() && bytes[i] == 'e' {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '-' || bytes[j] == '+') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while i < j {
                            bump!();
                        }
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            bump!();
                        }
                    }
                }
                let text: String = bytes[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| LexError { span, msg: format!("bad real literal `{text}`") })?;
                if !v.is_finite() {
                    return Err(LexError { span, msg: format!("real literal `{text}` out of range") });
                }
                out.push(Token { kind: TokKind::RealLit(v.to_bits()), span });
            } else {
                let text: String = bytes[start..i].iter().collect();
                let v: i64 = text
                    .parse()
                    .map_err(|_| LexError { span, msg: format!("int literal `{text}` out of range") })?;
                out.push(Token { kind: TokKind::IntLit(v), span });
            }
            continue;
        }

        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                bump!();
            }
            let text: String = bytes[start..i].iter().collect();
            let kind = match Kw::lookup(&text) {
                Some(kw) => TokKind::Kw(kw),
                None => TokKind::Ident(text),
            };
            out.push(Token { kind, span });
            continue;
        }

        let two = if i + 1 < bytes.len() {
            Some((bytes[i], bytes[i + 1]))
        } else {
            None
        };
        let two_punct = match two {
            Some((':', '=')) => Some(Punct::Assign),
            Some(('<', '=')) => Some(Punct::Le),
            Some(('>', '=')) => Some(Punct::Ge),
            Some(('=', '=')) => Some(Punct::EqEq),
            Some(('!', '=')) => Some(Punct::Ne),
            Some(('&', '&')) => Some(Punct::AndAnd),
            Some(('|', '|')) => Some(Punct::OrOr),
            _ => None,
        };
        if let Some(p) = two_punct {
            bump!();
            bump!();
            out.push(Token { kind: TokKind::Punct(p), span });
            continue;
        }

        let one = match c {
            '{' => Punct::LBrace,
            '}' => Punct::RBrace,
            '(' => Punct::LParen,
            ')' => Punct::RParen,
            '[' => Punct::LBracket,
            ']' => Punct::RBracket,
            ';' => Punct::Semi,
            ':' => Punct::Colon,
            ',' => Punct::Comma,
            '+' => Punct::Plus,
            '-' => Punct::Minus,
            '*' => Punct::Star,
            '/' => Punct::Slash,
            '%' => Punct::Percent,
            '<' => Punct::Lt,
            '>' => Punct::Gt,
            '!' => Punct::Bang,
            _ => {
                return Err(LexError { span, msg: format!("unexpected character `{c}`") });
            }
        };
        bump!();
        out.push(Token { kind: TokKind::Punct(one), span });
    }

    Ok(out)
}

/// Token kinds only, spans stripped. This is the unit of comparison for
/// "same body" checks across versions and for mutant dedup.
pub fn token_kinds(src: &str) -> Result<Vec<TokKind>, LexError> {
    Ok(lex(src)?.into_iter().map(|t| t.kind).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_assignment_and_colon_apart() {
        let toks = lex("x := y : int").unwrap();
        let kinds: Vec<_> = toks.into_iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokKind::Ident("x".into()),
                TokKind::Punct(Punct::Assign),
                TokKind::Ident("y".into()),
                TokKind::Punct(Punct::Colon),
                TokKind::Kw(Kw::Int),
            ]
        );
    }

    #[test]
    fn comments_and_reals_lex() {
        let toks = lex("// note\n1.5 2 nan").unwrap();
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[0].kind, TokKind::RealLit(1.5f64.to_bits()));
        assert_eq!(toks[1].kind, TokKind::IntLit(2));
        assert_eq!(toks[2].kind, TokKind::Kw(Kw::Nan));
        assert_eq!(toks[0].span, Span { line: 2, col: 1 });
    }

    #[test]
    fn printer_style_exponent_reals_lex() {
        let toks = lex("2.5000000000000000e0 1.0e-3").unwrap();
        assert_eq!(toks[0].kind, TokKind::RealLit(2.5f64.to_bits()));
        assert_eq!(toks[1].kind, TokKind::RealLit(0.001f64.to_bits()));
    }

    #[test]
    fn int_overflow_is_a_lex_error() {
        assert!(lex("9223372036854775808").is_err());
        assert!(lex("9223372036854775807").is_ok());
    }
}
