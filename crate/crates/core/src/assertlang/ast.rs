//! Assertion syntax: quantifier-lite first-order formulas over one program
//! point. Canonical identity of a formula is its printed text after
//! normalization, so printing here defines equality everywhere else.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggKind {
    Sum,
    SumAbs,
    Max,
    MaxAbs,
    Min,
}

impl AggKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AggKind::Sum => "sum",
            AggKind::SumAbs => "sumabs",
            AggKind::Max => "max",
            AggKind::MaxAbs => "maxabs",
            AggKind::Min => "min",
        }
    }

    pub fn all() -> [AggKind; 5] {
        [AggKind::Sum, AggKind::SumAbs, AggKind::Max, AggKind::MaxAbs, AggKind::Min]
    }
}

/// A scalar- or array-valued expression. Identifiers stay names; whether a
/// name is a field, parameter, or quantified variable is a scope question.
#[derive(Debug, Clone)]
pub enum Term {
    IntLit(i64),
    RealLit(f64),
    Ident(String),
    /// Pre-state value of a field, `old(x)`.
    Old(String),
    /// Return value at a method postcondition.
    Result,
    /// `a[i]` where `i` must be the variable quantified over `a`.
    Idx { array: Box<Term>, index: Box<Term> },
    Len(Box<Term>),
    Neg(Box<Term>),
    Arith { op: ArithOp, lhs: Box<Term>, rhs: Box<Term> },
    Agg { kind: AggKind, array: Box<Term> },
}

#[derive(Debug, Clone)]
pub enum Formula {
    /// Only produced by constant folding; not part of the surface syntax.
    Lit(bool),
    /// A bool-typed term used as an atom.
    BoolTerm(Term),
    Not(Box<Formula>),
    Cmp { op: CmpOp, lhs: Term, rhs: Term },
    IsNan(Term),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// The variable ranges over the array's indices 0..len.
    Forall { var: String, array: Term, body: Box<Formula> },
    Exists { var: String, array: Term, body: Box<Formula> },
}

impl Term {
    pub fn node_count(&self) -> usize {
        match self {
            Term::IntLit(_) | Term::RealLit(_) | Term::Ident(_) | Term::Old(_) | Term::Result => 1,
            Term::Idx { array, index } => 1 + array.node_count() + index.node_count(),
            Term::Len(t) | Term::Neg(t) | Term::Agg { array: t, .. } => 1 + t.node_count(),
            Term::Arith { lhs, rhs, .. } => 1 + lhs.node_count() + rhs.node_count(),
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::IntLit(_) | Term::RealLit(_))
    }

    /// Canonical text. Parseable back by the assertion parser.
    pub fn print(&self) -> String {
        self.print_prec(0)
    }

    fn print_prec(&self, min_prec: u8) -> String {
        match self {
            // negative literals print with the same protection as a
            // unary minus, since that is what they re-lex as
            Term::IntLit(v) => {
                let s = v.to_string();
                if *v < 0 && min_prec > 2 { format!("({s})") } else { s }
            }
            // shortest round-trip form; real literals are always finite
            Term::RealLit(v) => {
                let s = format!("{v:?}");
                if v.is_sign_negative() && min_prec > 2 { format!("({s})") } else { s }
            }
            Term::Ident(s) => s.clone(),
            Term::Old(s) => format!("old({s})"),
            Term::Result => "result".to_string(),
            Term::Idx { array, index } => format!("{}[{}]", array.print_prec(3), index.print()),
            Term::Len(t) => format!("len({})", t.print()),
            Term::Agg { kind, array } => format!("{}({})", kind.as_str(), array.print()),
            Term::Neg(t) => {
                let inner = t.print_prec(3);
                let s = format!("-{inner}");
                if min_prec > 2 { format!("({s})") } else { s }
            }
            Term::Arith { op, lhs, rhs } => {
                let p = match op {
                    ArithOp::Add | ArithOp::Sub => 1,
                    ArithOp::Mul | ArithOp::Div => 2,
                };
                let text = format!(
                    "{} {} {}",
                    lhs.print_prec(p),
                    op.as_str(),
                    rhs.print_prec(p + 1)
                );
                if p < min_prec { format!("({text})") } else { text }
            }
        }
    }

    /// Ordering key for commutative-operand sorting: program terms before
    /// literals (so `n == 0` keeps its natural shape), then smaller terms,
    /// then text.
    pub fn sort_key(&self) -> (u8, usize, String) {
        (u8::from(self.is_literal()), self.node_count(), self.print())
    }
}

impl Formula {
    pub fn node_count(&self) -> usize {
        match self {
            Formula::Lit(_) => 1,
            Formula::BoolTerm(t) | Formula::IsNan(t) => 1 + t.node_count(),
            Formula::Not(f) => 1 + f.node_count(),
            Formula::Cmp { lhs, rhs, .. } => 1 + lhs.node_count() + rhs.node_count(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.node_count() + b.node_count()
            }
            Formula::Forall { array, body, .. } | Formula::Exists { array, body, .. } => {
                2 + array.node_count() + body.node_count()
            }
        }
    }

    /// Canonical text. Precedence: `==>` binds loosest (right-assoc), then
    /// `||`, then `&&`, then comparisons, then `!`; quantifiers parenthesize
    /// except at top level because their body extends greedily to the right.
    pub fn print(&self) -> String {
        self.print_prec(0)
    }

    fn print_prec(&self, min_prec: u8) -> String {
        match self {
            Formula::Lit(b) => b.to_string(),
            Formula::BoolTerm(t) => t.print_prec(3),
            Formula::IsNan(t) => format!("isnan({})", t.print()),
            Formula::Cmp { op, lhs, rhs } => {
                let text = format!("{} {} {}", lhs.print(), op.as_str(), rhs.print());
                // a comparison under `!` must keep its parentheses
                if min_prec > 4 { format!("({text})") } else { text }
            }
            Formula::Not(f) => {
                let text = format!("!{}", f.print_prec(5));
                if min_prec > 4 { format!("({text})") } else { text }
            }
            Formula::Implies(a, b) => {
                let text = format!("{} ==> {}", a.print_prec(2), b.print_prec(1));
                if min_prec > 1 { format!("({text})") } else { text }
            }
            Formula::Or(a, b) => {
                let text = format!("{} || {}", a.print_prec(2), b.print_prec(3));
                if min_prec > 2 { format!("({text})") } else { text }
            }
            Formula::And(a, b) => {
                let text = format!("{} && {}", a.print_prec(3), b.print_prec(4));
                if min_prec > 3 { format!("({text})") } else { text }
            }
            Formula::Forall { var, array, body } => {
                let text = format!("forall {var} in {}: {}", array.print(), body.print());
                if min_prec > 0 { format!("({text})") } else { text }
            }
            Formula::Exists { var, array, body } => {
                let text = format!("exists {var} in {}: {}", array.print(), body.print());
                if min_prec > 0 { format!("({text})") } else { text }
            }
        }
    }
}

/// Identifier occurrences that would need a value from an environment:
/// current-state names, old-state names, and `result`. Quantified variables
/// are bound and excluded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FreeVar {
    Cur(String),
    Old(String),
    Result,
}

impl FreeVar {
    pub fn label(&self) -> String {
        match self {
            FreeVar::Cur(n) => n.clone(),
            FreeVar::Old(n) => format!("old({n})"),
            FreeVar::Result => "result".to_string(),
        }
    }
}

pub fn free_vars(f: &Formula) -> std::collections::BTreeSet<FreeVar> {
    let mut out = std::collections::BTreeSet::new();
    collect_formula(f, &mut Vec::new(), &mut out);
    out
}

fn collect_formula(f: &Formula, bound: &mut Vec<String>, out: &mut std::collections::BTreeSet<FreeVar>) {
    match f {
        Formula::Lit(_) => {}
        Formula::BoolTerm(t) | Formula::IsNan(t) => collect_term(t, bound, out),
        Formula::Not(g) => collect_formula(g, bound, out),
        Formula::Cmp { lhs, rhs, .. } => {
            collect_term(lhs, bound, out);
            collect_term(rhs, bound, out);
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_formula(a, bound, out);
            collect_formula(b, bound, out);
        }
        Formula::Forall { var, array, body } | Formula::Exists { var, array, body } => {
            collect_term(array, bound, out);
            bound.push(var.clone());
            collect_formula(body, bound, out);
            bound.pop();
        }
    }
}

fn collect_term(t: &Term, bound: &mut Vec<String>, out: &mut std::collections::BTreeSet<FreeVar>) {
    match t {
        Term::IntLit(_) | Term::RealLit(_) => {}
        Term::Ident(n) => {
            if !bound.iter().any(|b| b == n) {
                out.insert(FreeVar::Cur(n.clone()));
            }
        }
        Term::Old(n) => {
            out.insert(FreeVar::Old(n.clone()));
        }
        Term::Result => {
            out.insert(FreeVar::Result);
        }
        Term::Idx { array, index } => {
            collect_term(array, bound, out);
            collect_term(index, bound, out);
        }
        Term::Len(inner) | Term::Neg(inner) | Term::Agg { array: inner, .. } => {
            collect_term(inner, bound, out);
        }
        Term::Arith { lhs, rhs, .. } => {
            collect_term(lhs, bound, out);
            collect_term(rhs, bound, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident(n: &str) -> Term {
        Term::Ident(n.to_string())
    }

    #[test]
    fn printing_uses_minimal_parens() {
        let f = Formula::Implies(
            Box::new(Formula::Cmp { op: CmpOp::Eq, lhs: ident("n"), rhs: Term::IntLit(0) }),
            Box::new(Formula::Cmp {
                op: CmpOp::Eq,
                lhs: ident("value"),
                rhs: Term::Arith {
                    op: ArithOp::Add,
                    lhs: Box::new(Term::Old("value".into())),
                    rhs: Box::new(ident("d")),
                },
            }),
        );
        assert_eq!(f.print(), "n == 0 ==> value == old(value) + d");
    }

    #[test]
    fn nested_or_under_and_gets_parens() {
        let cmp = |n: &str| Formula::BoolTerm(ident(n));
        let f = Formula::And(
            Box::new(Formula::Or(Box::new(cmp("a")), Box::new(cmp("b")))),
            Box::new(cmp("c")),
        );
        assert_eq!(f.print(), "(a || b) && c");
    }

    #[test]
    fn quantifiers_parenthesize_inside_operators() {
        let body = Formula::Cmp {
            op: CmpOp::Le,
            lhs: Term::Idx { array: Box::new(ident("xs")), index: Box::new(ident("i")) },
            rhs: Term::IntLit(5),
        };
        let q = Formula::Forall { var: "i".into(), array: ident("xs"), body: Box::new(body) };
        assert_eq!(q.print(), "forall i in xs: xs[i] <= 5");
        let f = Formula::And(Box::new(Formula::BoolTerm(ident("p"))), Box::new(q));
        assert_eq!(f.print(), "p && (forall i in xs: xs[i] <= 5)");
    }

    #[test]
    fn free_vars_exclude_bound_ones() {
        let body = Formula::Cmp {
            op: CmpOp::Lt,
            lhs: ident("i"),
            rhs: ident("n"),
        };
        let q = Formula::Forall { var: "i".into(), array: Term::Old("xs".into()), body: Box::new(body) };
        let fv = free_vars(&q);
        let labels: Vec<String> = fv.iter().map(|v| v.label()).collect();
        assert_eq!(labels, vec!["n".to_string(), "old(xs)".to_string()]);
    }

    #[test]
    fn subtraction_keeps_right_parens() {
        let t = Term::Arith {
            op: ArithOp::Sub,
            lhs: Box::new(ident("a")),
            rhs: Box::new(Term::Arith {
                op: ArithOp::Sub,
                lhs: Box::new(ident("b")),
                rhs: Box::new(ident("c")),
            }),
        };
        assert_eq!(t.print(), "a - (b - c)");
    }
}
