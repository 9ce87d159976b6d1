//! Candidate assertion generation for one program point. Four
//! exhaustive tiers run first in a fixed order, then a seeded random
//! tier fills whatever quota is left:
//!
//!   atoms -> equalities with arithmetic -> quantified -> implications -> random
//!
//! Implications go last among the structured tiers because the guard
//! cross product is the combinatorial one; the small tiers must not be
//! starved when it overflows the quota. Every candidate is stored
//! normalized, deduplicated by printed text, scope-checked, and capped
//! in size, so the result is a deterministic function of (grammar,
//! quota, seed).

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ast::{AggKind, ArithOp, CmpOp, Formula, Term};
use super::grammar::Grammar;
use super::normalize::normalize;
use super::scope::{check_formula, PointScope};
use crate::minilang::points::ProgramPoint;
use crate::values::Ty;

pub const DEFAULT_QUOTA: usize = 2000;

const ALL_CMPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

#[derive(Debug, Clone)]
pub struct Candidate {
    pub point: ProgramPoint,
    /// Normalized; `key` is its printed text.
    pub formula: Formula,
    pub key: String,
}

/// Typed term pools, in a fixed order: fields, old fields, parameters,
/// result, len terms, aggregates, literals. Literals sit at the tail so
/// index ranges can exclude them.
struct Vocab {
    ints: Vec<Term>,
    int_lit_start: usize,
    reals: Vec<Term>,
    real_lit_start: usize,
    bools: Vec<Term>,
    /// Arrays a quantifier may range over: current-state names only.
    /// Old arrays still contribute len and aggregate terms above.
    quant_arrays: Vec<(Term, Ty)>,
    bound_var: String,
}

fn build_vocab(scope: &PointScope, g: &Grammar) -> Vocab {
    let mut ints = Vec::new();
    let mut reals = Vec::new();
    let mut bools = Vec::new();
    let mut arrays: Vec<(Term, Ty)> = Vec::new();
    let mut sort = |t: Term, ty: Ty| match ty {
        Ty::Int => ints.push(t),
        Ty::Real => reals.push(t),
        Ty::Bool => bools.push(t),
        Ty::IntArray => arrays.push((t, Ty::Int)),
        Ty::RealArray => arrays.push((t, Ty::Real)),
    };
    for (n, ty) in &scope.fields {
        sort(Term::Ident(n.clone()), *ty);
    }
    if scope.old_allowed {
        for (n, ty) in &scope.fields {
            sort(Term::Old(n.clone()), *ty);
        }
    }
    for (n, ty) in &scope.params {
        sort(Term::Ident(n.clone()), *ty);
    }
    if let Some(ty) = scope.result {
        sort(Term::Result, ty);
    }
    for (a, _) in &arrays {
        ints.push(Term::Len(Box::new(a.clone())));
    }
    for (a, elem) in &arrays {
        for kind in AggKind::all() {
            let t = Term::Agg { kind, array: Box::new(a.clone()) };
            match elem {
                Ty::Int => ints.push(t),
                Ty::Real => reals.push(t),
                _ => {}
            }
        }
    }
    let int_lit_start = ints.len();
    ints.extend(g.int_lits.iter().map(|v| Term::IntLit(*v)));
    let real_lit_start = reals.len();
    reals.extend(g.real_lits.iter().map(|v| Term::RealLit(*v)));

    let quant_arrays: Vec<(Term, Ty)> = arrays
        .iter()
        .filter(|(t, _)| matches!(t, Term::Ident(_)))
        .cloned()
        .collect();
    let taken: BTreeSet<&str> = scope
        .fields
        .keys()
        .chain(scope.params.keys())
        .map(|s| s.as_str())
        .collect();
    let bound_var = ["i", "j", "k", "ix"]
        .iter()
        .find(|c| !taken.contains(**c))
        .unwrap_or(&"ix0")
        .to_string();

    Vocab { ints, int_lit_start, reals, real_lit_start, bools, quant_arrays, bound_var }
}

struct Sink {
    point: ProgramPoint,
    scope: PointScope,
    max_nodes: usize,
    quota: usize,
    seen: BTreeSet<String>,
    out: Vec<Candidate>,
}

impl Sink {
    fn full(&self) -> bool {
        self.out.len() >= self.quota
    }

    /// Normalize, drop trivia, enforce the size cap and the scope, and
    /// deduplicate. Returns whether the candidate was admitted.
    fn push(&mut self, f: Formula) -> bool {
        if self.full() {
            return false;
        }
        let n = normalize(&f);
        if matches!(n, Formula::Lit(_)) {
            return false;
        }
        if n.node_count() > self.max_nodes {
            return false;
        }
        if check_formula(&self.scope, &n).is_err() {
            return false;
        }
        let key = n.print();
        if !self.seen.insert(key.clone()) {
            return false;
        }
        self.out.push(Candidate { point: self.point.clone(), formula: n, key });
        true
    }
}

pub fn generate_candidates(g: &Grammar, quota: usize, seed: u64) -> Vec<Candidate> {
    let v = build_vocab(&g.scope, g);
    // literal pools are always non-empty, so emptiness means no
    // program-derived term of any type exists at this point
    if v.int_lit_start == 0 && v.real_lit_start == 0 && v.bools.is_empty() {
        return Vec::new();
    }
    let mut sink = Sink {
        point: g.scope.point.clone(),
        scope: g.scope.clone(),
        max_nodes: g.max_nodes,
        quota,
        seen: BTreeSet::new(),
        out: Vec::new(),
    };
    tier_atoms(&mut sink, &v);
    let atoms_end = sink.out.len();
    tier_eq_arith(&mut sink, &v);
    let eq_end = sink.out.len();
    tier_quantified(&mut sink, &v);
    tier_implications(&mut sink, g, atoms_end, eq_end);
    tier_random(&mut sink, &v, g, seed);
    sink.out
}

fn tier_atoms(sink: &mut Sink, v: &Vocab) {
    for b in &v.bools {
        sink.push(Formula::BoolTerm(b.clone()));
        sink.push(Formula::Not(Box::new(Formula::BoolTerm(b.clone()))));
    }
    for r in &v.reals[..v.real_lit_start] {
        sink.push(Formula::IsNan(r.clone()));
    }
    for (list, lit_start) in [(&v.ints, v.int_lit_start), (&v.reals, v.real_lit_start)] {
        for i in 0..list.len() {
            if i >= lit_start {
                break; // the rest are literal-literal pairs
            }
            for j in (i + 1)..list.len() {
                for op in ALL_CMPS {
                    sink.push(Formula::Cmp { op, lhs: list[i].clone(), rhs: list[j].clone() });
                }
            }
        }
    }
}

fn tier_eq_arith(sink: &mut Sink, v: &Vocab) {
    for (list, lit_start) in [(&v.ints, v.int_lit_start), (&v.reals, v.real_lit_start)] {
        for t in &list[..lit_start] {
            for (ai, a) in list.iter().enumerate() {
                for (bi, b) in list.iter().enumerate() {
                    if ai >= lit_start && bi >= lit_start {
                        continue;
                    }
                    for op in [ArithOp::Add, ArithOp::Sub] {
                        // + is commutative, so only one operand order;
                        // a - a is a roundabout zero, skip it
                        if op == ArithOp::Add && ai > bi {
                            continue;
                        }
                        if op == ArithOp::Sub && ai == bi {
                            continue;
                        }
                        sink.push(Formula::Cmp {
                            op: CmpOp::Eq,
                            lhs: t.clone(),
                            rhs: Term::Arith {
                                op,
                                lhs: Box::new(a.clone()),
                                rhs: Box::new(b.clone()),
                            },
                        });
                    }
                }
            }
        }
    }
}

fn tier_quantified(sink: &mut Sink, v: &Vocab) {
    let var = &v.bound_var;
    for (arr, elem) in &v.quant_arrays {
        let elem_term = Term::Idx {
            array: Box::new(arr.clone()),
            index: Box::new(Term::Ident(var.clone())),
        };
        let scalars = match elem {
            Ty::Int => &v.ints,
            _ => &v.reals,
        };
        let mut bodies: Vec<Formula> = Vec::new();
        for s in scalars {
            for op in ALL_CMPS {
                bodies.push(Formula::Cmp { op, lhs: elem_term.clone(), rhs: s.clone() });
            }
        }
        if *elem == Ty::Real {
            bodies.push(Formula::IsNan(elem_term.clone()));
        }
        for s in &v.ints {
            for op in ALL_CMPS {
                bodies.push(Formula::Cmp { op, lhs: Term::Ident(var.clone()), rhs: s.clone() });
            }
        }
        for body in bodies {
            sink.push(Formula::Forall {
                var: var.clone(),
                array: arr.clone(),
                body: Box::new(body.clone()),
            });
            sink.push(Formula::Exists {
                var: var.clone(),
                array: arr.clone(),
                body: Box::new(body),
            });
        }
    }
}

fn tier_implications(sink: &mut Sink, g: &Grammar, atoms_end: usize, eq_end: usize) {
    let consequents: Vec<(String, Formula)> = sink.out[..eq_end]
        .iter()
        .map(|c| (c.key.clone(), c.formula.clone()))
        .collect();
    // atom consequents across all guards first; they are the cheap,
    // high-value implications if the quota cuts this tier short
    for range in [0..atoms_end, atoms_end..eq_end] {
        for guard in &g.guards {
            let gkey = guard.print();
            for (ckey, cons) in &consequents[range.clone()] {
                if *ckey == gkey {
                    continue;
                }
                if sink.full() {
                    return;
                }
                sink.push(Formula::Implies(Box::new(guard.clone()), Box::new(cons.clone())));
            }
        }
    }
}

fn tier_random(sink: &mut Sink, v: &Vocab, g: &Grammar, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = sink.quota.saturating_mul(200);
    let mut attempts = 0usize;
    let mut consecutive_misses = 0u32;
    while !sink.full() && attempts < max_attempts && consecutive_misses < 5000 {
        attempts += 1;
        let admitted = match random_formula(&mut rng, v, g) {
            Some(f) => sink.push(f),
            None => false,
        };
        if admitted {
            consecutive_misses = 0;
        } else {
            consecutive_misses += 1;
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> Option<&'a T> {
    if xs.is_empty() {
        None
    } else {
        Some(&xs[rng.gen_range(0..xs.len())])
    }
}

fn random_formula(rng: &mut ChaCha8Rng, v: &Vocab, g: &Grammar) -> Option<Formula> {
    match rng.gen_range(0u32..100) {
        0..=39 => random_cmp(rng, v),
        40..=59 => random_eq_arith(rng, v),
        60..=74 => {
            let ante = if !g.guards.is_empty() && rng.gen_bool(0.5) {
                pick(rng, &g.guards)?.clone()
            } else {
                random_cmp(rng, v)?
            };
            let cons = if rng.gen_bool(0.5) {
                random_cmp(rng, v)?
            } else {
                random_eq_arith(rng, v)?
            };
            Some(Formula::Implies(Box::new(ante), Box::new(cons)))
        }
        75..=84 => random_quantified(rng, v),
        85..=94 => {
            let a = random_cmp(rng, v)?;
            let b = random_cmp(rng, v)?;
            if rng.gen_bool(0.5) {
                Some(Formula::And(Box::new(a), Box::new(b)))
            } else {
                Some(Formula::Or(Box::new(a), Box::new(b)))
            }
        }
        _ => {
            if !v.bools.is_empty() && (v.reals[..v.real_lit_start].is_empty() || rng.gen_bool(0.5)) {
                let b = pick(rng, &v.bools)?.clone();
                let atom = Formula::BoolTerm(b);
                if rng.gen_bool(0.5) {
                    Some(Formula::Not(Box::new(atom)))
                } else {
                    Some(atom)
                }
            } else {
                let t = pick(rng, &v.reals[..v.real_lit_start])?.clone();
                Some(Formula::IsNan(t))
            }
        }
    }
}

fn random_cmp(rng: &mut ChaCha8Rng, v: &Vocab) -> Option<Formula> {
    let (list, lit_start) = if (v.ints.len() >= 2 && rng.gen_bool(0.5)) || v.reals.len() < 2 {
        (&v.ints, v.int_lit_start)
    } else {
        (&v.reals, v.real_lit_start)
    };
    if list.len() < 2 || lit_start == 0 {
        return None;
    }
    let i = rng.gen_range(0..lit_start); // at least one non-literal side
    let j = rng.gen_range(0..list.len());
    if i == j {
        return None;
    }
    let op = *pick(rng, &ALL_CMPS)?;
    Some(Formula::Cmp { op, lhs: list[i].clone(), rhs: list[j].clone() })
}

fn random_eq_arith(rng: &mut ChaCha8Rng, v: &Vocab) -> Option<Formula> {
    let (list, lit_start) = if (v.int_lit_start > 0 && rng.gen_bool(0.5)) || v.real_lit_start == 0 {
        (&v.ints, v.int_lit_start)
    } else {
        (&v.reals, v.real_lit_start)
    };
    if lit_start == 0 || list.len() < 2 {
        return None;
    }
    let t = list[rng.gen_range(0..lit_start)].clone();
    let a = rng.gen_range(0..list.len());
    let b = rng.gen_range(0..list.len());
    if a >= lit_start && b >= lit_start {
        return None;
    }
    let op = *pick(rng, &[ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div])?;
    Some(Formula::Cmp {
        op: CmpOp::Eq,
        lhs: t,
        rhs: Term::Arith {
            op,
            lhs: Box::new(list[a].clone()),
            rhs: Box::new(list[b].clone()),
        },
    })
}

fn random_quantified(rng: &mut ChaCha8Rng, v: &Vocab) -> Option<Formula> {
    let (arr, elem) = pick(rng, &v.quant_arrays)?;
    let var = v.bound_var.clone();
    let elem_term = Term::Idx {
        array: Box::new(arr.clone()),
        index: Box::new(Term::Ident(var.clone())),
    };
    let body = match rng.gen_range(0u32..3) {
        0 => {
            let scalars = match elem {
                Ty::Int => &v.ints,
                _ => &v.reals,
            };
            let s = pick(rng, scalars)?.clone();
            let op = *pick(rng, &ALL_CMPS)?;
            Formula::Cmp { op, lhs: elem_term, rhs: s }
        }
        1 => {
            let s = pick(rng, &v.ints)?.clone();
            let op = *pick(rng, &ALL_CMPS)?;
            Formula::Cmp { op, lhs: Term::Ident(var.clone()), rhs: s }
        }
        _ => {
            if *elem == Ty::Real {
                Formula::IsNan(elem_term)
            } else {
                let s = pick(rng, &v.ints)?.clone();
                Formula::Cmp { op: CmpOp::Ne, lhs: elem_term, rhs: s }
            }
        }
    };
    if rng.gen_bool(0.5) {
        Some(Formula::Forall { var, array: arr.clone(), body: Box::new(body) })
    } else {
        Some(Formula::Exists { var, array: arr.clone(), body: Box::new(body) })
    }
}
