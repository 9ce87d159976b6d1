//! The assertion side of the house: a quantifier-lite formula language
//! over program points, with parsing, scope checking, three-valued
//! evaluation, canonical normalization, bounded equivalence, and
//! grammar-driven candidate generation.

pub mod ast;
pub mod equiv;
pub mod eval;
pub mod fuzz;
pub mod grammar;
pub mod normalize;
pub mod parser;
pub mod scope;

pub use ast::{Formula, FreeVar, Term};
pub use equiv::{bounded_equiv, signature, DomainConfig, Equivalence};
pub use eval::{eval_formula, EvalErrorKind, TriVal};
pub use fuzz::{generate_candidates, Candidate};
pub use grammar::{build_grammar, Grammar};
pub use normalize::{normalize, normalized_key};
pub use parser::parse_formula;
pub use scope::{check_formula, scope_for_point, PointScope};
