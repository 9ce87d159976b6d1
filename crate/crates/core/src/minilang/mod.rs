//! The DL class language: one class per file, int/real/bool scalars,
//! int[]/real[] arrays with value semantics, and a deliberately small
//! statement repertoire so versions of a class stay diffable.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod points;
pub mod printer;
pub mod token;
pub mod typecheck;

pub use ast::{BinOp, Block, Builtin, Expr, ExprKind, Field, Method, Param, Stmt, StmtKind, UnOp, Unit};
pub use lexer::{lex, token_kinds, LexError};
pub use parser::{parse_unit, ParseError};
pub use points::{diff_points, program_points, DiffError, PointDiff, ProgramPoint};
pub use printer::{print_body, print_expr, print_unit};
pub use token::{Span, TokKind};
pub use typecheck::{check_unit, load_unit, Diagnostic};
