//! Program points and the point-level diff between two versions of a class.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{Method, Unit};
use super::lexer::token_kinds;
use super::printer::print_body;
use super::token::TokKind;

/// Where an assertion is evaluated. `MethodPost("ctor")` is the
/// constructor's postcondition; the invariant has no method.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProgramPoint {
    ClassInvariant,
    MethodPost(String),
}

impl ProgramPoint {
    pub fn label(&self) -> String {
        match self {
            ProgramPoint::ClassInvariant => "inv".to_string(),
            ProgramPoint::MethodPost(m) => format!("post:{m}"),
        }
    }

    pub fn from_label(s: &str) -> Option<ProgramPoint> {
        if s == "inv" {
            Some(ProgramPoint::ClassInvariant)
        } else {
            s.strip_prefix("post:").map(|m| ProgramPoint::MethodPost(m.to_string()))
        }
    }

    pub fn method_name(&self) -> Option<&str> {
        match self {
            ProgramPoint::ClassInvariant => None,
            ProgramPoint::MethodPost(m) => Some(m),
        }
    }
}

impl fmt::Display for ProgramPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// All points of one version: the invariant, the ctor postcondition, and
/// one postcondition per method, in declaration order.
pub fn program_points(u: &Unit) -> Vec<ProgramPoint> {
    let mut pts = vec![ProgramPoint::ClassInvariant, ProgramPoint::MethodPost("ctor".to_string())];
    for m in &u.methods {
        pts.push(ProgramPoint::MethodPost(m.name.clone()));
    }
    pts
}

fn body_tokens(m: &Method) -> Vec<TokKind> {
    // printed body text always lexes
    token_kinds(&print_body(&m.body)).expect("printed body must lex")
}

/// Methods are matched across versions by full signature (name, parameter
/// names and types, return type). A changed signature counts as a removal
/// plus an addition, never as a shared point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointDiff {
    /// Points present in both versions, in pre-version declaration order.
    pub shared: Vec<ProgramPoint>,
    /// Shared methods (incl. "ctor") whose bodies differ at token level.
    pub changed_methods: Vec<String>,
    /// Method names only in the post version (or with a new signature).
    pub added_methods: Vec<String>,
    /// Method names only in the pre version (or with an old signature).
    pub removed_methods: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("class names differ: `{pre}` vs `{post}`")]
    NameMismatch { pre: String, post: String },
}

pub fn diff_points(pre: &Unit, post: &Unit) -> Result<PointDiff, DiffError> {
    if pre.name != post.name {
        return Err(DiffError::NameMismatch { pre: pre.name.clone(), post: post.name.clone() });
    }

    let mut shared = vec![ProgramPoint::ClassInvariant];
    let mut changed = Vec::new();
    let mut added: BTreeSet<String> = BTreeSet::new();
    let mut removed: BTreeSet<String> = BTreeSet::new();

    let pre_ctor = pre.effective_ctor();
    let post_ctor = post.effective_ctor();
    if pre_ctor.signature() == post_ctor.signature() {
        shared.push(ProgramPoint::MethodPost("ctor".to_string()));
        if body_tokens(&pre_ctor) != body_tokens(&post_ctor) {
            changed.push("ctor".to_string());
        }
    } else {
        removed.insert("ctor".to_string());
        added.insert("ctor".to_string());
    }

    for m in &pre.methods {
        match post.method(&m.name) {
            Some(pm) if pm.signature() == m.signature() => {
                shared.push(ProgramPoint::MethodPost(m.name.clone()));
                if body_tokens(m) != body_tokens(pm) {
                    changed.push(m.name.clone());
                }
            }
            _ => {
                removed.insert(m.name.clone());
            }
        }
    }
    for m in &post.methods {
        match pre.method(&m.name) {
            Some(pm) if pm.signature() == m.signature() => {}
            _ => {
                added.insert(m.name.clone());
            }
        }
    }

    Ok(PointDiff {
        shared,
        changed_methods: changed,
        added_methods: added.into_iter().collect(),
        removed_methods: removed.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::typecheck::load_unit;

    #[test]
    fn point_count_is_methods_plus_two() {
        let u = load_unit("class C { field n: int; method a(): int { return n; } method b(): int { return n; } }").unwrap();
        let pts = program_points(&u);
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[0], ProgramPoint::ClassInvariant);
        assert_eq!(pts[1].label(), "post:ctor");
    }

    #[test]
    fn body_edit_is_a_changed_method_not_a_removed_one() {
        let pre = load_unit("class C { field n: int; method m(d: int): int { n := n + d; return n; } }").unwrap();
        let post = load_unit("class C { field n: int; method m(d: int): int { n := n + d + d; return n; } }").unwrap();
        let d = diff_points(&pre, &post).unwrap();
        assert_eq!(d.changed_methods, vec!["m"]);
        assert!(d.added_methods.is_empty() && d.removed_methods.is_empty());
        assert_eq!(d.shared.len(), 3);
    }

    #[test]
    fn parameter_rename_splits_the_point() {
        let pre = load_unit("class C { method m(d: int): int { return d; } }").unwrap();
        let post = load_unit("class C { method m(e: int): int { return e; } }").unwrap();
        let d = diff_points(&pre, &post).unwrap();
        assert_eq!(d.added_methods, vec!["m"]);
        assert_eq!(d.removed_methods, vec!["m"]);
        // inv and ctor post remain shared
        assert_eq!(d.shared.len(), 2);
    }

    #[test]
    fn whitespace_and_comments_do_not_count_as_change() {
        let pre = load_unit("class C { method m(): int { return 1; } }").unwrap();
        let post = load_unit("class C { method m(): int {\n  // note\n  return    1; } }").unwrap();
        let d = diff_points(&pre, &post).unwrap();
        assert!(d.changed_methods.is_empty());
    }

    #[test]
    fn label_round_trip() {
        for p in [ProgramPoint::ClassInvariant, ProgramPoint::MethodPost("increment".into())] {
            assert_eq!(ProgramPoint::from_label(&p.label()), Some(p.clone()));
        }
    }
}
