//! Re-applying a mutant to the other version of the class. Safe exactly
//! when the host method's body is token-identical in both versions: the
//! trees then have the same shape, so the recorded path addresses the
//! same node.

use super::operators::{apply_edit, Mutant};
use crate::minilang::ast::{Method, Unit};
use crate::minilang::lexer::token_kinds;
use crate::minilang::printer::print_body;
use crate::minilang::typecheck::check_unit;

fn find_method<'u>(u: &'u Unit, name: &str) -> Option<Method> {
    if name == "ctor" {
        u.ctor.clone()
    } else {
        u.method(name).cloned()
    }
}

pub fn bodies_token_identical(a: &Unit, b: &Unit, method: &str) -> bool {
    match (find_method(a, method), find_method(b, method)) {
        (Some(ma), Some(mb)) => {
            token_kinds(&print_body(&ma.body)).expect("printed body lexes")
                == token_kinds(&print_body(&mb.body)).expect("printed body lexes")
        }
        _ => false,
    }
}

/// The same (operator, path, variant) applied to `target`, or None when
/// the host method's body differs between the units (or the transplanted
/// unit no longer type checks, which a body-identical host rules out in
/// practice).
pub fn transplant(m: &Mutant, source: &Unit, target: &Unit) -> Option<Mutant> {
    if !bodies_token_identical(source, target, &m.method) {
        return None;
    }
    let mut unit = target.clone();
    apply_edit(&mut unit, &m.method, &m.path, &m.edit)?;
    if check_unit(&unit).is_err() {
        return None;
    }
    Some(Mutant { unit, ..m.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::printer::print_unit;
    use crate::minilang::typecheck::load_unit;
    use crate::mutation::operators::generate_mutants;

    const PRE: &str = "class Sum {\n  field n: int;\n  field value: real;\n  ctor() {\n    n := 0;\n    value := 0.0;\n  }\n  method increment(d: real): void {\n    n := n + 1;\n    value := value + d;\n  }\n  method getResult(): real {\n    return value;\n  }\n}";
    const POST: &str = "class Sum {\n  field n: int;\n  field value: real;\n  ctor() {\n    n := 0;\n    value := 0.0;\n  }\n  method increment(d: real): void {\n    n := n + 1;\n    value := value + d * 1.0;\n  }\n  method getResult(): real {\n    return value;\n  }\n}";

    #[test]
    fn identity_transplant_reproduces_the_mutant() {
        let u = load_unit(PRE).unwrap();
        for m in generate_mutants(&u, &[]) {
            let t = transplant(&m, &u, &u).expect("identity always applies");
            assert_eq!(print_unit(&t.unit), print_unit(&m.unit));
        }
    }

    #[test]
    fn unchanged_method_mutants_carry_over() {
        let pre = load_unit(PRE).unwrap();
        let post = load_unit(POST).unwrap();
        let ms = generate_mutants(&post, &[]);
        let in_ctor: Vec<_> = ms.iter().filter(|m| m.method == "ctor").collect();
        assert!(!in_ctor.is_empty());
        for m in &in_ctor {
            let t = transplant(m, &post, &pre).expect("the ctor is unchanged");
            assert!(check_unit(&t.unit).is_ok());
        }
    }

    #[test]
    fn changed_method_mutants_do_not_carry_over() {
        let pre = load_unit(PRE).unwrap();
        let post = load_unit(POST).unwrap();
        let ms = generate_mutants(&post, &[]);
        let changed: Vec<_> = ms.iter().filter(|m| m.method == "increment").collect();
        assert!(!changed.is_empty());
        for m in &changed {
            assert!(transplant(m, &post, &pre).is_none());
        }
    }
}
