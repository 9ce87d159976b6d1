//! Runtime values shared by the DL interpreter, the assertion evaluator,
//! and the bounded-domain equivalence checker.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Scalar and array types of the DL class language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ty {
    Int,
    Real,
    Bool,
    IntArray,
    RealArray,
}

impl Ty {
    pub fn is_array(self) -> bool {
        matches!(self, Ty::IntArray | Ty::RealArray)
    }

    pub fn elem(self) -> Option<Ty> {
        match self {
            Ty::IntArray => Some(Ty::Int),
            Ty::RealArray => Some(Ty::Real),
            _ => None,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Ty::Int => "int",
            Ty::Real => "real",
            Ty::Bool => "bool",
            Ty::IntArray => "int[]",
            Ty::RealArray => "real[]",
        };
        f.write_str(s)
    }
}

/// A DL runtime value. Arrays have value semantics: assignment copies.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    IntArray(Vec<i64>),
    RealArray(Vec<f64>),
}

/// Structural identity, not program equality: reals compare bitwise, so
/// nan == nan here and -0.0 != 0.0. Program `==` lives in the interpreter.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::IntArray(a), Value::IntArray(b)) => a == b,
            (Value::RealArray(a), Value::RealArray(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Value {
    pub fn ty(&self) -> Ty {
        match self {
            Value::Int(_) => Ty::Int,
            Value::Real(_) => Ty::Real,
            Value::Bool(_) => Ty::Bool,
            Value::IntArray(_) => Ty::IntArray,
            Value::RealArray(_) => Ty::RealArray,
        }
    }

    /// Default value a field holds before the constructor body runs.
    pub fn default_for(ty: Ty) -> Value {
        match ty {
            Ty::Int => Value::Int(0),
            Ty::Real => Value::Real(0.0),
            Ty::Bool => Value::Bool(false),
            Ty::IntArray => Value::IntArray(Vec::new()),
            Ty::RealArray => Value::RealArray(Vec::new()),
        }
    }

    /// Canonical text form used by observable outputs, hashes, and reports.
    /// Reals carry 17 significant digits; nan and the infinities are tokens.
    pub fn canon(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Real(v) => format_real(*v),
            Value::Bool(v) => v.to_string(),
            Value::IntArray(xs) => {
                let items: Vec<String> = xs.iter().map(|v| v.to_string()).collect();
                format!("[{}]", items.join(","))
            }
            Value::RealArray(xs) => {
                let items: Vec<String> = xs.iter().map(|v| format_real(*v)).collect();
                format!("[{}]", items.join(","))
            }
        }
    }

    /// Bit-level equality: distinguishes nan payload classes as one nan,
    /// but keeps -0.0 and 0.0 apart the way the canonical text does.
    pub fn observably_eq(&self, other: &Value) -> bool {
        self.canon() == other.canon()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canon())
    }
}

/// 17-significant-digit rendering with dedicated tokens for the
/// non-finite values. `-0.0` keeps its sign, matching bit-level identity.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{:.16e}", v)
    }
}

/// Total order on reals for canonical sorting: nan sorts last, -0 before +0.
pub fn real_cmp(a: f64, b: f64) -> std::cmp::Ordering {
    a.total_cmp(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting_carries_17_digits_and_tokens() {
        assert_eq!(format_real(2.5), "2.5000000000000000e0");
        assert_eq!(format_real(f64::NAN), "nan");
        assert_eq!(format_real(f64::INFINITY), "inf");
        assert_eq!(format_real(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_real(-0.0), "-0.0000000000000000e0");
    }

    #[test]
    fn canonical_text_round_trips_seventeen_digits() {
        let v = 0.1 + 0.2;
        let s = format_real(v);
        let back: f64 = s.parse().unwrap();
        assert_eq!(v.to_bits(), back.to_bits());
    }

    #[test]
    fn array_values_render_elementwise() {
        let v = Value::RealArray(vec![1.0, f64::NAN]);
        assert_eq!(v.canon(), "[1.0000000000000000e0,nan]");
    }
}
