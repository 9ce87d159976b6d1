//! Infers commit-relevant specifications for two versions of a DL class:
//! which dynamically validated assertions a commit added, removed, or
//! preserved, filtered and deduplicated through mutation analysis.

pub mod assertlang;
pub mod delta;
pub mod experiments;
pub mod inference;
pub mod interpreter;
pub mod minilang;
pub mod mutation;
pub mod pipeline;
pub mod testgen;
pub mod values;

pub use values::{format_real, Ty, Value};
