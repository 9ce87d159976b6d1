//! Mutant generation, cross-version transplantation, commit-relevance
//! labeling, and assertion kill matrices.

pub mod kills;
pub mod operators;
pub mod relevance;
pub mod transplant;

pub use kills::{kill_matrix, replay_kill, verify_witnesses, KillMatrix};
pub use operators::{generate_mutants, MutOp, Mutant};
pub use relevance::{label_relevance, Relevance, RelevanceLabel, RelevanceError, RelevanceMode};
pub use transplant::transplant;
