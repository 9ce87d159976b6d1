//! Desk-scale evaluation protocol: relevance-restricted mutation scores,
//! selection simulations, and the rank statistics used to compare pools.

pub mod sim;
pub mod stats;

pub use sim::{
    rms, simulate_fixed_size, simulate_to_target, CostResult, CostRow, CostSummary, Pool,
    PoolSizeMean, ScoreError, SimConfig, SimError, SimResult, SimRow, SizeStats,
};
pub use stats::{mann_whitney_u, vargha_delaney_a12};
