//! Exact simulation of the magnetization jump chain and its rescalings.

mod chain;
mod marginal;
mod regime;

pub use chain::{
    ensemble_mean_path, ensemble_stats, ensemble_terminal, exit_probabilities,
    exit_time_diagnostic, jump_rates, simulate_chain, simulate_rescaled, ChainState, ReplicaStats,
    TrajectorySample,
};
pub use marginal::{rescaled_marginal, MarginalLaw};
pub use regime::{RegimeKind, ScalingRegime, ADMISSIBLE_RATIO, MIN_BN};
