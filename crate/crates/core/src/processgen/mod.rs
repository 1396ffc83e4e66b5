//! Stationary finite-state Markov chains and the regression problems they drive.

mod chain;
mod problem;
mod sample;

pub use chain::{
    beta_coefficients, stationary_distribution, total_variation, BetaSequence, MarkovChainModel,
};
pub use problem::{NoiseKind, NoiseSpec, RegressionProblem, TargetModel};
pub use sample::{kwise_independent_surrogate, sample_trajectory, ProblemSampler, Trajectory};
