//! Hypothesis classes, empirical risk minimization, exact population
//! quantities, and the quadratic and multiplier processes.

mod class;
mod fit;
mod population;
mod process;

pub use class::{Hypothesis, HypothesisClass};
pub use fit::{fit_erm_finite, fit_erm_finite_stats, fit_erm_linear, fit_erm_linear_stats, ErmRecord, ErmResult, SufficientStats};
pub use population::{excess_l2, population_quantities, population_risk, second_moment, PopulationQuantities};
pub use process::{
    basic_inequality_finite, basic_inequality_linear, multiplier_centering, multiplier_process,
    multiplier_process_stats, quadratic_process, quadratic_process_counts, BasicInequality,
};
pub(crate) use class::{l2_dist_sq, l2_inner};
