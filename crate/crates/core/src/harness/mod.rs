//! Monte Carlo experiments: rate sweeps, rate fits, the mixing-free
//! comparison, coverage of the probabilistic bounds, process diagnostics.

mod coverage;
mod diagnostics;
mod plot;
mod summary;
mod sweep;

pub use coverage::{
    calibrate_constant, coverage_experiment, exceedance_frequency, CoverageConfig, CoverageOutcome, CoverageReport,
    CoverageTrial, Phase,
};
pub use diagnostics::{process_diagnostics, DiagnosticsConfig, ProcessDiagnostics};
pub use plot::sweep_svg;
pub use summary::{
    cell_medians, fit_rate, median, mixing_free_check, monotone_inversions, summarize, CellSummary, LevelConstant, LevelFit,
    MixingFreeReport, RateFit, SweepSummary,
};
pub use sweep::{run_cell, run_sweep, CellInfo, SweepConfig, SweepContext, SweepResult, SweepRow};

use crate::error::{invalid, Result};

/// Worker pool capped by `MIXFREE_THREADS` (default: all cores).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("MIXFREE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| invalid("MIXFREE_THREADS", format!("{v:?} is not a thread count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid("MIXFREE_THREADS", e.to_string()))
}
