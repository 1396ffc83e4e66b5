use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{SweepConfig, SweepContext};
use crate::blocking::{block_second_moment, blocked_bernstein_bound};
use crate::bounds::{serde_inf, Constants, SphereGrid};
use crate::config::ProblemSpec;
use crate::erm::HypothesisClass;
use crate::error::{invalid, Result};
use crate::processgen::ProblemSampler;
use crate::seed::{derive_seed, rng_from_seed};

fn default_delta() -> f64 {
    0.05
}

fn one() -> f64 {
    1.0
}

fn infinity() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoverageConfig {
    /// Mean of a centred state observable on `k`-wise independent blocks of
    /// the chain against the blocked Bernstein bound.
    #[serde(rename_all = "camelCase")]
    BlockedBernstein {
        problem: ProblemSpec,
        #[serde(default)]
        mixing_level: Option<f64>,
        /// One value per chain state; centred under `π` before use.
        observable: Vec<f64>,
        /// Bound on the centred observable; defaults to its largest magnitude.
        #[serde(default)]
        b: Option<f64>,
        n: usize,
        k: usize,
        #[serde(default = "default_delta")]
        delta: f64,
        replicates: usize,
        #[serde(default)]
        seed: u64,
    },
    /// ERM excess risk against `c2 (r⋆² + V ln(1/δ)/n)`, with `c2` calibrated
    /// on one set of seeds and checked on a disjoint one.
    #[serde(rename_all = "camelCase")]
    RiskBound {
        problem: ProblemSpec,
        #[serde(default)]
        mixing_level: Option<f64>,
        #[serde(default)]
        class: Option<HypothesisClass>,
        n: usize,
        #[serde(default = "default_delta")]
        delta: f64,
        calibration_replicates: usize,
        validation_replicates: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        q: f64,
        #[serde(default = "infinity", with = "serde_inf")]
        q_conj: f64,
        #[serde(default = "infinity", with = "serde_inf")]
        p: f64,
        #[serde(default)]
        constants: Constants,
        #[serde(default)]
        certification: SphereGrid,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Calibration,
    Validation,
}

/// One line of `coverage.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageTrial {
    pub trial: usize,
    pub phase: Phase,
    pub realized: f64,
    pub bound: f64,
    pub exceeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageReport {
    pub kind: String,
    pub delta: f64,
    /// Nominal exceedance probability: `δ`, or `4δ` for the risk bound.
    pub nominal: f64,
    pub replicates: usize,
    pub exceedances: usize,
    pub frequency: f64,
    /// Binomial standard error at the nominal level.
    pub std_error: f64,
    /// `nominal + 3 stdError`.
    pub threshold: f64,
    pub within: bool,
    /// Calibrated `c2` and its exceedance on the calibration seeds.
    pub calibrated_c2: Option<f64>,
    pub calibration_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageOutcome {
    pub report: CoverageReport,
    pub trials: Vec<CoverageTrial>,
}

impl CoverageOutcome {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for t in &self.trials {
            w.serialize(t)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CoverageTrial>> {
        let mut r = csv::Reader::from_reader(reader);
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }
}

/// Fraction of `realized[i] > bound[i]`.
pub fn exceedance_frequency(realized: &[f64], bound: &[f64]) -> f64 {
    if realized.is_empty() {
        return 0.0;
    }
    realized.iter().zip(bound).filter(|(r, b)| r > b).count() as f64 / realized.len() as f64
}

/// Smallest `c` with at most `⌊δ m⌋` of the `ratios` strictly above it.
pub fn calibrate_constant(ratios: &[f64], delta: f64) -> f64 {
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let allowed = (delta * m as f64).floor() as usize;
    if allowed >= m {
        return 0.0;
    }
    sorted[m - allowed - 1].max(0.0)
}

fn report(kind: &str, delta: f64, nominal: f64, trials: &[CoverageTrial], phase: Phase) -> CoverageReport {
    let used: Vec<&CoverageTrial> = trials.iter().filter(|t| t.phase == phase).collect();
    let m = used.len();
    let exceedances = used.iter().filter(|t| t.exceeded).count();
    let frequency = if m == 0 { 0.0 } else { exceedances as f64 / m as f64 };
    let std_error = (nominal * (1.0 - nominal) / m.max(1) as f64).sqrt();
    let threshold = nominal + 3.0 * std_error;
    CoverageReport {
        kind: kind.to_string(),
        delta,
        nominal,
        replicates: m,
        exceedances,
        frequency,
        std_error,
        threshold,
        within: frequency <= threshold,
        calibrated_c2: None,
        calibration_frequency: None,
    }
}

pub fn coverage_experiment(config: &CoverageConfig) -> Result<CoverageOutcome> {
    super::thread_pool()?.install(|| match config {
        CoverageConfig::BlockedBernstein { problem, mixing_level, observable, b, n, k, delta, replicates, seed } => {
            blocked_bernstein(problem, *mixing_level, observable, *b, *n, *k, *delta, *replicates, *seed)
        }
        CoverageConfig::RiskBound {
            problem,
            mixing_level,
            class,
            n,
            delta,
            calibration_replicates,
            validation_replicates,
            seed,
            q,
            q_conj,
            p,
            constants,
            certification,
        } => {
            let sweep = |master: u64, replicates: usize| SweepConfig {
                problem: problem.clone(),
                class: class.clone(),
                n_grid: vec![*n],
                mixing_levels: vec![mixing_level.unwrap_or_else(|| default_level(problem))],
                replicates,
                seed: master,
                delta: *delta,
                q: *q,
                q_conj: *q_conj,
                p: *p,
                constants: *constants,
                certification: *certification,
            };
            risk_bound_coverage(
                &sweep(derive_seed(*seed, &[0]), *calibration_replicates),
                &sweep(derive_seed(*seed, &[1]), *validation_replicates),
            )
        }
    })
}

fn default_level(problem: &ProblemSpec) -> f64 {
    match problem {
        ProblemSpec::Hypercube { spectral, .. } => *spectral,
        ProblemSpec::Explicit { .. } => 0.0,
    }
}

#[allow(clippy::too_many_arguments)]
fn blocked_bernstein(
    spec: &ProblemSpec,
    mixing_level: Option<f64>,
    observable: &[f64],
    b: Option<f64>,
    n: usize,
    k: usize,
    delta: f64,
    replicates: usize,
    seed: u64,
) -> Result<CoverageOutcome> {
    if replicates == 0 {
        return Err(invalid("replicates", "must be at least 1"));
    }
    let problem = spec.build_at(mixing_level.unwrap_or_else(|| default_level(spec)))?;
    let chain = problem.chain();
    if observable.len() != chain.states() {
        return Err(invalid("observable", format!("needs {} entries, one per state", chain.states())));
    }
    let pi = chain.stationary();
    let mean: f64 = observable.iter().zip(pi).map(|(v, p)| v * p).sum();
    let centred: Vec<f64> = observable.iter().map(|v| v - mean).collect();
    let b = b.unwrap_or_else(|| centred.iter().fold(0.0, |a, v| a.max(v.abs())));
    let bound = blocked_bernstein_bound(b, block_second_moment(chain, &centred, k)?, n, k, delta)?;
    let sampler = ProblemSampler::new(&problem);
    let trials: Vec<CoverageTrial> = (0..replicates)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(derive_seed(seed, &[trial as u64]));
            let mut sum = 0.0;
            sampler.run_blocks(n, k, &mut rng, |s, _| sum += centred[s]);
            let realized = sum / n as f64;
            CoverageTrial { trial, phase: Phase::Validation, realized, bound, exceeded: realized > bound }
        })
        .collect();
    Ok(CoverageOutcome { report: report("blocked-bernstein", delta, delta, &trials, Phase::Validation), trials })
}

fn risk_bound_coverage(calibration: &SweepConfig, validation: &SweepConfig) -> Result<CoverageOutcome> {
    let delta = calibration.delta;
    let n = calibration.n_grid[0];
    let cal_ctx = SweepContext::new(calibration)?;
    let bound_report = cal_ctx.cell_report(n, 0)?;
    // the risk bound is linear in c2
    let unit = bound_report.risk_bound / bound_report.c2;
    let sample = |ctx: &SweepContext, reps: usize| -> Result<Vec<f64>> {
        (0..reps).into_par_iter().map(|r| ctx.run_cell(n, 0, r)).collect()
    };
    let cal = sample(&cal_ctx, calibration.replicates)?;
    let val = sample(&SweepContext::new(validation)?, validation.replicates)?;
    let ratios: Vec<f64> = cal.iter().map(|e| e / unit).collect();
    let c2 = calibrate_constant(&ratios, delta);
    let bound = c2 * unit;
    let trials: Vec<CoverageTrial> = cal
        .iter()
        .map(|&e| (Phase::Calibration, e))
        .chain(val.iter().map(|&e| (Phase::Validation, e)))
        .enumerate()
        .map(|(trial, (phase, realized))| CoverageTrial { trial, phase, realized, bound, exceeded: realized > bound })
        .collect();
    let mut rep = report("risk-bound", delta, 4.0 * delta, &trials, Phase::Validation);
    rep.calibrated_c2 = Some(c2);
    rep.calibration_frequency = Some(exceedance_frequency(&cal, &vec![bound; cal.len()]));
    Ok(CoverageOutcome { report: rep, trials })
}
