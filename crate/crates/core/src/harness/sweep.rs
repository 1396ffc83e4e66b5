use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{compute_bound_report, serde_inf, BoundReport, BoundSettings, Constants, SphereGrid};
use crate::config::ProblemSpec;
use crate::erm::{excess_l2, fit_erm_finite_stats, fit_erm_linear_stats, population_quantities, HypothesisClass, PopulationQuantities, SufficientStats};
use crate::error::{invalid, Result};
use crate::processgen::{ProblemSampler, RegressionProblem};
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

/// A grid of sample sizes crossed with a grid of dependence levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepConfig {
    pub problem: ProblemSpec,
    /// Defaults to the linear class on the problem's covariates.
    #[serde(default)]
    pub class: Option<HypothesisClass>,
    pub n_grid: Vec<usize>,
    pub mixing_levels: Vec<f64>,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "infinity", with = "serde_inf")]
    pub q_conj: f64,
    #[serde(default = "infinity", with = "serde_inf")]
    pub p: f64,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub certification: SphereGrid,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(invalid("nGrid", "is empty"));
        }
        if self.mixing_levels.is_empty() {
            return Err(invalid("mixingLevels", "is empty"));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 2 || n % 2 != 0) {
            return Err(invalid("nGrid", format!("{n} is not an even size >= 2; the block length must divide n/2")));
        }
        Ok(())
    }

    pub fn class_for(&self, problem: &RegressionProblem) -> HypothesisClass {
        self.class.clone().unwrap_or(HypothesisClass::Linear { dim: problem.dim() })
    }

    pub fn bound_settings(&self, n: usize) -> BoundSettings {
        BoundSettings {
            n,
            delta: self.delta,
            q: self.q,
            q_conj: self.q_conj,
            p: self.p,
            k: None,
            constants: self.constants,
            certification: self.certification,
            weak_variance: None,
        }
    }
}

/// Bound-side quantities of one `(n, mixing level)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellInfo {
    pub n: usize,
    pub mixing_level: f64,
    pub k: usize,
    pub n_quad: u64,
    pub n_mult: u64,
    pub k_mix: usize,
    pub r_star: f64,
    pub risk_bound: f64,
    pub weak_variance: f64,
    pub past_burn_in: bool,
}

impl CellInfo {
    fn from_report(mixing_level: f64, r: &BoundReport) -> Self {
        Self {
            n: r.n,
            mixing_level,
            k: r.k,
            n_quad: r.n_quad,
            n_mult: r.n_mult,
            k_mix: r.k_mix,
            r_star: r.r_star,
            risk_bound: r.risk_bound,
            weak_variance: r.weak_variance,
            past_burn_in: r.past_burn_in,
        }
    }
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub n_grid: usize,
    pub mixing_level: f64,
    pub replicate: usize,
    pub excess_risk: f64,
    pub k: usize,
    pub n_quad: u64,
    pub n_mult: u64,
    pub k_mix: usize,
    pub r_star: f64,
    pub risk_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<CellInfo>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<SweepRow>> {
        let mut r = csv::Reader::from_reader(reader);
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }
}

struct Level {
    mixing_level: f64,
    problem: RegressionProblem,
    sampler: ProblemSampler,
    pop: PopulationQuantities,
}

/// Problems, samplers and population quantities for every mixing level,
/// built once per sweep.
pub struct SweepContext {
    config: SweepConfig,
    class: HypothesisClass,
    levels: Vec<Level>,
}

impl SweepContext {
    pub fn new(config: &SweepConfig) -> Result<Self> {
        config.validate()?;
        let mut levels = Vec::with_capacity(config.mixing_levels.len());
        let mut class = None;
        for &mixing_level in &config.mixing_levels {
            let problem = config.problem.build_at(mixing_level)?;
            let c = class.get_or_insert_with(|| config.class_for(&problem)).clone();
            c.validate(&problem)?;
            let pop = population_quantities(&problem, &c)?;
            levels.push(Level { mixing_level, sampler: ProblemSampler::new(&problem), problem, pop });
        }
        Ok(Self { config: config.clone(), class: class.expect("at least one level"), levels })
    }

    pub fn config(&self) -> &SweepConfig {
        &self.config
    }

    pub fn class(&self) -> &HypothesisClass {
        &self.class
    }

    pub fn problem(&self, level: usize) -> &RegressionProblem {
        &self.levels[level].problem
    }

    pub fn population(&self, level: usize) -> &PopulationQuantities {
        &self.levels[level].pop
    }

    pub fn replicate_seed(&self, level: usize, n: usize, replicate: usize) -> u64 {
        derive_seed(self.config.seed, &[level as u64, n as u64, replicate as u64])
    }

    /// Per-state statistics of one stationary trajectory.
    pub fn sample_stats(&self, level: usize, n: usize, replicate: usize) -> SufficientStats {
        let lv = &self.levels[level];
        let mut rng = rng_from_seed(self.replicate_seed(level, n, replicate));
        let mut stats = SufficientStats::new(lv.problem.states());
        lv.sampler.run(n, &mut rng, |s, y| stats.push(s, y));
        stats
    }

    /// Exact `‖f̂ − f⋆‖²_{L²}` of ERM on one trajectory.
    pub fn run_cell(&self, n: usize, level: usize, replicate: usize) -> Result<f64> {
        let lv = &self.levels[level];
        let stats = self.sample_stats(level, n, replicate);
        let fit = match &self.class {
            HypothesisClass::Linear { .. } => fit_erm_linear_stats(&stats, lv.problem.embedding())?,
            HypothesisClass::Finite { .. } => fit_erm_finite_stats(&stats, &self.class)?,
        };
        Ok(excess_l2(&fit.fitted, &lv.pop, &lv.problem, &self.class))
    }

    pub fn cell_report(&self, n: usize, level: usize) -> Result<BoundReport> {
        compute_bound_report(&self.levels[level].problem, &self.class, &self.config.bound_settings(n))
    }

    pub fn run(&self) -> Result<SweepResult> {
        let cfg = &self.config;
        let cell_index: Vec<(usize, usize)> = (0..self.levels.len())
            .flat_map(|l| cfg.n_grid.iter().map(move |&n| (l, n)))
            .collect();
        let reports: Vec<BoundReport> = cell_index
            .par_iter()
            .map(|&(l, n)| self.cell_report(n, l))
            .collect::<Result<_>>()?;
        let cells: Vec<CellInfo> = cell_index
            .iter()
            .zip(&reports)
            .map(|(&(l, _), r)| CellInfo::from_report(self.levels[l].mixing_level, r))
            .collect();
        let jobs: Vec<(usize, usize)> = (0..cells.len())
            .flat_map(|c| (0..cfg.replicates).map(move |r| (c, r)))
            .collect();
        let risks: Vec<f64> = jobs
            .par_iter()
            .map(|&(c, rep)| self.run_cell(cell_index[c].1, cell_index[c].0, rep))
            .collect::<Result<_>>()?;
        let rows = jobs
            .iter()
            .zip(risks)
            .map(|(&(c, replicate), excess_risk)| {
                let cell = &cells[c];
                SweepRow {
                    n_grid: cell.n,
                    mixing_level: cell.mixing_level,
                    replicate,
                    excess_risk,
                    k: cell.k,
                    n_quad: cell.n_quad,
                    n_mult: cell.n_mult,
                    k_mix: cell.k_mix,
                    r_star: cell.r_star,
                    risk_bound: cell.risk_bound,
                }
            })
            .collect();
        Ok(SweepResult { cells, rows })
    }
}

/// Excess risk of one replicate; a pure function of the config and the indices.
pub fn run_cell(config: &SweepConfig, n: usize, mixing_level: usize, replicate: usize) -> Result<f64> {
    if mixing_level >= config.mixing_levels.len() {
        return Err(invalid("mixingLevel", format!("index {mixing_level} out of range")));
    }
    SweepContext::new(config)?.run_cell(n, mixing_level, replicate)
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let ctx = SweepContext::new(config)?;
    super::thread_pool()?.install(|| ctx.run())
}
