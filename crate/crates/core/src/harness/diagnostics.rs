use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coverage::calibrate_constant;
use super::sweep::{SweepConfig, SweepContext};
use crate::bounds::{multiplier_bound_rhs, serde_inf, sphere_grid, BoundParams, Constants, LocalComplexity, SphereGrid};
use crate::config::ProblemSpec;
use crate::erm::{multiplier_process_stats, quadratic_process_counts, HypothesisClass};
use crate::error::{invalid, Result};

fn default_eps() -> f64 {
    0.5
}

fn default_delta() -> f64 {
    0.05
}

fn one() -> f64 {
    1.0
}

fn infinity() -> f64 {
    f64::INFINITY
}

fn default_directions() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub mixing_level: Option<f64>,
    #[serde(default)]
    pub class: Option<HypothesisClass>,
    pub n: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Number of sphere directions standing in for a linear class.
    #[serde(default = "default_directions")]
    pub directions: usize,
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

/// Contents of `diagnostics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessDiagnostics {
    pub n: usize,
    pub eps: f64,
    pub r_star: f64,
    pub n_quad: u64,
    pub past_n_quad: bool,
    /// `(trajectory, f)` pairs with `‖f − f⋆‖ ≥ r⋆`.
    pub pairs: usize,
    pub quadratic_positive: usize,
    pub quadratic_positive_fraction: f64,
    /// Right side of the multiplier bound at `r⋆` with the configured constants.
    pub multiplier_rhs: f64,
    /// Replicates where `sup M_n / (2(1 + ε) r⋆)` over the `r⋆`-sphere grid
    /// exceeds `multiplierRhs`.
    pub multiplier_exceed_fraction: f64,
    /// Smallest factor on `multiplierRhs` exceeded in at most `δ` of replicates.
    pub calibrated_multiplier_constant: f64,
    pub multiplier_sups: Vec<f64>,
}

pub fn process_diagnostics(config: &DiagnosticsConfig) -> Result<ProcessDiagnostics> {
    if config.replicates == 0 {
        return Err(invalid("replicates", "must be at least 1"));
    }
    let level = config.mixing_level.unwrap_or(match &config.problem {
        ProblemSpec::Hypercube { spectral, .. } => *spectral,
        ProblemSpec::Explicit { .. } => 0.0,
    });
    let sweep = SweepConfig {
        problem: config.problem.clone(),
        class: config.class.clone(),
        n_grid: vec![config.n],
        mixing_levels: vec![level],
        replicates: config.replicates,
        seed: config.seed,
        delta: config.delta,
        q: config.q,
        q_conj: config.q_conj,
        p: config.p,
        constants: config.constants,
        certification: config.certification,
    };
    let ctx = SweepContext::new(&sweep)?;
    let report = ctx.cell_report(config.n, 0)?;
    let r = report.r_star;
    let problem = ctx.problem(0);
    let pop = ctx.population(0);
    let pi = problem.chain().stationary();

    // members f with ‖f − f⋆‖ ≥ r⋆, as (table, distance)
    let members: Vec<(Vec<f64>, f64)> = match ctx.class() {
        HypothesisClass::Finite { hypotheses } => hypotheses.clone(),
        HypothesisClass::Linear { dim } => sphere_grid(*dim, config.directions, config.seed)
            .iter()
            .map(|v| {
                let t = problem.linear_table(v);
                let norm = crate::erm::l2_inner(pi, &t, &t).sqrt();
                pop.f_star_table.iter().zip(&t).map(|(a, b)| a + r * b / norm).collect()
            })
            .collect(),
    }
    .into_iter()
    .map(|f| {
        let d = crate::erm::l2_dist_sq(pi, &f, &pop.f_star_table).sqrt();
        (f, d)
    })
    .filter(|(_, d)| *d >= r && *d > 0.0)
    .collect();

    let per_rep: Vec<(usize, f64)> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| -> Result<(usize, f64)> {
            let stats = ctx.sample_stats(0, config.n, rep);
            let mut positive = 0;
            let mut sup = f64::NEG_INFINITY;
            for (f, d) in &members {
                if quadratic_process_counts(f, &pop.f_star_table, &stats.count, pi, config.eps)? > 0.0 {
                    positive += 1;
                }
                let delta: Vec<f64> = f.iter().zip(&pop.f_star_table).map(|(a, b)| a - b).collect();
                sup = sup.max(r / d * multiplier_process_stats(&delta, &stats, pop, config.eps)?);
            }
            Ok((positive, sup))
        })
        .collect::<Result<_>>()?;

    let params = BoundParams {
        l: report.certificate.l,
        eta: report.certificate.eta,
        p: config.p,
        q_conj: config.q_conj,
        k: report.k,
        delta: config.delta,
        noise_psi: report.noise_psi,
    };
    let local = LocalComplexity {
        weak_variance: report.weak_variance,
        gamma2: report.gamma2,
        gamma_eta: report.gamma_eta,
        gamma_mixed: report.gamma_mixed,
    };
    let rhs = multiplier_bound_rhs(&params, &local, r, config.n, config.constants.c1, config.constants.c2)?.total();
    let scale = 2.0 * (1.0 + config.eps) * r;
    let sups: Vec<f64> = per_rep.iter().map(|p| if members.is_empty() { 0.0 } else { p.1 / scale }).collect();
    let pairs = members.len() * config.replicates;
    let quadratic_positive: usize = per_rep.iter().map(|p| p.0).sum();
    let ratios: Vec<f64> = sups.iter().map(|s| s / rhs).collect();
    Ok(ProcessDiagnostics {
        n: config.n,
        eps: config.eps,
        r_star: r,
        n_quad: report.n_quad,
        past_n_quad: config.n as u64 >= report.n_quad,
        pairs,
        quadratic_positive,
        quadratic_positive_fraction: if pairs == 0 { 0.0 } else { quadratic_positive as f64 / pairs as f64 },
        multiplier_rhs: rhs,
        multiplier_exceed_fraction: sups.iter().filter(|&&s| s > rhs).count() as f64 / sups.len() as f64,
        calibrated_multiplier_constant: calibrate_constant(&ratios, config.delta),
        multiplier_sups: sups,
    })
}
