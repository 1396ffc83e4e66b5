use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::class::{l2_dist_sq, l2_inner, Hypothesis, HypothesisClass};
use super::fit::{ErmResult, SufficientStats};
use super::population::PopulationQuantities;
use crate::error::{invalid, Result};
use crate::processgen::{RegressionProblem, Trajectory};

fn check_epsilon(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid("epsilon", format!("{eps} not in [0, 1)")));
    }
    Ok(())
}

/// `Q_n(f) = ‖f − f⋆‖²_{L²} − (1 + ε)/n Σ (f − f⋆)(X_i)²`, the expectation
/// taken exactly under `π`.
pub fn quadratic_process(f: &[f64], f_star: &[f64], traj: &Trajectory, pi: &[f64], eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    let emp = traj.states.iter().map(|&s| (f[s] - f_star[s]).powi(2)).sum::<f64>() / traj.n as f64;
    Ok(l2_dist_sq(pi, f, f_star) - (1.0 + eps) * emp)
}

/// [`quadratic_process`] from state visit counts.
pub fn quadratic_process_counts(f: &[f64], f_star: &[f64], counts: &[u64], pi: &[f64], eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    let n: u64 = counts.iter().sum();
    let emp = (0..counts.len())
        .map(|s| counts[s] as f64 * (f[s] - f_star[s]).powi(2))
        .sum::<f64>()
        / n as f64;
    Ok(l2_dist_sq(pi, f, f_star) - (1.0 + eps) * emp)
}

/// `E′⟨W, g(X)⟩`: the population mean of the multiplier summand for a fixed `g`.
pub fn multiplier_centering(g: &[f64], pop: &PopulationQuantities) -> f64 {
    l2_inner(&pop.stationary, &pop.residual_mean, g)
}

/// `M_n(g) = (1 + ε)/n Σ 2 (⟨W_i, g(X_i)⟩ − E′⟨W, g(X)⟩)` with `W_i = Y_i − f⋆(X_i)`.
pub fn multiplier_process(g: &[f64], traj: &Trajectory, pop: &PopulationQuantities, eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    let sum: f64 = traj
        .states
        .iter()
        .zip(&traj.targets)
        .map(|(&s, &y)| (y - pop.f_star_table[s]) * g[s])
        .sum();
    Ok((1.0 + eps) * 2.0 * (sum / traj.n as f64 - multiplier_centering(g, pop)))
}

/// [`multiplier_process`] from per-state statistics.
pub fn multiplier_process_stats(g: &[f64], stats: &SufficientStats, pop: &PopulationQuantities, eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    let sum: f64 = (0..g.len())
        .map(|s| g[s] * stats.count[s] as f64 * (stats.mean[s] - pop.f_star_table[s]))
        .sum();
    Ok((1.0 + eps) * 2.0 * (sum / stats.n() as f64 - multiplier_centering(g, pop)))
}

/// Both sides of the localized basic inequality
/// `‖f̂ − f⋆‖² ≤ r² + r⁻² (sup_{F⋆ ∩ rS} M_n)² + 2 sup_{F⋆} Q_n`.
///
/// ERM optimality gives `D² ≤ D·A + S` with `D = ‖f̂ − f⋆‖`, `A = r⁻¹ sup M_n`
/// and `S = sup Q_n` whenever `D ≥ r`, hence `D² ≤ A² + 2S`. The factor 2 on
/// `S` cannot be dropped once `S > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BasicInequality {
    pub r: f64,
    pub excess: f64,
    pub sup_multiplier: f64,
    pub sup_quadratic: f64,
}

impl BasicInequality {
    pub fn rhs(&self) -> f64 {
        self.r * self.r + (self.sup_multiplier / self.r).powi(2) + 2.0 * self.sup_quadratic
    }
}

/// Exact suprema over the star hull for the linear class.
///
/// `F⋆ ∩ rS` is the ellipsoid `{θ : θᵀΣθ = r²}` and `M_n` is linear in `θ`,
/// so its supremum is `r √(mᵀ Σ⁻¹ m)`. `Q_n` is a quadratic form on a
/// subspace, so its supremum is `0` or `+∞`.
pub fn basic_inequality_linear(
    traj: &Trajectory,
    pop: &PopulationQuantities,
    fit: &ErmResult,
    r: f64,
    eps: f64,
) -> Result<BasicInequality> {
    check_epsilon(eps)?;
    let (n, d) = (traj.n, traj.dim);
    let Hypothesis::Linear(star) = &pop.f_star else {
        return Err(invalid("pop", "needs a linear f_star"));
    };
    let sigma = pop.sigma();
    let x = DMatrix::from_row_slice(n, d, &traj.covariates);
    let beta_star = DVector::from_column_slice(star);
    let w = DVector::from_column_slice(&traj.targets) - &x * &beta_star;
    // E[W X] vanishes by the normal equations, so the centring drops out
    let m = x.transpose() * &w * (2.0 * (1.0 + eps) / n as f64);
    let chol = sigma.clone().cholesky().ok_or_else(|| invalid("sigma", "not positive definite"))?;
    let sup_m = r * m.dot(&chol.solve(&m)).max(0.0).sqrt();
    let gram = x.transpose() * &x / n as f64;
    let q = &sigma - gram * (1.0 + eps);
    let (_, qmax) = crate::linalg::symmetric_extremes(&q);
    let sup_q = if qmax > 1e-12 * sigma.norm() { f64::INFINITY } else { 0.0 };
    Ok(BasicInequality {
        r,
        excess: fit.excess_l2_squared.ok_or_else(|| invalid("fit", "excess risk not filled in"))?,
        sup_multiplier: sup_m,
        sup_quadratic: sup_q,
    })
}

/// Exact suprema over the star hull `{ρ(f − f⋆)}` of a finite class.
///
/// `M_n(ρΔ) = ρ M_n(Δ)` and `Q_n(ρΔ) = ρ² Q_n(Δ)`, so the suprema reduce to
/// maxima over class members, with `ρ = r/‖Δ‖` on the sphere.
pub fn basic_inequality_finite(
    traj: &Trajectory,
    problem: &RegressionProblem,
    class: &HypothesisClass,
    pop: &PopulationQuantities,
    fit: &ErmResult,
    r: f64,
    eps: f64,
) -> Result<BasicInequality> {
    let HypothesisClass::Finite { hypotheses } = class else {
        return Err(invalid("class", "needs a finite class"));
    };
    let pi = problem.chain().stationary();
    let mut sup_m = f64::NEG_INFINITY;
    let mut sup_q: f64 = 0.0;
    for h in hypotheses {
        let delta: Vec<f64> = h.iter().zip(&pop.f_star_table).map(|(a, b)| a - b).collect();
        let norm = l2_dist_sq(pi, h, &pop.f_star_table).sqrt();
        sup_q = sup_q.max(quadratic_process(h, &pop.f_star_table, traj, pi, eps)?);
        if norm >= r && norm > 0.0 {
            sup_m = sup_m.max(r / norm * multiplier_process(&delta, traj, pop, eps)?);
        }
    }
    Ok(BasicInequality {
        r,
        excess: fit.excess_l2_squared.ok_or_else(|| invalid("fit", "excess risk not filled in"))?,
        // an empty sphere contributes nothing
        sup_multiplier: sup_m.max(0.0),
        sup_quadratic: sup_q,
    })
}
