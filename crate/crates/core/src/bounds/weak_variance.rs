use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::erm::PopulationQuantities;
use crate::error::{invalid, Error, Result};
use crate::processgen::{ProblemSampler, RegressionProblem};
use crate::seed::{derive_seed, rng_from_seed};

pub const DEFAULT_ENUMERATION_CAP: f64 = 2e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeakVarianceMode {
    /// Enumerate the joint law of `(X, ξ)_{1:n}`; refuses more than `cap` paths.
    Exact { cap: f64 },
    /// Sample `replicates` independent trajectories.
    #[serde(rename_all = "camelCase")]
    MonteCarlo { replicates: usize, seed: u64 },
    /// `q = 1` only: exact variance from the chain's autocovariances.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeakVarianceEstimate {
    pub value: f64,
    /// Standard error of `value` (zero for the exact modes).
    pub std_error: f64,
    /// Index of the resolution function attaining the supremum.
    pub argmax: usize,
    pub per_function: Vec<f64>,
}

/// `sup_g ( E (S_g − E S_g)^{2q} )^{1/q}` with
/// `S_g = n^{-1/2} Σ_i W_i g(X_i) / ‖g‖_{L²}` and `W_i = Y_i − f⋆(X_i)`.
pub fn weak_variance_2q(
    problem: &RegressionProblem,
    pop: &PopulationQuantities,
    resolution: &[Vec<f64>],
    q: f64,
    n: usize,
    mode: WeakVarianceMode,
) -> Result<WeakVarianceEstimate> {
    if resolution.is_empty() {
        return Err(invalid("resolution", "empty resolution set"));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(invalid("q", format!("{q} not in [1, inf)")));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let pi = problem.chain().stationary();
    let mut scaled = Vec::with_capacity(resolution.len());
    for (i, g) in resolution.iter().enumerate() {
        if g.len() != pi.len() {
            return Err(invalid("resolution", format!("function {i} has the wrong length")));
        }
        let norm = crate::erm::l2_inner(pi, g, g).sqrt();
        if !(norm > 0.0) {
            return Err(Error::ZeroNorm { index: i });
        }
        scaled.push(g.iter().map(|v| v / norm).collect::<Vec<f64>>());
    }
    let (per, se) = match mode {
        WeakVarianceMode::Exact { cap } => (exact(problem, pop, &scaled, q, n, cap)?, vec![0.0; scaled.len()]),
        WeakVarianceMode::MonteCarlo { replicates, seed } => monte_carlo(problem, pop, &scaled, q, n, replicates, seed)?,
        WeakVarianceMode::Analytic => {
            if q != 1.0 {
                return Err(invalid("q", "analytic mode needs q = 1"));
            }
            let gamma = long_run_covariance(problem, pop, &scaled, n, true);
            ((0..scaled.len()).map(|i| gamma[(i, i)]).collect(), vec![0.0; scaled.len()])
        }
    };
    let argmax = (0..per.len()).fold(0, |b, i| if per[i] > per[b] { i } else { b });
    Ok(WeakVarianceEstimate {
        value: per[argmax],
        std_error: se[argmax],
        argmax,
        per_function: per,
    })
}

/// `V_2` of the whole linear class: `λ_max(Σ^{-1/2} Γ Σ^{-1/2})` where `Γ` is
/// the long-run covariance of `n^{-1/2} Σ W_i X_i`.
pub fn weak_variance_linear(problem: &RegressionProblem, pop: &PopulationQuantities, n: usize) -> Result<f64> {
    let d = problem.dim();
    let coords: Vec<Vec<f64>> = (0..d)
        .map(|j| problem.embedding().iter().map(|x| x[j]).collect())
        .collect();
    let gamma = long_run_covariance(problem, pop, &coords, n, false);
    let w = crate::linalg::inverse_sqrt(&pop.sigma());
    let (_, top) = crate::linalg::symmetric_extremes(&(&w * gamma * &w));
    if !top.is_finite() {
        return Err(Error::NonFinite { r: f64::NAN });
    }
    Ok(top.max(0.0))
}

/// `Cov(n^{-1/2} Σ_i W_i g_a(X_i), n^{-1/2} Σ_i W_i g_b(X_i))` for every pair;
/// with `diagonal_only` the off-diagonal entries are left at zero.
fn long_run_covariance(
    problem: &RegressionProblem,
    pop: &PopulationQuantities,
    funcs: &[Vec<f64>],
    n: usize,
    diagonal_only: bool,
) -> DMatrix<f64> {
    let pi = problem.chain().stationary();
    let s = pi.len();
    let var = problem.conditional_variance();
    let rm = &pop.residual_mean;
    let g = funcs.len();
    // u_a(x) = E[W g_a(X) | X = x]
    let u: Vec<DVector<f64>> = funcs
        .iter()
        .map(|f| DVector::from_iterator(s, (0..s).map(|x| rm[x] * f[x])))
        .collect();
    let mu: Vec<f64> = u.iter().map(|v| (0..s).map(|x| pi[x] * v[x]).sum()).collect();
    let pairs: Vec<(usize, usize)> = if diagonal_only {
        (0..g).map(|a| (a, a)).collect()
    } else {
        (0..g).flat_map(|a| (a..g).map(move |b| (a, b))).collect()
    };
    let mut gamma = DMatrix::zeros(g, g);
    for &(a, b) in &pairs {
        let c0: f64 = (0..s)
            .map(|x| pi[x] * funcs[a][x] * funcs[b][x] * (rm[x] * rm[x] + var[x]))
            .sum::<f64>()
            - mu[a] * mu[b];
        gamma[(a, b)] = c0;
    }
    let p = problem.chain().to_matrix();
    let mut centred: Vec<DVector<f64>> = (0..g).map(|b| u[b].add_scalar(-mu[b])).collect();
    let scale = 1.0 + u.iter().map(|v| v.amax()).fold(0.0, f64::max);
    for l in 1..n {
        for v in centred.iter_mut() {
            *v = &p * &*v;
        }
        let w = 1.0 - l as f64 / n as f64;
        for &(a, b) in &pairs {
            let cab: f64 = (0..s).map(|x| pi[x] * u[a][x] * centred[b][x]).sum();
            let cba: f64 = (0..s).map(|x| pi[x] * u[b][x] * centred[a][x]).sum();
            gamma[(a, b)] += w * (cab + cba);
        }
        if centred.iter().all(|v| v.amax() <= 1e-17 * scale) {
            break;
        }
    }
    for a in 0..g {
        for b in 0..a {
            gamma[(a, b)] = gamma[(b, a)];
        }
    }
    gamma
}

/// Per-state table of `(W value, probability)` atoms: `W = m(x) + ξ − f⋆(x)`.
fn residual_atoms(problem: &RegressionProblem, pop: &PopulationQuantities) -> Vec<Vec<(f64, f64)>> {
    let mean_target = problem.mean_target();
    (0..problem.states())
        .map(|x| {
            problem
                .noise()
                .law(x)
                .atoms()
                .filter(|&(_, p)| p > 0.0)
                .map(|(v, p)| (mean_target[x] + v - pop.f_star_table[x], p))
                .collect()
        })
        .collect()
}

fn central_power(z: &[(f64, f64)], q: f64) -> f64 {
    let mean: f64 = z.iter().map(|(v, p)| v * p).sum();
    let m: f64 = z.iter().map(|(v, p)| p * (v - mean).abs().powf(2.0 * q)).sum();
    m.powf(1.0 / q)
}

fn exact(
    problem: &RegressionProblem,
    pop: &PopulationQuantities,
    funcs: &[Vec<f64>],
    q: f64,
    n: usize,
    cap: f64,
) -> Result<Vec<f64>> {
    let atoms = residual_atoms(problem, pop);
    let per_step: usize = atoms.iter().map(Vec::len).sum();
    let size = (per_step as f64).powi(n as i32);
    if size > cap {
        return Err(Error::EnumerationTooLarge { size, cap });
    }
    let pi = problem.chain().stationary();
    let trans = problem.chain().transition();
    let g = funcs.len();
    // one (probability, sums) entry per partial path, grown one step at a time
    let mut frontier: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    for x in 0..pi.len() {
        for &(w, pw) in &atoms[x] {
            frontier.push((x, pi[x] * pw, funcs.iter().map(|f| w * f[x]).collect()));
        }
    }
    for _ in 1..n {
        let mut next = Vec::with_capacity(frontier.len() * per_step);
        for (x0, prob, sums) in &frontier {
            for (x, &pxy) in trans[*x0].iter().enumerate() {
                if pxy == 0.0 {
                    continue;
                }
                for &(w, pw) in &atoms[x] {
                    let s: Vec<f64> = (0..g).map(|a| sums[a] + w * funcs[a][x]).collect();
                    next.push((x, prob * pxy * pw, s));
                }
            }
        }
        frontier = next;
    }
    let root_n = (n as f64).sqrt();
    Ok((0..g)
        .map(|a| {
            let z: Vec<(f64, f64)> = frontier.iter().map(|(_, p, s)| (s[a] / root_n, *p)).collect();
            central_power(&z, q)
        })
        .collect())
}

fn monte_carlo(
    problem: &RegressionProblem,
    pop: &PopulationQuantities,
    funcs: &[Vec<f64>],
    q: f64,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if replicates < 2 {
        return Err(invalid("replicates", "need at least 2"));
    }
    let sampler = ProblemSampler::new(problem);
    let g = funcs.len();
    let root_n = (n as f64).sqrt();
    let draws: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, &[r as u64]));
            let mut sums = vec![0.0; g];
            sampler.run(n, &mut rng, |x, y| {
                let w = y - pop.f_star_table[x];
                for a in 0..g {
                    sums[a] += w * funcs[a][x];
                }
            });
            sums.iter().map(|s| s / root_n).collect()
        })
        .collect();
    let rf = replicates as f64;
    let mut values = Vec::with_capacity(g);
    let mut errors = Vec::with_capacity(g);
    for a in 0..g {
        let mean = draws.iter().map(|d| d[a]).sum::<f64>() / rf;
        let powers: Vec<f64> = draws.iter().map(|d| (d[a] - mean).abs().powf(2.0 * q)).collect();
        let m = powers.iter().sum::<f64>() / rf;
        let var_m = powers.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (rf - 1.0);
        let se_m = (var_m / rf).sqrt();
        values.push(m.powf(1.0 / q));
        // delta method for m ↦ m^{1/q}
        errors.push(if m > 0.0 { m.powf(1.0 / q - 1.0) / q * se_m } else { 0.0 });
    }
    Ok((values, errors))
}
