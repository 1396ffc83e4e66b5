use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::psi::{psi_p_norm, DEFAULT_M_MAX};
use super::serde_inf;
use crate::erm::HypothesisClass;
use crate::error::{invalid, Error, Result};
use crate::law::FiniteLaw;
use crate::processgen::RegressionProblem;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertifyMethod {
    LinearExact,
    FiniteExact,
    SampledFit,
}

/// Density of the direction grid used by linear certification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SphereGrid {
    pub directions: usize,
    pub refinement_rounds: usize,
    pub seed: u64,
}

impl Default for SphereGrid {
    fn default() -> Self {
        Self { directions: 10_000, refinement_rounds: 3, seed: 0 }
    }
}

/// `(L, η)` such that `‖f‖_{Ψp} ≤ L ‖f‖_{L²}^η` on every witness member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassCertificate {
    #[serde(rename = "L")]
    pub l: f64,
    pub eta: f64,
    #[serde(with = "serde_inf")]
    pub p: f64,
    pub method: CertifyMethod,
    /// Largest observed `‖f‖_{Ψp} / ‖f‖_{L²}^η` before clamping `L` to 1.
    pub max_ratio: f64,
    pub witnesses: usize,
    /// Linear classes: a bound on the sup over all directions that is only
    /// valid if the grid's covering radius really is `grid_radius`.
    pub upper_estimate: Option<f64>,
    pub grid_radius: Option<f64>,
}

/// `(‖f‖_{Ψp}, ‖f‖_{L²})` for a function of the chain state under `π`.
pub fn function_norms(table: &[f64], pi: &[f64], p: f64) -> Result<(f64, f64)> {
    let law = FiniteLaw::new(table.to_vec(), pi.to_vec())?;
    let psi = psi_p_norm(&law, p, DEFAULT_M_MAX)?.value;
    Ok((psi, law.lm_norm(2.0)))
}

/// Unit vectors with independent Gaussian coordinates, normalized.
pub fn sphere_grid(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| random_unit(dim, &mut rng)).collect()
}

fn random_unit(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Certify a finite set of functions with `η = 1`: `L = max ‖f‖_{Ψp} / ‖f‖_{L²}`.
pub fn certify_functions(tables: &[Vec<f64>], pi: &[f64], p: f64) -> Result<ClassCertificate> {
    if tables.is_empty() {
        return Err(Error::EmptyClass);
    }
    let mut max_ratio: f64 = 0.0;
    for (index, table) in tables.iter().enumerate() {
        let (psi, l2) = function_norms(table, pi, p)?;
        if l2 <= 0.0 {
            return Err(Error::ZeroNorm { index });
        }
        max_ratio = max_ratio.max(psi / l2);
    }
    Ok(ClassCertificate {
        l: max_ratio.max(1.0),
        eta: 1.0,
        p,
        method: CertifyMethod::FiniteExact,
        max_ratio,
        witnesses: tables.len(),
        upper_estimate: None,
        grid_radius: None,
    })
}

/// Least-squares fit of `ln ‖f‖_{Ψp}` on `ln ‖f‖_{L²}` with the slope clamped
/// to `(0, 1]`, then the smallest `L` covering every sample at that slope.
pub fn certify_sampled(tables: &[Vec<f64>], pi: &[f64], p: f64) -> Result<ClassCertificate> {
    if tables.is_empty() {
        return Err(Error::EmptyClass);
    }
    let mut points = Vec::with_capacity(tables.len());
    for (index, table) in tables.iter().enumerate() {
        let (psi, l2) = function_norms(table, pi, p)?;
        if l2 <= 0.0 {
            return Err(Error::ZeroNorm { index });
        }
        points.push((l2.ln(), psi.ln()));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let eta = if sxx > 1e-12 { (sxy / sxx).clamp(1e-3, 1.0) } else { 1.0 };
    let max_ratio = points.iter().map(|&(x, y)| (y - eta * x).exp()).fold(0.0, f64::max);
    Ok(ClassCertificate {
        l: max_ratio.max(1.0),
        eta,
        p,
        method: CertifyMethod::SampledFit,
        max_ratio,
        witnesses: tables.len(),
        upper_estimate: None,
        grid_radius: None,
    })
}

/// Sup over unit `v` of `‖⟨v, X⟩‖_{Ψp} / ‖⟨v, X⟩‖_{L²}` on a random sphere grid
/// refined around its best directions.
pub fn certify_linear(problem: &RegressionProblem, p: f64, grid: &SphereGrid) -> Result<ClassCertificate> {
    let dim = problem.dim();
    let pi = problem.chain().stationary();
    let sigma = crate::erm::second_moment(problem);
    let (lambda_min, lambda_max) = crate::linalg::symmetric_extremes(&sigma);
    if lambda_min <= 1e-12 * lambda_max.max(1.0) {
        return Err(Error::SingularCovariance { lambda_min });
    }
    if grid.directions == 0 {
        return Err(invalid("directions", "must be at least 1"));
    }
    let ratio = |v: &[f64]| -> Result<(f64, f64, f64)> {
        let (psi, l2) = function_norms(&problem.linear_table(v), pi, p)?;
        Ok((psi / l2, psi, l2))
    };
    let dirs = sphere_grid(dim, grid.directions, grid.seed);
    let mut scored = Vec::with_capacity(dirs.len());
    for v in &dirs {
        let (r, psi, l2) = ratio(v)?;
        scored.push((r, psi, l2));
    }
    let mut order: Vec<usize> = (0..dirs.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0));
    let mut best: Vec<(f64, Vec<f64>)> = order.iter().take(16).map(|&i| (scored[i].0, dirs[i].clone())).collect();
    let mut witnesses = dirs.len();

    let mut rng = rng_from_seed(crate::seed::derive_seed(grid.seed, &[1]));
    let mut step = 0.5 * nearest_spacing(&dirs, 64, &mut rng);
    for _ in 0..grid.refinement_rounds {
        for (score, v) in best.iter_mut() {
            for _ in 0..64 {
                let mut w: Vec<f64> = v.iter().map(|x| x + step * rng.sample::<f64, _>(StandardNormal)).collect();
                normalize(&mut w);
                let (r, _, _) = ratio(&w)?;
                witnesses += 1;
                if r > *score {
                    *score = r;
                    *v = w;
                }
            }
        }
        step *= 0.25;
    }
    let max_ratio = best.iter().map(|b| b.0).fold(scored[order[0]].0, f64::max);

    // every unit w lies within h of some grid point v, and the Ψp and L²
    // norms are Lipschitz in v with constants max‖x‖ and √λmax
    let h = covering_radius_estimate(&dirs, 2000, &mut rng);
    let bx = problem
        .embedding()
        .iter()
        .map(|x| x.iter().map(|a| a * a).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let upper = scored
        .iter()
        .map(|&(_, psi, l2)| {
            let denom = l2 - h * lambda_max.sqrt();
            if denom > 0.0 {
                (psi + h * bx) / denom
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);

    Ok(ClassCertificate {
        l: max_ratio.max(1.0),
        eta: 1.0,
        p,
        method: CertifyMethod::LinearExact,
        max_ratio,
        witnesses,
        upper_estimate: Some(upper.max(max_ratio)),
        grid_radius: Some(h),
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Median distance from a few grid points to their nearest neighbour.
fn nearest_spacing(dirs: &[Vec<f64>], probes: usize, rng: &mut impl Rng) -> f64 {
    if dirs.len() < 2 {
        return 1.0;
    }
    let mut d: Vec<f64> = (0..probes)
        .map(|_| {
            let i = rng.random_range(0..dirs.len());
            dirs.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, w)| dist(&dirs[i], w))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Largest distance from random test directions to the grid.
fn covering_radius_estimate(dirs: &[Vec<f64>], tests: usize, rng: &mut impl Rng) -> f64 {
    let dim = dirs[0].len();
    (0..tests)
        .map(|_| {
            let u = random_unit(dim, rng);
            dirs.iter().map(|v| dist(&u, v)).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Certify the class of differences `F⋆ − F⋆` relevant to `class`:
/// linear classes on the sphere grid, finite classes through `f − f⋆`.
pub fn certify_weak_subgaussian(
    class: &HypothesisClass,
    problem: &RegressionProblem,
    p: f64,
    method: CertifyMethod,
    grid: &SphereGrid,
) -> Result<ClassCertificate> {
    class.validate(problem)?;
    let pi = problem.chain().stationary();
    match (method, class) {
        (CertifyMethod::LinearExact, HypothesisClass::Linear { .. }) => certify_linear(problem, p, grid),
        (CertifyMethod::FiniteExact, HypothesisClass::Finite { hypotheses }) => certify_functions(hypotheses, pi, p),
        (CertifyMethod::SampledFit, HypothesisClass::Finite { hypotheses }) => certify_sampled(hypotheses, pi, p),
        (CertifyMethod::SampledFit, HypothesisClass::Linear { dim }) => {
            let mut rng = rng_from_seed(grid.seed);
            let tables: Vec<Vec<f64>> = (0..grid.directions.max(2))
                .map(|_| {
                    let scale = (rng.random::<f64>() * 4.0 - 2.0).exp();
                    let v: Vec<f64> = random_unit(*dim, &mut rng).iter().map(|x| scale * x).collect();
                    problem.linear_table(&v)
                })
                .collect();
            certify_sampled(&tables, pi, p)
        }
        (m, c) => Err(invalid(
            "method",
            format!("{m:?} does not apply to a {} class", match c {
                HypothesisClass::Linear { .. } => "linear",
                HypothesisClass::Finite { .. } => "finite",
            }),
        )),
    }
}
