use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::class::{l2_dist_sq, Hypothesis, HypothesisClass};
use crate::error::{Error, Result};
use crate::law::FiniteLaw;
use crate::linalg::symmetric_extremes;
use crate::processgen::RegressionProblem;

/// Exact stationary quantities of a problem/class pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationQuantities {
    /// Best predictor in the class.
    pub f_star: Hypothesis,
    /// `f⋆` evaluated at every state.
    pub f_star_table: Vec<f64>,
    /// `Σ = E XXᵀ` (rows).
    pub second_moment: Vec<Vec<f64>>,
    /// `V(W)` for `W = Y − f⋆(X)`.
    pub noise_variance: f64,
    /// `E(f⋆(X) − Y)²`.
    pub risk_star: f64,
    pub stationary: Vec<f64>,
    /// `E[W | X = x] = m(x) + E[ξ | x] − f⋆(x)`.
    pub residual_mean: Vec<f64>,
}

impl PopulationQuantities {
    pub fn sigma(&self) -> DMatrix<f64> {
        crate::linalg::from_rows(&self.second_moment)
    }

    /// Stationary law of `W = Y − f⋆(X)`.
    pub fn noise_law(&self, problem: &RegressionProblem) -> Result<FiniteLaw> {
        let parts: Vec<(f64, FiniteLaw)> = (0..problem.states())
            .map(|x| {
                let law = problem.noise().law(x).affine(1.0, self.residual_mean[x] - problem.noise().law(x).mean());
                (self.stationary[x], law)
            })
            .collect();
        FiniteLaw::mixture(&parts)
    }
}

/// `Σ_x π(x) x xᵀ`.
pub fn second_moment(problem: &RegressionProblem) -> DMatrix<f64> {
    let d = problem.dim();
    let pi = problem.chain().stationary();
    let mut sigma = DMatrix::zeros(d, d);
    for (x, row) in problem.embedding().iter().enumerate() {
        let v = DVector::from_column_slice(row);
        sigma += pi[x] * &v * v.transpose();
    }
    sigma
}

/// Population risk `E(f(X) − Y)²` of a state table.
pub fn population_risk(problem: &RegressionProblem, table: &[f64]) -> f64 {
    let pi = problem.chain().stationary();
    let reg = problem.regression_function();
    let var = problem.conditional_variance();
    (0..problem.states())
        .map(|x| pi[x] * ((table[x] - reg[x]).powi(2) + var[x]))
        .sum()
}

pub fn population_quantities(problem: &RegressionProblem, class: &HypothesisClass) -> Result<PopulationQuantities> {
    class.validate(problem)?;
    let pi = problem.chain().stationary().to_vec();
    let reg = problem.regression_function();
    let sigma = second_moment(problem);
    let f_star = match class {
        HypothesisClass::Linear { .. } => {
            let (lmin, lmax) = symmetric_extremes(&sigma);
            if lmin <= 1e-12 * lmax.max(1.0) {
                return Err(Error::SingularCovariance { lambda_min: lmin });
            }
            let mut exy = DVector::zeros(problem.dim());
            for (x, row) in problem.embedding().iter().enumerate() {
                exy += pi[x] * reg[x] * DVector::from_column_slice(row);
            }
            let chol = sigma.clone().cholesky().ok_or(Error::SingularCovariance { lambda_min: lmin })?;
            Hypothesis::Linear(chol.solve(&exy).iter().copied().collect())
        }
        HypothesisClass::Finite { hypotheses } => {
            let mut best = 0;
            let mut best_risk = f64::INFINITY;
            for (i, h) in hypotheses.iter().enumerate() {
                let r = population_risk(problem, h);
                if r < best_risk {
                    best = i;
                    best_risk = r;
                }
            }
            Hypothesis::Finite(best)
        }
    };
    let f_star_table = f_star.table(problem, class);
    let residual_mean: Vec<f64> = (0..pi.len()).map(|x| reg[x] - f_star_table[x]).collect();
    let var = problem.conditional_variance();
    let risk_star: f64 = (0..pi.len()).map(|x| pi[x] * (residual_mean[x].powi(2) + var[x])).sum();
    let w_mean: f64 = (0..pi.len()).map(|x| pi[x] * residual_mean[x]).sum();
    let d = problem.dim();
    Ok(PopulationQuantities {
        f_star,
        f_star_table,
        second_moment: (0..d).map(|i| (0..d).map(|j| sigma[(i, j)]).collect()).collect(),
        noise_variance: (risk_star - w_mean * w_mean).max(0.0),
        risk_star,
        stationary: pi,
        residual_mean,
    })
}

/// `‖f − f⋆‖²_{L²}` computed exactly under `π`.
pub fn excess_l2(f: &Hypothesis, pop: &PopulationQuantities, problem: &RegressionProblem, class: &HypothesisClass) -> f64 {
    match (f, &pop.f_star) {
        (Hypothesis::Linear(theta), Hypothesis::Linear(star)) => {
            let diff = DVector::from_iterator(theta.len(), theta.iter().zip(star).map(|(a, b)| a - b));
            (diff.transpose() * pop.sigma() * &diff)[(0, 0)].max(0.0)
        }
        _ => l2_dist_sq(&pop.stationary, &f.table(problem, class), &pop.f_star_table),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::FiniteLaw;
    use crate::processgen::{MarkovChainModel, NoiseKind, NoiseSpec, TargetModel};

    #[test]
    fn realizable_linear_recovers_beta_star() {
        let beta = vec![0.3, -1.2, 2.0];
        let noise = NoiseSpec::new(NoiseKind::MartingaleDifference, Some(0.5), vec![FiniteLaw::rademacher(0.5)]).unwrap();
        let p = RegressionProblem::hypercube(3, 0.7, beta.clone(), noise).unwrap();
        let pop = population_quantities(&p, &HypothesisClass::Linear { dim: 3 }).unwrap();
        let Hypothesis::Linear(b) = &pop.f_star else { panic!() };
        for (u, v) in b.iter().zip(&beta) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!((pop.noise_variance - 0.25).abs() < 1e-12);
    }

    #[test]
    fn singular_design_is_reported() {
        let chain = MarkovChainModel::two_state(0.3, 0.3).unwrap();
        let p = RegressionProblem::new(
            chain,
            vec![vec![1.0, 1.0], vec![-1.0, -1.0]],
            TargetModel::Linear(vec![1.0, 0.0]),
            NoiseSpec::none(),
        )
        .unwrap();
        let err = population_quantities(&p, &HypothesisClass::Linear { dim: 2 }).unwrap_err();
        assert!(matches!(err, Error::SingularCovariance { .. }));
    }

    #[test]
    fn identity_sigma_gives_euclidean_excess() {
        let p = RegressionProblem::hypercube(2, 0.0, vec![1.0, 1.0], NoiseSpec::none()).unwrap();
        let class = HypothesisClass::Linear { dim: 2 };
        let pop = population_quantities(&p, &class).unwrap();
        let e = excess_l2(&Hypothesis::Linear(vec![2.0, -1.0]), &pop, &p, &class);
        assert!((e - 5.0).abs() < 1e-12);
        assert_eq!(excess_l2(&pop.f_star.clone(), &pop, &p, &class), 0.0);
    }
}
