use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::class::{Hypothesis, HypothesisClass};
use super::population::{excess_l2, PopulationQuantities};
use crate::error::{invalid, Error, Result};
use crate::linalg::min_norm_least_squares;
use crate::processgen::{RegressionProblem, Trajectory};

/// Outcome of empirical risk minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErmResult {
    pub fitted: Hypothesis,
    pub empirical_risk: f64,
    /// `‖f̂ − f⋆‖²_{L²}`, filled in by [`ErmResult::with_excess`].
    pub excess_l2_squared: Option<f64>,
    /// Another minimizer attained the same empirical risk.
    pub tie_broken: bool,
}

impl ErmResult {
    pub fn with_excess(mut self, pop: &PopulationQuantities, problem: &RegressionProblem, class: &HypothesisClass) -> Self {
        self.excess_l2_squared = Some(excess_l2(&self.fitted, pop, problem, class));
        self
    }
}

/// Exported per-replicate record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErmRecord {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub fitted: Hypothesis,
    pub excess_risk: f64,
}

/// Per-state running count, mean and sum of squared deviations of the
/// targets. ERM over state-indexed classes only needs these, so long
/// trajectories never have to be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub count: Vec<u64>,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl SufficientStats {
    pub fn new(states: usize) -> Self {
        Self {
            count: vec![0; states],
            mean: vec![0.0; states],
            m2: vec![0.0; states],
        }
    }

    pub fn from_trajectory(traj: &Trajectory, states: usize) -> Result<Self> {
        let mut s = Self::new(states);
        for (&x, &y) in traj.states.iter().zip(&traj.targets) {
            if x >= states {
                return Err(invalid("trajectory", format!("state {x} out of range")));
            }
            s.push(x, y);
        }
        Ok(s)
    }

    #[inline]
    pub fn push(&mut self, state: usize, y: f64) {
        self.count[state] += 1;
        let c = self.count[state] as f64;
        let delta = y - self.mean[state];
        self.mean[state] += delta / c;
        self.m2[state] += delta * (y - self.mean[state]);
    }

    pub fn n(&self) -> u64 {
        self.count.iter().sum()
    }

    /// `(1/n) Σ_t (f(X_t) − Y_t)²` for a state table `f`.
    pub fn empirical_risk(&self, table: &[f64]) -> f64 {
        let n = self.n() as f64;
        (0..self.count.len())
            .map(|s| self.count[s] as f64 * (table[s] - self.mean[s]).powi(2) + self.m2[s])
            .sum::<f64>()
            / n
    }
}

/// Minimum-norm least squares on the raw covariates.
pub fn fit_erm_linear(traj: &Trajectory) -> Result<ErmResult> {
    if traj.n == 0 {
        return Err(invalid("trajectory", "is empty"));
    }
    let x = DMatrix::from_row_slice(traj.n, traj.dim, &traj.covariates);
    let y = DVector::from_column_slice(&traj.targets);
    let (beta, rank) = min_norm_least_squares(&x, &y);
    let resid = &x * &beta - &y;
    Ok(ErmResult {
        fitted: Hypothesis::Linear(beta.iter().copied().collect()),
        empirical_risk: resid.norm_squared() / traj.n as f64,
        excess_l2_squared: None,
        tie_broken: rank < traj.dim,
    })
}

/// Same minimizer as [`fit_erm_linear`] computed from per-state statistics:
/// the design compresses to one row `√c_s · x_s` with target `√c_s · ȳ_s`
/// per visited state.
pub fn fit_erm_linear_stats(stats: &SufficientStats, embedding: &[Vec<f64>]) -> Result<ErmResult> {
    let visited: Vec<usize> = (0..stats.count.len()).filter(|&s| stats.count[s] > 0).collect();
    if visited.is_empty() {
        return Err(invalid("stats", "no observations"));
    }
    let d = embedding[0].len();
    let a = DMatrix::from_fn(visited.len(), d, |i, j| {
        (stats.count[visited[i]] as f64).sqrt() * embedding[visited[i]][j]
    });
    let b = DVector::from_iterator(
        visited.len(),
        visited.iter().map(|&s| (stats.count[s] as f64).sqrt() * stats.mean[s]),
    );
    let (beta, rank) = min_norm_least_squares(&a, &b);
    let table: Vec<f64> = embedding
        .iter()
        .map(|x| x.iter().zip(beta.iter()).map(|(u, v)| u * v).sum())
        .collect();
    Ok(ErmResult {
        empirical_risk: stats.empirical_risk(&table),
        fitted: Hypothesis::Linear(beta.iter().copied().collect()),
        excess_l2_squared: None,
        tie_broken: rank < d,
    })
}

/// Exhaustive search; ties go to the lowest index.
pub fn fit_erm_finite(traj: &Trajectory, class: &HypothesisClass) -> Result<ErmResult> {
    let HypothesisClass::Finite { hypotheses } = class else {
        return Err(invalid("class", "finite ERM needs a finite class"));
    };
    let states = hypotheses.first().ok_or(Error::EmptyClass)?.len();
    fit_erm_finite_stats(&SufficientStats::from_trajectory(traj, states)?, class)
}

pub fn fit_erm_finite_stats(stats: &SufficientStats, class: &HypothesisClass) -> Result<ErmResult> {
    let HypothesisClass::Finite { hypotheses } = class else {
        return Err(invalid("class", "finite ERM needs a finite class"));
    };
    if hypotheses.is_empty() {
        return Err(Error::EmptyClass);
    }
    let risks: Vec<f64> = hypotheses.iter().map(|h| stats.empirical_risk(h)).collect();
    let mut best = 0;
    for (i, &r) in risks.iter().enumerate() {
        if r < risks[best] {
            best = i;
        }
    }
    let tie = risks.iter().enumerate().any(|(i, &r)| i != best && r == risks[best]);
    Ok(ErmResult {
        fitted: Hypothesis::Finite(best),
        empirical_risk: risks[best],
        excess_l2_squared: None,
        tie_broken: tie,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processgen::{sample_trajectory, NoiseSpec};

    #[test]
    fn single_sample_min_norm() {
        let t = Trajectory::from_rows(vec![0], &[vec![1.0, 0.0]], vec![2.0], 0).unwrap();
        let fit = fit_erm_linear(&t).unwrap();
        let Hypothesis::Linear(b) = fit.fitted else { panic!() };
        assert!((b[0] - 2.0).abs() < 1e-14 && b[1].abs() < 1e-14);
        assert!(fit.tie_broken);
    }

    #[test]
    fn noiseless_interpolation() {
        let beta = vec![1.5, -0.5, 0.25];
        let p = RegressionProblem::hypercube(3, 0.3, beta.clone(), NoiseSpec::none()).unwrap();
        let t = sample_trajectory(&p, 200, 1).unwrap();
        let Hypothesis::Linear(b) = fit_erm_linear(&t).unwrap().fitted else { panic!() };
        for (u, v) in b.iter().zip(&beta) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_hypotheses_pick_index_zero() {
        let t = Trajectory::from_rows(vec![0, 1], &[vec![0.0], vec![1.0]], vec![0.5, 0.5], 0).unwrap();
        let class = HypothesisClass::Finite {
            hypotheses: vec![vec![0.4, 0.6], vec![0.4, 0.6], vec![9.0, 9.0]],
        };
        let fit = fit_erm_finite(&t, &class).unwrap();
        assert_eq!(fit.fitted, Hypothesis::Finite(0));
        assert!(fit.tie_broken);
    }

    #[test]
    fn empty_finite_class_is_an_error() {
        let t = Trajectory::from_rows(vec![0], &[vec![0.0]], vec![0.5], 0).unwrap();
        let class = HypothesisClass::Finite { hypotheses: vec![] };
        assert!(matches!(fit_erm_finite(&t, &class), Err(Error::EmptyClass)));
    }

    #[test]
    fn welford_matches_direct_risk() {
        let mut s = SufficientStats::new(2);
        let data = [(0, 1.0), (1, 2.0), (0, 3.0), (1, -1.0), (0, 0.5)];
        data.iter().for_each(|&(x, y)| s.push(x, y));
        let f = [0.7, -0.2];
        let direct: f64 = data.iter().map(|&(x, y)| (f[x] - y).powi(2)).sum::<f64>() / 5.0;
        assert!((s.empirical_risk(&f) - direct).abs() < 1e-14);
    }
}
