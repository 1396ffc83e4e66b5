use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};

const ROW_TOL: f64 = 1e-12;
const FIXED_POINT_TOL: f64 = 1e-10;

/// A finite-state, time-homogeneous Markov chain started from its stationary law.
///
/// Construction validates that the kernel is row-stochastic and irreducible, so
/// the stationary law `π` exists, is unique and has strictly positive entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovChainModel {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovChainModel {
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self> {
        let stationary = stationary_distribution(&transition)?;
        Ok(Self {
            transition,
            stationary,
        })
    }

    /// Two states with flip probabilities `p` (0 → 1) and `q` (1 → 0).
    pub fn two_state(p: f64, q: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![q, 1.0 - q]])
    }

    /// Every row equals `pi`: the chain is an iid sequence with marginal `pi`.
    pub fn iid(pi: Vec<f64>) -> Result<Self> {
        Self::new(vec![pi.clone(); pi.len()])
    }

    /// `λ I + (1 − λ) 1 πᵀ`: stays put with probability `λ`, otherwise redraws
    /// from `pi`. Its only nontrivial eigenvalue is `λ`.
    pub fn sticky(lambda: f64, pi: &[f64]) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(invalid("lambda", format!("{lambda} not in [0, 1)")));
        }
        let s = pi.len();
        let rows = (0..s)
            .map(|x| {
                (0..s)
                    .map(|y| (1.0 - lambda) * pi[y] + if x == y { lambda } else { 0.0 })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    /// Tensor product of independent chains. State indices are mixed-radix with
    /// the first factor most significant.
    pub fn product(factors: &[MarkovChainModel]) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("factors", "need at least one chain"));
        }
        let mut rows = vec![vec![1.0]];
        for f in factors {
            let a = rows.len();
            let b = f.states();
            let mut next = vec![vec![0.0; a * b]; a * b];
            for (i, row_i) in rows.iter().enumerate() {
                for (j, &pij) in row_i.iter().enumerate() {
                    if pij == 0.0 {
                        continue;
                    }
                    for (u, row_u) in f.transition.iter().enumerate() {
                        for (v, &puv) in row_u.iter().enumerate() {
                            next[i * b + u][j * b + v] = pij * puv;
                        }
                    }
                }
            }
            rows = next;
        }
        Self::new(rows)
    }

    pub fn states(&self) -> usize {
        self.stationary.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub(crate) fn to_matrix(&self) -> DMatrix<f64> {
        let s = self.states();
        DMatrix::from_fn(s, s, |i, j| self.transition[i][j])
    }

    /// The `i`-step kernel `Pⁱ`.
    pub fn kernel_power(&self, i: usize) -> DMatrix<f64> {
        let p = self.to_matrix();
        let mut out = DMatrix::identity(self.states(), self.states());
        for _ in 0..i {
            out = &out * &p;
        }
        out
    }

    /// Stationary cross moments `E[a(X₀) b(X_l)]` for
    /// `l = 0..lags`.
    pub fn cross_moments(&self, a: &[f64], b: &[f64], lags: usize) -> Vec<f64> {
        let p = self.to_matrix();
        let pi = &self.stationary;
        // v_l = P^l b, so E[a(X0) b(Xl)] = Σ_x π(x) a(x) v_l(x)
        let mut v = DVector::from_column_slice(b);
        let mut out = Vec::with_capacity(lags + 1);
        for l in 0..=lags {
            if l > 0 {
                v = &p * &v;
            }
            out.push((0..pi.len()).map(|x| pi[x] * a[x] * v[x]).sum());
        }
        out
    }
}

/// Total variation with the `½ ℓ¹` convention.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn validate_rows(transition: &[Vec<f64>]) -> Result<usize> {
    let s = transition.len();
    if s == 0 {
        return Err(Error::InvalidTransition("no states".into()));
    }
    for (i, row) in transition.iter().enumerate() {
        if row.len() != s {
            return Err(Error::InvalidTransition(format!(
                "row {i} has {} entries, expected {s}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidTransition(format!(
                "entry ({i}, {j}) = {} outside [0, 1]",
                row[j]
            )));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidTransition(format!(
                "row {i} sums to {total}, not 1"
            )));
        }
    }
    Ok(s)
}

fn reaches_all(s: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; s];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for y in 0..s {
            if !seen[y] && edge(x, y) {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen.into_iter().all(|v| v)
}

/// The unique stationary law of an irreducible row-stochastic matrix.
///
/// Solves `(Pᵀ − I) π = 0, 1ᵀπ = 1` directly, so periodic chains are handled.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let s = validate_rows(transition)?;
    let forward = reaches_all(s, |x, y| transition[x][y] > 0.0);
    let backward = reaches_all(s, |x, y| transition[y][x] > 0.0);
    if !(forward && backward) {
        return Err(Error::NoUniqueStationary {
            property: "reducible",
        });
    }

    let mut a = DMatrix::from_fn(s, s, |i, j| {
        transition[j][i] - if i == j { 1.0 } else { 0.0 }
    });
    for j in 0..s {
        a[(s - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(s);
    rhs[s - 1] = 1.0;
    let solved = a.lu().solve(&rhs).ok_or(Error::NoUniqueStationary {
        property: "numerically singular",
    })?;

    let mut pi: Vec<f64> = solved.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);

    // one polishing step πᵀ ← πᵀP; exact fixed points are unchanged
    let polished: Vec<f64> = (0..s)
        .map(|y| (0..s).map(|x| pi[x] * transition[x][y]).sum())
        .collect();
    let total: f64 = polished.iter().sum();
    let pi: Vec<f64> = polished.into_iter().map(|v| v / total).collect();

    let residual = (0..s)
        .map(|y| ((0..s).map(|x| pi[x] * transition[x][y]).sum::<f64>() - pi[y]).abs())
        .fold(0.0, f64::max);
    if residual > FIXED_POINT_TOL || pi.iter().any(|&v| v <= 0.0) {
        return Err(Error::NoUniqueStationary {
            property: "numerically unstable",
        });
    }
    Ok(pi)
}

/// Exact β-mixing coefficients `β(1), …, β(horizon)` of the stationary chain.
///
/// For a time-homogeneous stationary Markov chain the supremum over the
/// conditioning time is constant and the conditional law given the whole past
/// only depends on the current state, so
/// `β(i) = Σ_x π(x) · TV(Pⁱ(x, ·), π)`.
pub fn beta_coefficients(model: &MarkovChainModel, horizon: usize) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    Ok(BetaSequence::new(model).take(horizon).collect())
}

/// Lazily computed `β(1), β(2), …` for a chain; each step costs one
/// `S × S` matrix product.
#[derive(Debug, Clone)]
pub struct BetaSequence {
    kernel: DMatrix<f64>,
    power: DMatrix<f64>,
    pi: Vec<f64>,
}

impl BetaSequence {
    pub fn new(model: &MarkovChainModel) -> Self {
        let s = model.states();
        Self {
            kernel: model.to_matrix(),
            power: DMatrix::identity(s, s),
            pi: model.stationary().to_vec(),
        }
    }
}

impl Iterator for BetaSequence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        self.power = &self.power * &self.kernel;
        let s = self.pi.len();
        let beta: f64 = (0..s)
            .map(|x| {
                let tv = 0.5 * (0..s).map(|y| (self.power[(x, y)] - self.pi[y]).abs()).sum::<f64>();
                self.pi[x] * tv
            })
            .sum();
        Some(beta.clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubly_stochastic_is_uniform() {
        let p = vec![
            vec![0.2, 0.5, 0.3],
            vec![0.3, 0.2, 0.5],
            vec![0.5, 0.3, 0.2],
        ];
        let pi = stationary_distribution(&p).unwrap();
        for v in pi {
            assert!((v - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_state_matches_power_iteration() {
        for &(p, q) in &[(0.1, 0.3), (0.7, 0.2), (0.9, 0.9), (0.05, 0.5)] {
            let chain = MarkovChainModel::two_state(p, q).unwrap();
            // oracle: iterate the kernel from a point mass
            let mut v = [1.0, 0.0];
            for _ in 0..20_000 {
                v = [v[0] * (1.0 - p) + v[1] * q, v[0] * p + v[1] * (1.0 - q)];
            }
            // average two consecutive iterates so slowly-oscillating chains settle
            let w = [v[0] * (1.0 - p) + v[1] * q, v[0] * p + v[1] * (1.0 - q)];
            let oracle = [(v[0] + w[0]) / 2.0, (v[1] + w[1]) / 2.0];
            let pi = chain.stationary();
            assert!((pi[0] - oracle[0]).abs() < 1e-10, "{p} {q}");
            assert!((pi[0] - q / (p + q)).abs() < 1e-14);
            assert!((pi[1] - p / (p + q)).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_has_no_unique_law() {
        let err = stationary_distribution(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap_err();
        assert!(err.to_string().contains("reducible"));
    }

    #[test]
    fn periodic_chain_still_has_unique_law() {
        let pi = stationary_distribution(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(MarkovChainModel::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(MarkovChainModel::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
        assert!(MarkovChainModel::new(vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn iid_chain_has_zero_beta() {
        let chain = MarkovChainModel::iid(vec![0.2, 0.3, 0.5]).unwrap();
        let betas = beta_coefficients(&chain, 10).unwrap();
        assert!(betas.iter().all(|&b| b < 1e-15));
    }

    #[test]
    fn two_state_beta_closed_form() {
        let (p, q) = (0.3, 0.1);
        let chain = MarkovChainModel::two_state(p, q).unwrap();
        let pi = chain.stationary().to_vec();
        let betas = beta_coefficients(&chain, 30).unwrap();
        for (i, b) in betas.iter().enumerate() {
            let lag = (i + 1) as i32;
            let exact = 2.0 * pi[0] * pi[1] * (1.0f64 - p - q).abs().powi(lag);
            assert!((b - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn near_identity_chain_approaches_full_dependence() {
        let pi = [0.5, 0.3, 0.2];
        let limit: f64 = pi.iter().map(|p| p * (1.0 - p)).sum();
        for eps in [1e-2, 1e-4, 1e-6] {
            let chain = MarkovChainModel::sticky(1.0 - eps, &pi).unwrap();
            let betas = beta_coefficients(&chain, 5).unwrap();
            for (i, b) in betas.iter().enumerate() {
                // direct TV evaluation: Pⁱ(x,·) − π = (1−ε)ⁱ (δ_x − π)
                let exact = (1.0 - eps).powi(i as i32 + 1) * limit;
                assert!((b - exact).abs() < 1e-10);
            }
            assert!((betas[0] - limit).abs() <= 2.0 * eps);
        }
    }

    #[test]
    fn product_of_two_state_chains() {
        let a = MarkovChainModel::two_state(0.2, 0.2).unwrap();
        let prod = MarkovChainModel::product(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(prod.states(), 4);
        for v in prod.stationary() {
            assert!((v - 0.25).abs() < 1e-14);
        }
        assert!((prod.transition()[0][3] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn cross_moments_lag_zero_is_second_moment() {
        let chain = MarkovChainModel::two_state(0.25, 0.25).unwrap();
        let v = [-1.0, 1.0];
        let m = chain.cross_moments(&v, &v, 3);
        assert!((m[0] - 1.0).abs() < 1e-15);
        // autocorrelation of the symmetric ±1 chain is (1 − p − q)^l
        assert!((m[2] - 0.25).abs() < 1e-14);
    }
}
