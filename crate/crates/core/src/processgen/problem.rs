use serde::{Deserialize, Serialize};

use super::chain::MarkovChainModel;
use crate::error::{invalid, Error, Result};
use crate::law::FiniteLaw;

const MD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// One law shared by every state; the noise is independent of the chain.
    BoundedIid,
    /// Per-state laws with zero conditional mean.
    MartingaleDifference,
    /// Per-state laws with arbitrary conditional means (misspecification).
    StateDependentBias,
}

/// The additive noise `Y − m(X)` drawn, given the current state, from a
/// finite-support table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseRepr")]
pub struct NoiseSpec {
    kind: NoiseKind,
    bound: Option<f64>,
    laws: Vec<FiniteLaw>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseRepr {
    kind: NoiseKind,
    #[serde(default)]
    bound: Option<f64>,
    laws: Vec<FiniteLaw>,
}

impl TryFrom<NoiseRepr> for NoiseSpec {
    type Error = Error;

    fn try_from(r: NoiseRepr) -> Result<Self> {
        Self::new(r.kind, r.bound, r.laws)
    }
}

impl NoiseSpec {
    /// `laws` holds either one law (broadcast to every state) or one per state.
    pub fn new(kind: NoiseKind, bound: Option<f64>, laws: Vec<FiniteLaw>) -> Result<Self> {
        if laws.is_empty() {
            return Err(Error::InvalidNoise("no noise law given".into()));
        }
        if let Some(b) = bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidNoise(format!("bound {b} must be positive")));
            }
            if let Some(v) = laws.iter().map(FiniteLaw::ess_sup).find(|&v| v > b) {
                return Err(Error::InvalidNoise(format!(
                    "noise value of magnitude {v} exceeds the declared bound {b}"
                )));
            }
        }
        match kind {
            NoiseKind::BoundedIid => {
                if laws.windows(2).any(|w| w[0] != w[1]) {
                    return Err(Error::InvalidNoise(
                        "bounded-iid noise must use one law for every state".into(),
                    ));
                }
            }
            NoiseKind::MartingaleDifference => {
                if let Some((i, l)) = laws.iter().enumerate().find(|(_, l)| l.mean().abs() > MD_TOL) {
                    return Err(Error::InvalidNoise(format!(
                        "martingale-difference law for state {i} has mean {}",
                        l.mean()
                    )));
                }
            }
            NoiseKind::StateDependentBias => {}
        }
        Ok(Self { kind, bound, laws })
    }

    /// Zero noise.
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::BoundedIid,
            bound: None,
            laws: vec![FiniteLaw::point(0.0)],
        }
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn law(&self, state: usize) -> &FiniteLaw {
        if self.laws.len() == 1 {
            &self.laws[0]
        } else {
            &self.laws[state]
        }
    }

    pub(crate) fn table_len(&self) -> usize {
        self.laws.len()
    }

    /// Largest noise magnitude over all states.
    pub fn ess_sup(&self) -> f64 {
        self.laws.iter().map(FiniteLaw::ess_sup).fold(0.0, f64::max)
    }
}

/// Mean target `m(x)` before noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetModel {
    /// `m(x) = ⟨β⋆, embedding(x)⟩`.
    Linear(Vec<f64>),
    /// `m(x) = table[x]`.
    Tabular(Vec<f64>),
}

/// A stationary regression model `Y_t = m(X_t) + ξ_t` driven by a Markov chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionProblem {
    chain: MarkovChainModel,
    embedding: Vec<Vec<f64>>,
    target: TargetModel,
    noise: NoiseSpec,
}

impl RegressionProblem {
    pub fn new(
        chain: MarkovChainModel,
        embedding: Vec<Vec<f64>>,
        target: TargetModel,
        noise: NoiseSpec,
    ) -> Result<Self> {
        let s = chain.states();
        if embedding.len() != s {
            return Err(Error::InvalidProblem(format!(
                "embedding has {} rows for {s} states",
                embedding.len()
            )));
        }
        let d = embedding[0].len();
        if d == 0 {
            return Err(Error::InvalidProblem("covariate dimension must be >= 1".into()));
        }
        if embedding.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidProblem("embedding rows differ in length".into()));
        }
        if embedding.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("embedding has non-finite entries".into()));
        }
        match &target {
            TargetModel::Linear(beta) if beta.len() != d => {
                return Err(Error::InvalidProblem(format!(
                    "true parameter has length {}, covariates have dimension {d}",
                    beta.len()
                )))
            }
            TargetModel::Tabular(table) if table.len() != s => {
                return Err(Error::InvalidProblem(format!(
                    "target table has {} entries for {s} states",
                    table.len()
                )))
            }
            _ => {}
        }
        if noise.table_len() != 1 && noise.table_len() != s {
            return Err(Error::InvalidProblem(format!(
                "noise table has {} laws for {s} states",
                noise.table_len()
            )));
        }
        Ok(Self {
            chain,
            embedding,
            target,
            noise,
        })
    }

    /// `dim` independent symmetric two-state chains, each with second
    /// eigenvalue `spectral`, observed through ±1 coordinates, with a linear
    /// target. State bit `j` (most significant first) drives coordinate `j`.
    pub fn hypercube(
        dim: usize,
        spectral: f64,
        beta_star: Vec<f64>,
        noise: NoiseSpec,
    ) -> Result<Self> {
        if dim == 0 || dim > 12 {
            return Err(invalid("dim", format!("{dim} not in 1..=12")));
        }
        if !(0.0..1.0).contains(&spectral) {
            return Err(invalid("spectral", format!("{spectral} not in [0, 1)")));
        }
        let flip = (1.0 - spectral) / 2.0;
        let factor = MarkovChainModel::two_state(flip, flip)?;
        let chain = MarkovChainModel::product(&vec![factor; dim])?;
        let embedding = (0..chain.states())
            .map(|x| {
                (0..dim)
                    .map(|j| if (x >> (dim - 1 - j)) & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        Self::new(chain, embedding, TargetModel::Linear(beta_star), noise)
    }

    pub fn chain(&self) -> &MarkovChainModel {
        &self.chain
    }

    pub fn embedding(&self) -> &[Vec<f64>] {
        &self.embedding
    }

    pub fn target(&self) -> &TargetModel {
        &self.target
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn dim(&self) -> usize {
        self.embedding[0].len()
    }

    pub fn states(&self) -> usize {
        self.chain.states()
    }

    /// Noiseless target `m(x)` for every state.
    pub fn mean_target(&self) -> Vec<f64> {
        match &self.target {
            TargetModel::Linear(beta) => self
                .embedding
                .iter()
                .map(|x| x.iter().zip(beta).map(|(a, b)| a * b).sum())
                .collect(),
            TargetModel::Tabular(table) => table.clone(),
        }
    }

    /// Regression function `E[Y | X = x]`.
    pub fn regression_function(&self) -> Vec<f64> {
        self.mean_target()
            .into_iter()
            .enumerate()
            .map(|(x, m)| m + self.noise.law(x).mean())
            .collect()
    }

    /// `Var(Y | X = x)`.
    pub fn conditional_variance(&self) -> Vec<f64> {
        (0..self.states()).map(|x| self.noise.law(x).variance()).collect()
    }

    /// Evaluate a linear functional `x ↦ ⟨θ, embedding(x)⟩` as a state table.
    pub fn linear_table(&self, theta: &[f64]) -> Vec<f64> {
        self.embedding
            .iter()
            .map(|x| x.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn martingale_noise_must_be_centered() {
        let skewed = FiniteLaw::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(NoiseSpec::new(NoiseKind::MartingaleDifference, None, vec![skewed.clone()]).is_err());
        assert!(NoiseSpec::new(NoiseKind::StateDependentBias, None, vec![skewed]).is_ok());
    }

    #[test]
    fn bound_is_enforced() {
        let law = FiniteLaw::rademacher(2.0);
        assert!(NoiseSpec::new(NoiseKind::BoundedIid, Some(1.0), vec![law.clone()]).is_err());
        assert!(NoiseSpec::new(NoiseKind::BoundedIid, Some(2.0), vec![law]).is_ok());
    }

    #[test]
    fn iid_noise_requires_a_shared_law() {
        let laws = vec![FiniteLaw::rademacher(1.0), FiniteLaw::rademacher(2.0)];
        assert!(NoiseSpec::new(NoiseKind::BoundedIid, None, laws).is_err());
    }

    #[test]
    fn hypercube_layout() {
        let p = RegressionProblem::hypercube(3, 0.5, vec![1.0, 2.0, 3.0], NoiseSpec::none()).unwrap();
        assert_eq!(p.states(), 8);
        assert_eq!(p.embedding()[0], vec![-1.0, -1.0, -1.0]);
        assert_eq!(p.embedding()[4], vec![1.0, -1.0, -1.0]);
        assert_eq!(p.embedding()[1], vec![-1.0, -1.0, 1.0]);
        assert_eq!(p.mean_target()[7], 6.0);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let chain = MarkovChainModel::two_state(0.3, 0.3).unwrap();
        let emb = vec![vec![1.0], vec![-1.0]];
        assert!(RegressionProblem::new(
            chain.clone(),
            emb.clone(),
            TargetModel::Linear(vec![1.0, 2.0]),
            NoiseSpec::none()
        )
        .is_err());
        assert!(RegressionProblem::new(chain, emb, TargetModel::Tabular(vec![0.0; 3]), NoiseSpec::none())
            .is_err());
    }
}
