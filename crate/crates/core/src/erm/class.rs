use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processgen::RegressionProblem;

/// Hypothesis class over the covariates of a [`RegressionProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HypothesisClass {
    /// `x ↦ ⟨θ, x⟩`, `θ ∈ R^dim`.
    Linear { dim: usize },
    /// Finitely many functions of the chain state, one table per hypothesis.
    Finite { hypotheses: Vec<Vec<f64>> },
}

impl HypothesisClass {
    pub fn validate(&self, problem: &RegressionProblem) -> Result<()> {
        match self {
            Self::Linear { dim } => {
                if *dim == 0 || *dim != problem.dim() {
                    return Err(Error::InvalidProblem(format!(
                        "linear class of dimension {dim} for covariates of dimension {}",
                        problem.dim()
                    )));
                }
            }
            Self::Finite { hypotheses } => {
                if hypotheses.is_empty() {
                    return Err(Error::EmptyClass);
                }
                if let Some(i) = hypotheses.iter().position(|h| h.len() != problem.states()) {
                    return Err(Error::InvalidProblem(format!(
                        "hypothesis {i} has {} entries for {} states",
                        hypotheses[i].len(),
                        problem.states()
                    )));
                }
                if hypotheses.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidProblem("hypothesis tables must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// One member of a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    Linear(Vec<f64>),
    /// Member `index` of a finite class.
    Finite(usize),
}

impl Hypothesis {
    /// Values of the hypothesis at every chain state.
    pub fn table(&self, problem: &RegressionProblem, class: &HypothesisClass) -> Vec<f64> {
        match (self, class) {
            (Self::Linear(theta), _) => problem.linear_table(theta),
            (Self::Finite(i), HypothesisClass::Finite { hypotheses }) => hypotheses[*i].clone(),
            (Self::Finite(_), HypothesisClass::Linear { .. }) => {
                panic!("finite hypothesis evaluated against a linear class")
            }
        }
    }
}

/// `Σ_x π(x) a(x) b(x)`.
pub(crate) fn l2_inner(pi: &[f64], a: &[f64], b: &[f64]) -> f64 {
    pi.iter().zip(a).zip(b).map(|((p, x), y)| p * x * y).sum()
}

/// `‖a − b‖²_{L²(π)}`.
pub(crate) fn l2_dist_sq(pi: &[f64], a: &[f64], b: &[f64]) -> f64 {
    pi.iter().zip(a).zip(b).map(|((p, x), y)| p * (x - y) * (x - y)).sum()
}
