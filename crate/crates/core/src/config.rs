//! JSON problem descriptions shared by the experiment configs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::processgen::{MarkovChainModel, NoiseSpec, RegressionProblem, TargetModel};

/// A regression problem with one dependence knob.
///
/// For `hypercube` the knob is the spectral parameter of each coordinate
/// chain; for `explicit` chains it is the laziness `λ` in `λI + (1 − λ)P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    #[serde(rename_all = "camelCase")]
    Hypercube {
        dim: usize,
        #[serde(default)]
        spectral: f64,
        beta_star: Vec<f64>,
        noise: NoiseSpec,
    },
    Explicit {
        transition: Vec<Vec<f64>>,
        embedding: Vec<Vec<f64>>,
        target: TargetModel,
        noise: NoiseSpec,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<RegressionProblem> {
        match self {
            Self::Hypercube { spectral, .. } => self.build_at(*spectral),
            Self::Explicit { .. } => self.build_at(0.0),
        }
    }

    /// The problem with its dependence knob set to `level`.
    pub fn build_at(&self, level: f64) -> Result<RegressionProblem> {
        match self {
            Self::Hypercube { dim, beta_star, noise, .. } => {
                RegressionProblem::hypercube(*dim, level, beta_star.clone(), noise.clone())
            }
            Self::Explicit { transition, embedding, target, noise } => {
                if !(0.0..1.0).contains(&level) {
                    return Err(invalid("mixingLevel", format!("{level} not in [0, 1)")));
                }
                let lazy = transition
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(j, &p)| (1.0 - level) * p + if i == j { level } else { 0.0 })
                            .collect()
                    })
                    .collect();
                RegressionProblem::new(MarkovChainModel::new(lazy)?, embedding.clone(), target.clone(), noise.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_hypercube() {
        let spec: ProblemSpec = serde_json::from_str(
            r#"{"kind":"hypercube","dim":2,"spectral":0.5,"betaStar":[1,0],
                "noise":{"kind":"bounded-iid","laws":[{"values":[-1,1],"probs":[0.5,0.5]}]}}"#,
        )
        .unwrap();
        let problem = spec.build().unwrap();
        assert_eq!(problem.states(), 4);
        assert_eq!(spec.build_at(0.0).unwrap().chain().transition()[0], vec![0.25; 4]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_noise() {
        assert!(serde_json::from_str::<ProblemSpec>(
            r#"{"kind":"hypercube","dim":2,"betaStar":[1,0],"colour":1,
                "noise":{"kind":"bounded-iid","laws":[{"values":[0],"probs":[1]}]}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<ProblemSpec>(
            r#"{"kind":"hypercube","dim":1,"betaStar":[1],
                "noise":{"kind":"martingale-difference","laws":[{"values":[0,1],"probs":[0.5,0.5]}]}}"#
        )
        .is_err());
    }

    #[test]
    fn explicit_laziness() {
        let spec = ProblemSpec::Explicit {
            transition: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            embedding: vec![vec![1.0], vec![-1.0]],
            target: TargetModel::Tabular(vec![0.0, 0.0]),
            noise: NoiseSpec::none(),
        };
        let p = spec.build_at(0.5).unwrap();
        assert_eq!(p.chain().transition()[0], vec![0.5, 0.5]);
    }
}
