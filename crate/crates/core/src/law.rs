//! Finite-support real distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-12;

/// A probability law on finitely many real values.
///
/// Atoms with zero probability are kept (they do not affect moments) but are
/// ignored by [`FiniteLaw::ess_sup`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawRepr")]
pub struct FiniteLaw {
    values: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LawRepr {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<LawRepr> for FiniteLaw {
    type Error = Error;

    fn try_from(r: LawRepr) -> Result<Self> {
        Self::new(r.values, r.probs)
    }
}

impl FiniteLaw {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidNoise("empty support".into()));
        }
        if values.len() != probs.len() {
            return Err(Error::InvalidNoise(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNoise("non-finite support value".into()));
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidNoise("probability outside [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidNoise(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { values, probs })
    }

    /// Point mass at `value`.
    pub fn point(value: f64) -> Self {
        Self {
            values: vec![value],
            probs: vec![1.0],
        }
    }

    /// Uniform law on the given values (plug-in law of a sample).
    pub fn empirical(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InvalidNoise("empty sample".into()));
        }
        let w = 1.0 / sample.len() as f64;
        Self::new(sample.to_vec(), vec![w; sample.len()]).or_else(|_| {
            // rounding in 1/len can push the sum a hair past the tolerance
            let mut probs = vec![w; sample.len()];
            let s: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= s);
            Ok(Self {
                values: sample.to_vec(),
                probs,
            })
        })
    }

    /// Weighted mixture of laws; weights must sum to one.
    pub fn mixture(components: &[(f64, FiniteLaw)]) -> Result<Self> {
        let mut values = Vec::new();
        let mut probs = Vec::new();
        for (w, law) in components {
            for (v, p) in law.atoms() {
                values.push(v);
                probs.push(w * p);
            }
        }
        Self::new(values, probs)
    }

    /// Symmetric two-point law on `{-scale, +scale}`.
    pub fn rademacher(scale: f64) -> Self {
        Self {
            values: vec![-scale, scale],
            probs: vec![0.5, 0.5],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.atoms().map(|(v, p)| p * (v - mu) * (v - mu)).sum()
    }

    /// `E|Z|^m` for real `m > 0`.
    pub fn abs_moment(&self, m: f64) -> f64 {
        self.atoms()
            .filter(|&(_, p)| p > 0.0)
            .map(|(v, p)| p * v.abs().powf(m))
            .sum()
    }

    /// `E|Z - EZ|^m`.
    pub fn central_abs_moment(&self, m: f64) -> f64 {
        let mu = self.mean();
        self.atoms()
            .filter(|&(_, p)| p > 0.0)
            .map(|(v, p)| p * (v - mu).abs().powf(m))
            .sum()
    }

    /// `‖Z‖_{L^m}`, computed in log space so large `m` does not overflow.
    pub fn lm_norm(&self, m: f64) -> f64 {
        let logs: Vec<(f64, f64)> = self
            .atoms()
            .filter(|&(v, p)| p > 0.0 && v != 0.0)
            .map(|(v, p)| (p.ln(), v.abs().ln()))
            .collect();
        if logs.is_empty() {
            return 0.0;
        }
        let top = logs
            .iter()
            .map(|&(lp, lv)| lp + m * lv)
            .fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|&(lp, lv)| (lp + m * lv - top).exp()).sum();
        ((top + s.ln()) / m).exp()
    }

    /// Largest `|z|` carrying positive probability.
    pub fn ess_sup(&self) -> f64 {
        self.atoms()
            .filter(|&(_, p)| p > 0.0)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Law of `scale * Z + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| scale * v + shift).collect(),
            probs: self.probs.clone(),
        }
    }

    pub(crate) fn sampler(&self) -> CumulativeSampler {
        CumulativeSampler::new(&self.probs)
    }
}

/// Inverse-CDF sampler over a fixed probability vector.
#[derive(Debug, Clone)]
pub(crate) struct CumulativeSampler {
    cumulative: Vec<f64>,
}

impl CumulativeSampler {
    pub(crate) fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // guard against u landing above a total of 1 - 1e-16
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        Self { cumulative }
    }

    #[inline]
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // zero-probability trailing atoms can never be selected
        idx.min(self.cumulative.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_probabilities() {
        assert!(FiniteLaw::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(FiniteLaw::new(vec![], vec![]).is_err());
        assert!(FiniteLaw::new(vec![1.0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn lm_norm_matches_direct_moment() {
        let law = FiniteLaw::new(vec![-2.0, 0.5, 3.0], vec![0.2, 0.5, 0.3]).unwrap();
        for m in [1.0, 2.0, 3.5, 10.0] {
            let direct = law.abs_moment(m).powf(1.0 / m);
            assert!((law.lm_norm(m) - direct).abs() < 1e-12 * direct);
        }
        // large m tends to the ess-sup without overflow
        assert!((law.lm_norm(5000.0) - 3.0).abs() < 1e-3);
    }

    #[test]
    fn rademacher_moments() {
        let law = FiniteLaw::rademacher(2.0);
        assert_eq!(law.mean(), 0.0);
        assert_eq!(law.variance(), 4.0);
        assert_eq!(law.ess_sup(), 2.0);
    }
}
