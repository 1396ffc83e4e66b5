use serde::{Deserialize, Serialize};

use super::serde_inf;
use crate::error::{invalid, Result};
use crate::law::FiniteLaw;

pub const DEFAULT_M_MAX: usize = 200;

/// `‖Z‖_{Ψp} = sup_{m ≥ 1} m^{-1/p} ‖Z‖_{L^m}`, with the supremum taken over
/// integer moments `m = 1..=m_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PsiNormEstimate {
    #[serde(with = "serde_inf")]
    pub p: f64,
    pub value: f64,
    pub m_max: usize,
    /// The moment attaining the supremum.
    pub argmax: usize,
    /// No `m > m_max` can exceed `value`: `m_max^{-1/p} · ess sup ≤ value`.
    pub exact: bool,
    /// Convergence diagnostic: the running supremum over `m ≤ m_max / 2`.
    pub value_at_half: f64,
}

pub fn psi_p_norm(law: &FiniteLaw, p: f64, m_max: usize) -> Result<PsiNormEstimate> {
    check_p(p)?;
    if m_max == 0 {
        return Err(invalid("m_max", "must be at least 1"));
    }
    let sup = law.ess_sup();
    if p.is_infinite() {
        return Ok(PsiNormEstimate {
            p,
            value: sup,
            m_max,
            argmax: m_max,
            exact: true,
            value_at_half: sup,
        });
    }
    let mut best = 0.0;
    let mut argmax = 1;
    let mut at_half = 0.0;
    for m in 1..=m_max {
        let v = (m as f64).powf(-1.0 / p) * law.lm_norm(m as f64);
        if v > best {
            best = v;
            argmax = m;
        }
        if m == (m_max / 2).max(1) {
            at_half = best;
        }
    }
    Ok(PsiNormEstimate {
        p,
        value: best,
        m_max,
        argmax,
        exact: (m_max as f64).powf(-1.0 / p) * sup <= best,
        value_at_half: at_half,
    })
}

/// Plug-in estimate from a sample (the empirical law).
pub fn psi_p_norm_sample(sample: &[f64], p: f64, m_max: usize) -> Result<PsiNormEstimate> {
    if sample.is_empty() {
        return Err(invalid("sample", "empty"));
    }
    psi_p_norm(&FiniteLaw::empirical(sample)?, p, m_max)
}

/// `2^{2/p} ‖Z‖_{Ψp} ‖Z′‖_{Ψp}`, an upper bound on `‖Z Z′‖_{Ψ_{p/2}}`.
pub fn psi_product_bound(z: &FiniteLaw, z_prime: &FiniteLaw, p: f64, m_max: usize) -> Result<f64> {
    let a = psi_p_norm(z, p, m_max)?.value;
    let b = psi_p_norm(z_prime, p, m_max)?.value;
    Ok(2f64.powf(2.0 / p) * a * b)
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("{p} not in [1, inf]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sup_norm() {
        let e = psi_p_norm(&FiniteLaw::point(-3.0), f64::INFINITY, 10).unwrap();
        assert_eq!(e.value, 3.0);
        assert!(e.exact);
    }

    #[test]
    fn rademacher_psi2_is_one() {
        let e = psi_p_norm(&FiniteLaw::rademacher(1.0), 2.0, 200).unwrap();
        assert!((e.value - 1.0).abs() < 1e-15);
        assert_eq!(e.argmax, 1);
        assert!(e.exact);
    }

    #[test]
    fn three_point_uniform_matches_sweep() {
        let law = FiniteLaw::new(vec![-1.0, 0.0, 1.0], vec![1.0 / 3.0; 3]).unwrap();
        let e = psi_p_norm(&law, 2.0, 200).unwrap();
        let oracle = (1..=200)
            .map(|m| (m as f64).powf(-0.5) * (2.0f64 / 3.0).powf(1.0 / m as f64))
            .fold(0.0, f64::max);
        assert!((e.value - oracle).abs() < 1e-14);
    }

    #[test]
    fn rejects_p_below_one() {
        assert!(psi_p_norm(&FiniteLaw::point(1.0), 0.5, 10).is_err());
        assert!(psi_p_norm_sample(&[], 2.0, 10).is_err());
    }
}
