//! Right-hand sides of the multiplier-process upper bound and the
//! quadratic-process lower bound, term by term.

use serde::{Deserialize, Serialize};

use super::serde_inf;
use crate::error::{invalid, Result};

/// Class, noise and blocking data shared by both bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundParams {
    /// `(L, η)` of the weakly sub-Gaussian certificate for `F⋆ − F⋆`.
    pub l: f64,
    pub eta: f64,
    #[serde(with = "serde_inf")]
    pub p: f64,
    #[serde(with = "serde_inf")]
    pub q_conj: f64,
    pub k: usize,
    pub delta: f64,
    /// `‖W‖_{Ψp}`.
    pub noise_psi: f64,
}

/// Localized complexities `V_{2q}`, `γ₂`, `γ_η`, `γ_{(2+6η)/4}` at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalComplexity {
    pub weak_variance: f64,
    pub gamma2: f64,
    pub gamma_eta: f64,
    pub gamma_mixed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MultiplierTerms {
    /// `c2 √V γ₂ / (r √n)`
    pub variance_complexity: f64,
    /// `c2 √V √(ln(1/δ)/n)`
    pub variance_confidence: f64,
    /// `c1 (q′e)^{2/p} L k ‖W‖_{Ψp} γ_η / (r n)`
    pub higher_complexity: f64,
    /// `c1 (q′e)^{2/p} L k ‖W‖_{Ψp} r^{η−1} ln(1/δ) / n`
    pub higher_confidence: f64,
}

impl MultiplierTerms {
    pub fn variance_group(&self) -> f64 {
        self.variance_complexity + self.variance_confidence
    }

    pub fn higher_order_group(&self) -> f64 {
        self.higher_complexity + self.higher_confidence
    }

    pub fn total(&self) -> f64 {
        self.variance_group() + self.higher_order_group()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadraticTerms {
    /// `r²(1 − ε²)`
    pub leading: f64,
    /// `c n^{-1/2} √k L^{7/4} r^η ℓ (γ_{(2+6η)/4} + r^{(1+3η)/4} √ln(1/δ))`
    pub first: f64,
    /// `c n^{-1} q′^{1/p} k r^η ℓ L² (γ_η + r^η ln(1/δ))`
    pub second: f64,
}

impl QuadraticTerms {
    pub fn deficit(&self) -> f64 {
        self.first + self.second
    }

    /// Lower bound on `n⁻¹ Σ f(X_i)²` over the sphere of radius `r`.
    pub fn lower_bound(&self) -> f64 {
        self.leading - self.deficit()
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(invalid("r", format!("{r} not in (0, 1]")));
    }
    Ok(())
}

fn check_common(params: &BoundParams, n: usize) -> Result<()> {
    super::psi::check_p(params.p)?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(invalid("delta", format!("{} not in (0, 1)", params.delta)));
    }
    if !(params.eta > 0.0 && params.eta <= 1.0) {
        return Err(invalid("eta", format!("{} not in (0, 1]", params.eta)));
    }
    Ok(())
}

/// `x^{1/p}` with `x^{1/∞} = 1`.
fn root_p(x: f64, p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        x.max(0.0).powf(1.0 / p)
    }
}

/// `(ln(4^{2/p} L / (ε r)))^{1/p}`.
fn log_factor(l: f64, p: f64, eps: f64, r: f64) -> f64 {
    let four = if p.is_infinite() { 1.0 } else { 4f64.powf(2.0 / p) };
    root_p((four * l / (eps * r)).ln(), p)
}

/// Higher-order group of the multiplier bound with unit constant; the
/// multiplier burn-in asks for it to be at most `r`.
pub(crate) fn multiplier_higher_order(params: &BoundParams, gamma_eta: f64, r: f64, n: f64) -> (f64, f64) {
    let qe = super::mgf::qe_root(params.q_conj, params.p).powi(2);
    let scale = qe * params.l * params.k as f64 * params.noise_psi;
    let ln = (1.0 / params.delta).ln();
    (
        scale * gamma_eta / (r * n),
        scale * r.powf(params.eta - 1.0) * ln / n,
    )
}

/// Deficit terms of the quadratic bound with unit constant.
pub(crate) fn quadratic_deficit(params: &BoundParams, gamma_eta: f64, gamma_mixed: f64, r: f64, eps: f64, n: f64) -> (f64, f64) {
    let (l, eta, p) = (params.l, params.eta, params.p);
    let k = params.k as f64;
    let ln = (1.0 / params.delta).ln();
    let logf = log_factor(l, p, eps, r);
    let r_eta = r.powf(eta);
    let first = k.sqrt() * l.powf(1.75) * r_eta * logf * (gamma_mixed + r.powf((1.0 + 3.0 * eta) / 4.0) * ln.sqrt()) / n.sqrt();
    let second = root_p(params.q_conj, p) * k * r_eta * logf * l * l * (gamma_eta + r_eta * ln) / n;
    (first, second)
}

/// Upper bound on `sup_{f ∈ F⋆ ∩ rS} (rn)⁻¹ Σ (1 − E)⟨W_i, f(X_i)⟩`.
pub fn multiplier_bound_rhs(
    params: &BoundParams,
    local: &LocalComplexity,
    r: f64,
    n: usize,
    c1: f64,
    c2: f64,
) -> Result<MultiplierTerms> {
    check_radius(r)?;
    check_common(params, n)?;
    let nf = n as f64;
    let sd = local.weak_variance.max(0.0).sqrt();
    let ln = (1.0 / params.delta).ln();
    let (hc, hl) = multiplier_higher_order(params, local.gamma_eta, r, nf);
    Ok(MultiplierTerms {
        variance_complexity: c2 * sd * local.gamma2 / (r * nf.sqrt()),
        variance_confidence: c2 * sd * (ln / nf).sqrt(),
        higher_complexity: c1 * hc,
        higher_confidence: c1 * hl,
    })
}

/// Lower bound on `n⁻¹ Σ f(X_i)²` uniformly over `F⋆ ∩ rS`, for tolerance `ε`.
pub fn quadratic_bound_rhs(
    params: &BoundParams,
    local: &LocalComplexity,
    r: f64,
    n: usize,
    eps: f64,
    c: f64,
) -> Result<QuadraticTerms> {
    check_radius(r)?;
    check_common(params, n)?;
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("{eps} must be positive")));
    }
    let (first, second) = quadratic_deficit(params, local.gamma_eta, local.gamma_mixed, r, eps, n as f64);
    Ok(QuadraticTerms {
        leading: r * r * (1.0 - eps * eps),
        first: c * first,
        second: c * second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: usize) -> BoundParams {
        BoundParams { l: 1.5, eta: 1.0, p: f64::INFINITY, q_conj: f64::INFINITY, k, delta: 0.05, noise_psi: 0.5 }
    }

    fn local() -> LocalComplexity {
        LocalComplexity { weak_variance: 0.25, gamma2: 0.3, gamma_eta: 0.6, gamma_mixed: 0.3 }
    }

    #[test]
    fn doubling_k_doubles_only_higher_order_group() {
        let a = multiplier_bound_rhs(&params(3), &local(), 0.2, 1000, 1.0, 1.0).unwrap();
        let b = multiplier_bound_rhs(&params(6), &local(), 0.2, 1000, 1.0, 1.0).unwrap();
        assert_eq!(a.variance_group(), b.variance_group());
        assert!((b.higher_order_group() - 2.0 * a.higher_order_group()).abs() < 1e-15);
    }

    #[test]
    fn vanishes_without_complexity_or_confidence() {
        let mut p = params(1);
        p.delta = 1.0 - 1e-16;
        let zero = LocalComplexity { weak_variance: 1.0, gamma2: 0.0, gamma_eta: 0.0, gamma_mixed: 0.0 };
        let t = multiplier_bound_rhs(&p, &zero, 0.5, 100, 1.0, 1.0).unwrap();
        assert!(t.total() < 1e-7);
    }

    #[test]
    fn radius_outside_unit_interval_is_rejected() {
        assert!(multiplier_bound_rhs(&params(1), &local(), 1.5, 10, 1.0, 1.0).is_err());
        assert!(quadratic_bound_rhs(&params(1), &local(), 0.0, 10, 0.5, 1.0).is_err());
    }

    #[test]
    fn quadratic_lower_bound_approaches_leading_term() {
        let t = quadratic_bound_rhs(&params(2), &local(), 0.3, 1 << 40, 0.5, 1.0).unwrap();
        assert!((t.lower_bound() - 0.09 * 0.75).abs() < 1e-5);
    }
}
