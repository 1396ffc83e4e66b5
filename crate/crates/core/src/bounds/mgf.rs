use crate::error::{Error, Result};

const CONJUGATE_TOL: f64 = 1e-12;

/// Hölder conjugate `q′` of `q ∈ [1, ∞]`.
pub fn holder_conjugate(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

/// Reject pairs with `|1/q + 1/q′ − 1| > 1e-12`.
pub fn check_conjugates(q: f64, q_conj: f64) -> Result<()> {
    let gap = (1.0 / q + 1.0 / q_conj - 1.0).abs();
    if !(q >= 1.0 && q_conj >= 1.0) || !(gap <= CONJUGATE_TOL) {
        return Err(Error::NotConjugate { q, q_conj, gap });
    }
    Ok(())
}

/// `(q′ e)^{1/p}`, with `x^{1/∞} = 1`.
pub(crate) fn qe_root(q_conj: f64, p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        (q_conj * std::f64::consts::E).powf(1.0 / p)
    }
}

/// Right end of the admissible range `λ < 1 / ((q′e)^{1/p} ‖Z‖_{Ψp})`.
pub fn admissible_lambda_upper(psi_norm: f64, p: f64, q_conj: f64) -> f64 {
    1.0 / (qe_root(q_conj, p) * psi_norm)
}

/// `exp( (λ²/2) var2q / (1 − λ (q′e)^{1/p} ‖Z‖_{Ψp}) )`, which dominates
/// `E e^{λZ}` whenever `EZ ≤ 0`; `var2q = (E Z^{2q})^{1/q}`.
pub fn bernstein_mgf_rhs(lambda: f64, var2q: f64, psi_norm: f64, p: f64, q_conj: f64) -> Result<f64> {
    super::psi::check_p(p)?;
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let upper = admissible_lambda_upper(psi_norm, p, q_conj);
    if !(lambda > 0.0 && lambda < upper) {
        return Err(Error::InadmissibleLambda { lambda, upper });
    }
    let denom = 1.0 - lambda * qe_root(q_conj, p) * psi_norm;
    Ok((0.5 * lambda * lambda * var2q / denom).exp())
}
