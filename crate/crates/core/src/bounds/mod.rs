//! Bound calculus: Ψp norms, the Ψp-Bernstein MGF bound, weak variance,
//! covering numbers and entropy integrals, critical radii, burn-ins,
//! class certification and the final risk bound.

mod burnin;
mod certify;
mod covering;
mod gamma;
mod mgf;
mod psi;
mod quadrature;
mod radius;
mod report;
mod theorems;
mod weak_variance;

pub use burnin::{k_mix, n_mult, n_quad, BurnIns, BURN_IN_EPS};
pub use certify::{
    certify_functions, certify_linear, certify_sampled, certify_weak_subgaussian, function_norms, sphere_grid,
    CertifyMethod, ClassCertificate, SphereGrid,
};
pub use covering::{covering_number_finite, covering_number_linear_ball, entropy_integral_quadrature, CoveringCount, CoveringProfile};
pub use gamma::{gamma_alpha_quadrature, gamma_alpha_upper, gamma_parametric};
pub use mgf::{admissible_lambda_upper, bernstein_mgf_rhs, check_conjugates, holder_conjugate};
pub use psi::{psi_p_norm, psi_p_norm_sample, psi_product_bound, PsiNormEstimate, DEFAULT_M_MAX};
pub use quadrature::{integrate, integrate_half_line};
pub use radius::{critical_radius, CriticalRadius, R_MIN};
pub use report::{block_length_for, compute_bound_report, risk_bound, BoundReport, BoundSettings, BoundTerms, Constants, TermRow};
pub use theorems::{multiplier_bound_rhs, quadratic_bound_rhs, BoundParams, LocalComplexity, MultiplierTerms, QuadraticTerms};
pub use weak_variance::{weak_variance_2q, weak_variance_linear, WeakVarianceEstimate, WeakVarianceMode, DEFAULT_ENUMERATION_CAP};

/// Serialize `f64` exponents with `∞` written as `"inf"`.
pub mod serde_inf {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Repr::Str(s) => Err(de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}
