use super::covering::{entropy_integral_directions, entropy_integral_quadrature, CoveringProfile};
use crate::error::{invalid, Result};

pub const GAMMA_REL_TOL: f64 = 1e-6;

/// Entropy-integral upper bound `c_α ∫_0^r (ln N(s))^{1/α} ds` on
/// `γ_α(F⋆ ∩ rS, d_{L²})`.
///
/// The parametric profile uses the closed form `c_α d^{1/α} r Γ(1/α + 1)`,
/// direction profiles are integrated exactly, anything else by quadrature.
pub fn gamma_alpha_upper(profile: &CoveringProfile, r: f64, alpha: f64, c_alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("{alpha} must be positive")));
    }
    if r <= 0.0 {
        return Ok(0.0);
    }
    let integral = match profile {
        CoveringProfile::Parametric { dim } => gamma_parametric(*dim, r, alpha),
        CoveringProfile::Directions { directions, pi } => entropy_integral_directions(directions, pi, r, alpha),
        CoveringProfile::Volumetric { .. } => entropy_integral_quadrature(profile, r, alpha, GAMMA_REL_TOL * 1e-2),
    };
    Ok(c_alpha * integral)
}

/// `∫_0^r (d ln(r/s))^{1/α} ds = d^{1/α} r Γ(1/α + 1)`.
pub fn gamma_parametric(dim: f64, r: f64, alpha: f64) -> f64 {
    dim.powf(1.0 / alpha) * r * libm::tgamma(1.0 / alpha + 1.0)
}

/// Same integral as [`gamma_alpha_upper`], always by quadrature.
pub fn gamma_alpha_quadrature(profile: &CoveringProfile, r: f64, alpha: f64, c_alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("{alpha} must be positive")));
    }
    Ok(c_alpha * entropy_integral_quadrature(profile, r, alpha, GAMMA_REL_TOL * 1e-2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parametric_closed_form_matches_quadrature() {
        for &(d, alpha) in &[(1.0, 2.0), (3.0, 2.0), (5.0, 1.0), (2.0, 0.5), (4.0, 1.5)] {
            let profile = CoveringProfile::Parametric { dim: d };
            let closed = gamma_alpha_upper(&profile, 0.4, alpha, 1.0).unwrap();
            let quad = gamma_alpha_quadrature(&profile, 0.4, alpha, 1.0).unwrap();
            assert!((closed / quad - 1.0).abs() < 1e-5, "d={d} alpha={alpha}: {closed} vs {quad}");
        }
    }

    #[test]
    fn gamma_two_uses_half_root_pi() {
        let g = gamma_alpha_upper(&CoveringProfile::Parametric { dim: 4.0 }, 1.0, 2.0, 1.0).unwrap();
        assert!((g - 2.0 * std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn vanishes_at_zero_radius() {
        let profile = CoveringProfile::Volumetric { dim: 3.0 };
        assert_eq!(gamma_alpha_upper(&profile, 0.0, 2.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_alpha() {
        let profile = CoveringProfile::Parametric { dim: 1.0 };
        assert!(gamma_alpha_upper(&profile, 0.5, 0.0, 1.0).is_err());
        assert!(gamma_alpha_upper(&profile, 0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn volumetric_is_monotone() {
        let mut last = 0.0;
        for i in 1..=10 {
            let r = i as f64 / 10.0;
            let g = gamma_alpha_upper(&CoveringProfile::Volumetric { dim: 2.0 }, r, 2.0, 1.0).unwrap();
            assert!(g >= last);
            last = g;
        }
    }
}
