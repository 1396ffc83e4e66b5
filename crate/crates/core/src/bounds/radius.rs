use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const R_MIN: f64 = 1e-6;
const SCAN_POINTS: usize = 4000;

/// Solution of the fixed-point inequality `r ≥ c1 √V(r) γ₂(r) / (r √n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CriticalRadius {
    pub r: f64,
    /// The inequality already holds at `R_MIN`; `r` is that floor.
    pub floored: bool,
    /// The inequality fails at `r = 1`; `r` is clamped to 1.
    pub saturated: bool,
}

/// Smallest `r ∈ [R_MIN, 1]` with `r ≥ c1 √V(r) γ₂(r) / (r √n)`.
///
/// A log-spaced scan locates the first sign change of
/// `h(r) = r − c1 √V(r) γ₂(r) / (r √n)`, then bisection refines it.
pub fn critical_radius(
    weak_variance: impl Fn(f64) -> f64,
    gamma2: impl Fn(f64) -> f64,
    n: usize,
    c1: f64,
) -> Result<CriticalRadius> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let sqrt_n = (n as f64).sqrt();
    let h = |r: f64| -> Result<f64> {
        let v = weak_variance(r);
        let g = gamma2(r);
        let value = r - c1 * v.max(0.0).sqrt() * g / (r * sqrt_n);
        if !value.is_finite() || !v.is_finite() || !g.is_finite() {
            return Err(Error::NonFinite { r });
        }
        Ok(value)
    };
    if h(R_MIN)? >= 0.0 {
        return Ok(CriticalRadius { r: R_MIN, floored: true, saturated: false });
    }
    let ln_min = R_MIN.ln();
    let mut lo = R_MIN;
    let mut hi = None;
    for i in 1..=SCAN_POINTS {
        let r = if i == SCAN_POINTS {
            1.0
        } else {
            (ln_min * (1.0 - i as f64 / SCAN_POINTS as f64)).exp()
        };
        if h(r)? >= 0.0 {
            hi = Some(r);
            break;
        }
        lo = r;
    }
    let Some(mut hi) = hi else {
        return Ok(CriticalRadius { r: 1.0, floored: false, saturated: true });
    };
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalRadius { r: hi, floored: false, saturated: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parametric_profile_closed_form() {
        // γ₂(r) = c √d r gives r⋆ = c1 c √(V d / n)
        let (c, d, v, n, c1): (f64, f64, f64, usize, f64) = (0.886, 3.0, 0.7, 500, 1.3);
        let got = critical_radius(|_| v, |r| c * d.sqrt() * r, n, c1).unwrap();
        let want = c1 * c * (v * d / n as f64).sqrt();
        assert!(!got.floored && !got.saturated);
        assert!((got.r - want).abs() < 1e-10 * want);
    }

    #[test]
    fn zero_complexity_floors() {
        let got = critical_radius(|_| 1.0, |_| 0.0, 10, 1.0).unwrap();
        assert!(got.floored);
        assert_eq!(got.r, R_MIN);
    }

    #[test]
    fn huge_complexity_saturates() {
        let got = critical_radius(|_| 1.0, |r| 1e6 * r, 10, 1.0).unwrap();
        assert!(got.saturated);
        assert_eq!(got.r, 1.0);
    }

    #[test]
    fn non_finite_profile_is_an_error() {
        assert!(critical_radius(|_| f64::NAN, |r| r, 10, 1.0).is_err());
    }
}
