use serde::{Deserialize, Serialize};

use super::theorems::{multiplier_higher_order, quadratic_deficit, BoundParams};
use crate::error::{invalid, Error, Result};

/// Tolerance at which the quadratic burn-in is evaluated.
pub const BURN_IN_EPS: f64 = 0.5;
const N_CAP: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BurnIns {
    pub n_quad: u64,
    pub n_mult: u64,
    pub k_mix: usize,
}

/// Smallest `n ≥ 1` with `ok(n)`, for a predicate that stays true once it
/// becomes true.
fn smallest_n(ok: impl Fn(u64) -> bool, what: &'static str) -> Result<u64> {
    if ok(1) {
        return Ok(1);
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while !ok(hi) {
        if hi >= N_CAP {
            return Err(invalid(what, "burn-in exceeds 2^62 samples"));
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest `n` at which the quadratic deficit (at `ε = 1/2`, unit constant)
/// is at most `r²`.
pub fn n_quad(params: &BoundParams, gamma_eta: f64, gamma_mixed: f64, r: f64) -> Result<u64> {
    check(params, r)?;
    smallest_n(
        |n| {
            let (a, b) = quadratic_deficit(params, gamma_eta, gamma_mixed, r, BURN_IN_EPS, n as f64);
            a + b <= r * r
        },
        "n_quad",
    )
}

/// Smallest `n` at which the higher-order multiplier group (unit constant)
/// is at most `r`.
pub fn n_mult(params: &BoundParams, gamma_eta: f64, r: f64) -> Result<u64> {
    check(params, r)?;
    smallest_n(
        |n| {
            let (a, b) = multiplier_higher_order(params, gamma_eta, r, n as f64);
            a + b <= r
        },
        "n_mult",
    )
}

/// `inf{k ≤ n : k / β(k) ≥ n / δ}` with `k / 0 = ∞`; `betas` yields
/// `β(1), β(2), …`.
pub fn k_mix(betas: impl IntoIterator<Item = f64>, n: usize, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0, 1)")));
    }
    let required = n as f64 / delta;
    let mut best = 0.0;
    let mut best_k = 0;
    for (i, beta) in betas.into_iter().take(n).enumerate() {
        let k = i + 1;
        let ratio = if beta <= 0.0 { f64::INFINITY } else { k as f64 / beta };
        if ratio >= required {
            return Ok(k);
        }
        if ratio > best {
            best = ratio;
            best_k = k;
        }
    }
    Err(Error::MixingTooSlow { n, required, best, best_k })
}

fn check(params: &BoundParams, r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(invalid("r", format!("{r} not in (0, 1]")));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(invalid("delta", format!("{} not in (0, 1)", params.delta)));
    }
    if params.k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_needs_unit_blocks() {
        assert_eq!(k_mix(std::iter::repeat(0.0), 10_000, 0.05).unwrap(), 1);
    }

    #[test]
    fn geometric_matches_scan() {
        let rho: f64 = 0.8;
        let got = k_mix((1..).map(|k| rho.powi(k)), 10_000, 0.05).unwrap();
        let scan = (1..=10_000).find(|&k| k as f64 * rho.powi(-(k as i32)) >= 2e5).unwrap();
        assert_eq!(got, scan);
    }

    #[test]
    fn slow_mixing_reports_requirement() {
        match k_mix(std::iter::repeat(0.5), 10, 0.05) {
            Err(Error::MixingTooSlow { required, best_k, .. }) => {
                assert_eq!(required, 200.0);
                assert_eq!(best_k, 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn n_mult_is_the_threshold() {
        let params = BoundParams { l: 1.2, eta: 1.0, p: f64::INFINITY, q_conj: f64::INFINITY, k: 4, delta: 0.05, noise_psi: 0.7 };
        let (g, r) = (0.9, 0.05);
        let n = n_mult(&params, g, r).unwrap();
        let total = |n: u64| {
            let (a, b) = multiplier_higher_order(&params, g, r, n as f64);
            a + b
        };
        assert!(total(n) <= r && total(n - 1) > r);
    }
}
