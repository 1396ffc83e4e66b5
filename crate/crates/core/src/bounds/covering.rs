use serde::{Deserialize, Serialize};

use super::quadrature::integrate_half_line;
use crate::error::{invalid, Result};

/// A covering number, flagged when it is only an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoveringCount {
    pub count: f64,
    pub upper_bound: bool,
}

fn dist(pi: &[f64], a: &[f64], b: &[f64]) -> f64 {
    crate::erm::l2_dist_sq(pi, a, b).sqrt()
}

/// Number of centres a greedy cover of `points` at scale `s` uses, in
/// `L²(π)` distance. Centres are taken from the set itself, first uncovered
/// point first.
pub fn covering_number_finite(points: &[Vec<f64>], pi: &[f64], s: f64) -> usize {
    let mut covered = vec![false; points.len()];
    let mut centres = 0;
    for i in 0..points.len() {
        if covered[i] {
            continue;
        }
        centres += 1;
        for j in i..points.len() {
            if !covered[j] && dist(pi, &points[i], &points[j]) <= s {
                covered[j] = true;
            }
        }
    }
    centres
}

/// Volumetric bound `⌈(1 + 2r/s)^d⌉` for a radius-`r` ball of a
/// `d`-dimensional normed space.
pub fn covering_number_linear_ball(dim: usize, r: f64, s: f64) -> Result<CoveringCount> {
    if !(s > 0.0) {
        return Err(invalid("s", "scale must be positive"));
    }
    Ok(CoveringCount {
        count: (1.0 + 2.0 * r / s).powi(dim as i32).ceil(),
        upper_bound: true,
    })
}

/// `s ↦ ln N(F⋆ ∩ rS, s)` for the localized class at radius `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoveringProfile {
    /// `d · ln(r/s)` for `s < r`, zero beyond: a `d`-dimensional set of radius `r`.
    Parametric { dim: f64 },
    /// `ln ⌈(1 + 2r/s)^d⌉`.
    Volumetric { dim: f64 },
    /// The sphere of a finite star hull: `{r u : u ∈ directions}` with unit
    /// `L²(π)` directions `u`, covered greedily.
    Directions { directions: Vec<Vec<f64>>, pi: Vec<f64> },
}

impl CoveringProfile {
    pub fn log_covering(&self, r: f64, s: f64) -> f64 {
        match self {
            Self::Parametric { dim } => {
                if s >= r {
                    0.0
                } else {
                    dim * (r / s).ln()
                }
            }
            Self::Volumetric { dim } => {
                let log = dim * (2.0 * r / s).ln_1p();
                // the ceiling only matters while the count is small
                if log < 30.0 {
                    log.exp().ceil().ln()
                } else {
                    log
                }
            }
            Self::Directions { directions, pi } => {
                if directions.is_empty() {
                    0.0
                } else {
                    (covering_number_finite(directions, pi, s / r) as f64).ln()
                }
            }
        }
    }
}

/// `∫_0^r (ln N(s))^{1/α} ds` by quadrature after the substitution `s = r e^{-t}`.
pub fn entropy_integral_quadrature(profile: &CoveringProfile, r: f64, alpha: f64, rel_tol: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    r * integrate_half_line(
        |t| {
            let s = r * (-t).exp();
            profile.log_covering(r, s).max(0.0).powf(1.0 / alpha) * (-t).exp()
        },
        rel_tol,
    )
}

/// Exact entropy integral of a [`CoveringProfile::Directions`] profile: the
/// greedy count only changes where `s/r` crosses a pairwise distance.
pub(crate) fn entropy_integral_directions(directions: &[Vec<f64>], pi: &[f64], r: f64, alpha: f64) -> f64 {
    if r <= 0.0 || directions.len() < 2 {
        return 0.0;
    }
    let mut cuts: Vec<f64> = Vec::new();
    for i in 0..directions.len() {
        for j in i + 1..directions.len() {
            let d = dist(pi, &directions[i], &directions[j]);
            if d > 0.0 && d < 1.0 {
                cuts.push(d);
            }
        }
    }
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let count = covering_number_finite(directions, pi, lo) as f64;
        total += (hi - lo) * count.ln().powf(1.0 / alpha);
    }
    r * total
}
