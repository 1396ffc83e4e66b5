use serde::{Deserialize, Serialize};

use super::sweep::{CellInfo, SweepResult};
use crate::error::{invalid, Error, Result};

/// Median excess risk of one cell next to its bound-side quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellSummary {
    #[serde(flatten)]
    pub cell: CellInfo,
    pub median: f64,
    pub replicates: usize,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

pub fn cell_medians(result: &SweepResult) -> Vec<CellSummary> {
    result
        .cells
        .iter()
        .map(|cell| {
            let mut v: Vec<f64> = result
                .rows
                .iter()
                .filter(|r| r.n_grid == cell.n && r.mixing_level == cell.mixing_level)
                .map(|r| r.excess_risk)
                .collect();
            let replicates = v.len();
            CellSummary { cell: cell.clone(), median: median(&mut v), replicates }
        })
        .collect()
}

/// `ln median ≈ logConstant + exponent · ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RateFit {
    pub exponent: f64,
    pub log_constant: f64,
    pub r_squared: f64,
    /// `(n, median)` pairs used.
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares on `(ln n, ln median)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: points.len() });
    }
    if let Some(&(n, m)) = points.iter().find(|&&(n, m)| !(n > 0.0 && m > 0.0)) {
        return Err(invalid("medians", format!("nonpositive point ({n}, {m}) cannot be fitted on a log scale")));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, m)| (n.ln(), m.ln())).collect();
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(invalid("n", "fit needs at least two distinct sample sizes"));
    }
    let exponent = sxy / sxx;
    let log_constant = my - exponent * mx;
    let sse: f64 = xy.iter().map(|p| (p.1 - log_constant - exponent * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RateFit { exponent, log_constant, r_squared, points: points.to_vec() })
}

/// Number of adjacent pairs on the `n` grid where the median goes up.
pub fn monotone_inversions(medians: &[(f64, f64)]) -> usize {
    let mut sorted = medians.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.windows(2).filter(|w| w[1].1 > w[0].1).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelConstant {
    pub mixing_level: f64,
    /// `exp(mean ln(n · median))` over the retained `n`: the constant `C` in
    /// `median ≈ C / n`.
    pub leading_constant: f64,
    /// Block length used at the largest retained `n`.
    pub k: usize,
    pub k_mix: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MixingFreeReport {
    /// Sample sizes past the burn-in at every level.
    pub n_used: Vec<usize>,
    pub levels: Vec<LevelConstant>,
    /// Leading constant of the slowest-mixing level over the fastest.
    pub constant_ratio: f64,
    /// Block length of the slowest-mixing level over the fastest: what a
    /// bound scaling with `k` would predict.
    pub naive_ratio: f64,
}

/// Compare leading constants across mixing levels on the sample sizes that
/// are past the computed burn-ins for every level.
pub fn mixing_free_check(cells: &[CellSummary]) -> Result<MixingFreeReport> {
    let mut levels: Vec<f64> = cells.iter().map(|c| c.cell.mixing_level).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < 2 {
        return Err(invalid("mixingLevels", "need at least two mixing levels"));
    }
    let mut ns: Vec<usize> = cells.iter().map(|c| c.cell.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let at = |level: f64, n: usize| cells.iter().find(|c| c.cell.mixing_level == level && c.cell.n == n);
    let n_used: Vec<usize> = ns
        .into_iter()
        .filter(|&n| levels.iter().all(|&l| at(l, n).is_some_and(|c| c.cell.past_burn_in && c.median > 0.0)))
        .collect();
    if n_used.is_empty() {
        let detail = cells
            .iter()
            .map(|c| {
                format!(
                    "level {} n {}: nQuad {} nMult {} k {} kMix {}",
                    c.cell.mixing_level, c.cell.n, c.cell.n_quad, c.cell.n_mult, c.cell.k, c.cell.k_mix
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::NoPointPastBurnIn { detail });
    }
    let largest = *n_used.last().expect("nonempty");
    let constants: Vec<LevelConstant> = levels
        .iter()
        .map(|&l| {
            let mean_log = n_used
                .iter()
                .map(|&n| (n as f64 * at(l, n).expect("present").median).ln())
                .sum::<f64>()
                / n_used.len() as f64;
            let top = at(l, largest).expect("present");
            LevelConstant { mixing_level: l, leading_constant: mean_log.exp(), k: top.cell.k, k_mix: top.cell.k_mix }
        })
        .collect();
    let (fast, slow) = (&constants[0], &constants[constants.len() - 1]);
    Ok(MixingFreeReport {
        constant_ratio: slow.leading_constant / fast.leading_constant,
        naive_ratio: slow.k as f64 / fast.k as f64,
        n_used,
        levels: constants,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelFit {
    pub mixing_level: f64,
    pub fit: Option<RateFit>,
    pub inversions: usize,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepSummary {
    pub cells: Vec<CellSummary>,
    pub fits: Vec<LevelFit>,
    pub mixing_free: Option<MixingFreeReport>,
    /// Why `mixingFree` is absent, when it is.
    pub mixing_free_error: Option<String>,
    /// At most one inversion per level.
    pub monotone: bool,
}

pub fn summarize(result: &SweepResult) -> SweepSummary {
    let cells = cell_medians(result);
    let mut levels: Vec<f64> = cells.iter().map(|c| c.cell.mixing_level).collect();
    levels.dedup();
    let fits: Vec<LevelFit> = levels
        .iter()
        .map(|&l| {
            let pts: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.cell.mixing_level == l)
                .map(|c| (c.cell.n as f64, c.median))
                .collect();
            LevelFit { mixing_level: l, fit: fit_rate(&pts).ok(), inversions: monotone_inversions(&pts) }
        })
        .collect();
    let (mixing_free, mixing_free_error) = if levels.len() >= 2 {
        match mixing_free_check(&cells) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    SweepSummary {
        monotone: fits.iter().all(|f| f.inversions <= 1),
        cells,
        fits,
        mixing_free,
        mixing_free_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [64.0, 128.0, 256.0, 512.0].iter().map(|&n| (n, 3.0 / n)).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-9);
        assert!((f.log_constant - 3f64.ln()).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [64.0f64, 128.0, 256.0].iter().map(|&n| (n, 2.0 / n.sqrt())).collect();
        assert!((fit_rate(&pts).unwrap().exponent + 0.5).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.1)]).is_err());
    }

    #[test]
    fn inversions_counted() {
        assert_eq!(monotone_inversions(&[(1.0, 3.0), (2.0, 2.0), (4.0, 2.5), (8.0, 1.0)]), 1);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    fn cell(level: f64, n: usize, k: usize, past: bool, median: f64) -> CellSummary {
        CellSummary {
            cell: CellInfo {
                n,
                mixing_level: level,
                k,
                n_quad: 1,
                n_mult: 1,
                k_mix: k,
                r_star: 0.1,
                risk_bound: 0.1,
                weak_variance: 1.0,
                past_burn_in: past,
            },
            median,
            replicates: 1,
        }
    }

    #[test]
    fn identical_levels_give_unit_ratio() {
        let cells: Vec<CellSummary> = [0.0, 0.5]
            .iter()
            .flat_map(|&l| [100, 200].map(|n| cell(l, n, if l > 0.0 { 8 } else { 1 }, true, 2.0 / n as f64)))
            .collect();
        let r = mixing_free_check(&cells).unwrap();
        assert!((r.constant_ratio - 1.0).abs() < 1e-12);
        assert_eq!(r.naive_ratio, 8.0);
    }

    #[test]
    fn no_point_past_burn_in() {
        let cells = vec![cell(0.0, 100, 1, true, 0.1), cell(0.9, 100, 4, false, 0.1)];
        assert!(matches!(mixing_free_check(&cells), Err(Error::NoPointPastBurnIn { .. })));
    }
}
