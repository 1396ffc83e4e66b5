//! Equal-length blocking of `[n]`, decoupled resampling, and the blocked
//! Bernstein inequality.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::processgen::{kwise_independent_surrogate, MarkovChainModel, RegressionProblem, Trajectory};

/// `[n]` split into `2m` consecutive blocks of length `k`.
///
/// Indices are zero-based: block `j` (counting from 1 as `a_j`) covers
/// `(j−1)k .. jk`. Odd blocks are `a_1, a_3, …`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingScheme {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub odd_indices: Vec<usize>,
    pub even_indices: Vec<usize>,
}

pub fn make_blocks(n: usize, k: usize) -> Result<BlockingScheme> {
    if k == 0 || n == 0 || !n.is_multiple_of(2) || !(n / 2).is_multiple_of(k) {
        return Err(Error::Divisibility { k, what: "n/2", value: n / 2 });
    }
    let m = n / (2 * k);
    let mut odd = Vec::with_capacity(n / 2);
    let mut even = Vec::with_capacity(n / 2);
    for j in 0..2 * m {
        let dest = if j % 2 == 0 { &mut odd } else { &mut even };
        dest.extend(j * k..(j + 1) * k);
    }
    Ok(BlockingScheme {
        n,
        k,
        m,
        odd_indices: odd,
        even_indices: even,
    })
}

impl BlockingScheme {
    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..2 * self.m).map(move |j| j * self.k..(j + 1) * self.k)
    }

    pub fn odd_blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.blocks().step_by(2)
    }

    pub fn even_blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.blocks().skip(1).step_by(2)
    }
}

/// The decoupled version of a trajectory: all `2m` blocks redrawn
/// independently from the chain's stationary block law.
pub fn decouple_resample(problem: &RegressionProblem, scheme: &BlockingScheme, seed: u64) -> Result<Trajectory> {
    kwise_independent_surrogate(problem, scheme.n, scheme.k, seed)
}

/// Additive error from swapping the odd (resp. even) block data for its
/// decoupled version: the sum of `β(|a_i|)` over the skipped blocks that sit
/// between retained ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecouplingGap {
    pub odd: f64,
    pub even: f64,
}

/// `betas[i]` holds `β(i + 1)`.
pub fn decoupling_gap_bound(betas: &[f64], scheme: &BlockingScheme) -> Result<DecouplingGap> {
    let bk = beta_at(betas, scheme.k)?;
    // odd data skips the even blocks a_2..a_{2m−2}; even data skips a_3..a_{2m−1}
    let gap = (scheme.m - 1) as f64 * bk;
    Ok(DecouplingGap { odd: gap, even: gap })
}

/// `(n/k) β(k)`, the probability charged for decoupling in the mixing-data
/// versions of the process bounds.
pub fn mixing_failure_term(betas: &[f64], n: usize, k: usize) -> Result<f64> {
    if k == 0 || !n.is_multiple_of(k) {
        return Err(Error::Divisibility { k, what: "n", value: n });
    }
    Ok((n / k) as f64 * beta_at(betas, k)?)
}

fn beta_at(betas: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    betas
        .get(k - 1)
        .copied()
        .ok_or_else(|| invalid("betas", format!("cover lags up to {}, need {k}", betas.len())))
}

/// `E(V̄₁)²` for the block sum `V̄₁ = Σ_{t<k} v(X_t)` of the stationary chain.
pub fn block_second_moment(chain: &MarkovChainModel, observable: &[f64], k: usize) -> Result<f64> {
    if observable.len() != chain.states() {
        return Err(invalid("observable", "length differs from the number of states"));
    }
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    let c = chain.cross_moments(observable, observable, k - 1);
    Ok(k as f64 * c[0] + 2.0 * (1..k).map(|l| (k - l) as f64 * c[l]).sum::<f64>())
}

/// Leading (variance) and range parts of the blocked Bernstein bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinTerms {
    pub variance: f64,
    pub range: f64,
}

impl BernsteinTerms {
    pub fn total(&self) -> f64 {
        self.variance + self.range
    }
}

/// `2 √(k⁻¹ E(V̄₁)² ln(1/δ) / n) + 4 b k ln(1/δ) / (3n)`: with probability at
/// least `1 − δ` the mean of `n` centred, `b`-bounded, `k`-wise independent
/// stationary variables stays below this.
pub fn blocked_bernstein_bound(b: f64, block_second_moment: f64, n: usize, k: usize, delta: f64) -> Result<f64> {
    Ok(blocked_bernstein_terms(b, block_second_moment, n, k, delta)?.total())
}

pub fn blocked_bernstein_terms(
    b: f64,
    block_second_moment: f64,
    n: usize,
    k: usize,
    delta: f64,
) -> Result<BernsteinTerms> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid("b", format!("{b} must be positive")));
    }
    if !(block_second_moment >= 0.0 && block_second_moment.is_finite()) {
        return Err(invalid("block_second_moment", format!("{block_second_moment} must be nonnegative")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0, 1)")));
    }
    if n == 0 || k == 0 || !n.is_multiple_of(k) {
        return Err(Error::Divisibility { k, what: "n", value: n });
    }
    let log = (1.0 / delta).ln();
    let (n, k) = (n as f64, k as f64);
    Ok(BernsteinTerms {
        variance: 2.0 * (block_second_moment / k * log / n).sqrt(),
        range: 4.0 * b * k * log / (3.0 * n),
    })
}
