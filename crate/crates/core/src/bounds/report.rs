use serde::{Deserialize, Serialize};

use super::burnin::{k_mix, n_mult, n_quad, BURN_IN_EPS};
use super::certify::{certify_functions, certify_linear, ClassCertificate, SphereGrid};
use super::covering::CoveringProfile;
use super::gamma::gamma_alpha_upper;
use super::mgf::check_conjugates;
use super::psi::{psi_p_norm, DEFAULT_M_MAX};
use super::radius::{critical_radius, CriticalRadius};
use super::serde_inf;
use super::theorems::{multiplier_bound_rhs, quadratic_bound_rhs, BoundParams, LocalComplexity, MultiplierTerms, QuadraticTerms};
use super::weak_variance::{weak_variance_2q, weak_variance_linear, WeakVarianceMode};
use crate::erm::{l2_dist_sq, population_quantities, HypothesisClass, PopulationQuantities};
use crate::error::{invalid, Error, Result};
use crate::processgen::{BetaSequence, RegressionProblem};

/// `c2 (r⋆² + V ln(1/δ) / n)`.
pub fn risk_bound(r_star: f64, weak_variance: f64, n: usize, delta: f64, c2: f64) -> f64 {
    c2 * (r_star * r_star + weak_variance * (1.0 / delta).ln() / n as f64)
}

/// Universal constants; the bounds hold for some unknown values, so all
/// default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Constants {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_alpha: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { c: 1.0, c1: 1.0, c2: 1.0, c3: 1.0, c_alpha: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

fn infinity() -> f64 {
    f64::INFINITY
}

fn default_delta() -> f64 {
    0.05
}

/// Everything besides the problem and the class needed for a [`BoundReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BoundSettings {
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "infinity", with = "serde_inf")]
    pub q_conj: f64,
    #[serde(default = "infinity", with = "serde_inf")]
    pub p: f64,
    /// Block length; by default the smallest divisor of `n/2` that is at
    /// least `kMix`.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub certification: SphereGrid,
    /// Used when `q > 1`; defaults to Monte Carlo.
    #[serde(default)]
    pub weak_variance: Option<WeakVarianceMode>,
}

impl BoundSettings {
    pub fn new(n: usize, delta: f64) -> Self {
        Self {
            n,
            delta,
            q: 1.0,
            q_conj: f64::INFINITY,
            p: f64::INFINITY,
            k: None,
            constants: Constants::default(),
            certification: SphereGrid::default(),
            weak_variance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundTerms {
    pub multiplier: MultiplierTerms,
    pub quadratic: QuadraticTerms,
}

/// All bound-side quantities for one problem, class and sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport {
    pub n: usize,
    pub delta: f64,
    pub q: f64,
    #[serde(with = "serde_inf")]
    pub q_conj: f64,
    #[serde(with = "serde_inf")]
    pub p: f64,
    pub certificate: ClassCertificate,
    pub noise_psi: f64,
    pub weak_variance: f64,
    pub gamma2: f64,
    pub gamma_eta: f64,
    pub gamma_mixed: f64,
    pub r_star: f64,
    pub r_star_floored: bool,
    pub r_star_saturated: bool,
    pub n_quad: u64,
    pub n_mult: u64,
    pub k_mix: usize,
    pub k: usize,
    pub risk_bound: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `n ≥ c3 max(nQuad, nMult)` and `k ≥ kMix`.
    pub past_burn_in: bool,
    pub terms: BoundTerms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub bound: String,
    pub group: String,
    pub term: String,
    pub value: f64,
}

impl BoundReport {
    /// One row per term of both bounds, for plotting.
    pub fn term_rows(&self) -> Vec<TermRow> {
        let m = &self.terms.multiplier;
        let q = &self.terms.quadratic;
        let row = |bound: &str, group: &str, term: &str, value| TermRow {
            bound: bound.into(),
            group: group.into(),
            term: term.into(),
            value,
        };
        vec![
            row("multiplier", "variance", "complexity", m.variance_complexity),
            row("multiplier", "variance", "confidence", m.variance_confidence),
            row("multiplier", "higher-order", "complexity", m.higher_complexity),
            row("multiplier", "higher-order", "confidence", m.higher_confidence),
            row("quadratic", "leading", "radius", q.leading),
            row("quadratic", "deficit", "first", q.first),
            row("quadratic", "deficit", "second", q.second),
        ]
    }
}

/// Smallest divisor of `n/2` that is at least `k_min`.
pub fn block_length_for(n: usize, k_min: usize) -> Result<usize> {
    if !n.is_multiple_of(2) {
        return Err(Error::Divisibility { k: 2, what: "n", value: n });
    }
    let half = n / 2;
    (k_min.max(1)..=half)
        .find(|k| half.is_multiple_of(*k))
        .ok_or_else(|| invalid("n", format!("no divisor of n/2 = {half} is at least kMix = {k_min}")))
}

/// Unit directions `(f − f⋆) / ‖f − f⋆‖` of a finite class, with their distances.
fn finite_directions(class: &HypothesisClass, pop: &PopulationQuantities) -> Vec<(f64, Vec<f64>)> {
    let HypothesisClass::Finite { hypotheses } = class else {
        return Vec::new();
    };
    let pi = &pop.stationary;
    hypotheses
        .iter()
        .filter_map(|h| {
            let diff: Vec<f64> = h.iter().zip(&pop.f_star_table).map(|(a, b)| a - b).collect();
            let norm = l2_dist_sq(pi, h, &pop.f_star_table).sqrt();
            (norm > 1e-12).then(|| (norm, diff.iter().map(|v| v / norm).collect()))
        })
        .collect()
}

pub fn compute_bound_report(problem: &RegressionProblem, class: &HypothesisClass, settings: &BoundSettings) -> Result<BoundReport> {
    class.validate(problem)?;
    check_conjugates(settings.q, settings.q_conj)?;
    super::psi::check_p(settings.p)?;
    let (n, delta) = (settings.n, settings.delta);
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0, 1)")));
    }
    let consts = settings.constants;
    let pop = population_quantities(problem, class)?;
    let pi = problem.chain().stationary().to_vec();
    let directions = finite_directions(class, &pop);

    let certificate = match class {
        HypothesisClass::Linear { .. } => certify_linear(problem, settings.p, &settings.certification)?,
        HypothesisClass::Finite { .. } if directions.is_empty() => ClassCertificate {
            l: 1.0,
            eta: 1.0,
            p: settings.p,
            method: super::certify::CertifyMethod::FiniteExact,
            max_ratio: 0.0,
            witnesses: 0,
            upper_estimate: None,
            grid_radius: None,
        },
        HypothesisClass::Finite { .. } => {
            let tables: Vec<Vec<f64>> = directions.iter().map(|d| d.1.clone()).collect();
            certify_functions(&tables, &pi, settings.p)?
        }
    };
    let eta = certificate.eta;
    let noise_psi = psi_p_norm(&pop.noise_law(problem)?, settings.p, DEFAULT_M_MAX)?.value;

    let weak_variance = match class {
        HypothesisClass::Linear { dim } if settings.q == 1.0 => weak_variance_linear(problem, &pop, n)?,
        _ if directions.is_empty() => 0.0,
        _ => {
            let resolution: Vec<Vec<f64>> = match class {
                HypothesisClass::Linear { dim } => {
                    let mut r = super::certify::sphere_grid(*dim, 64, settings.certification.seed);
                    r.extend((0..*dim).map(|j| (0..*dim).map(|i| if i == j { 1.0 } else { 0.0 }).collect()));
                    r.into_iter().map(|v| problem.linear_table(&v)).collect()
                }
                HypothesisClass::Finite { .. } => directions.iter().map(|d| d.1.clone()).collect(),
            };
            let mode = if settings.q == 1.0 {
                WeakVarianceMode::Analytic
            } else {
                settings.weak_variance.unwrap_or(WeakVarianceMode::MonteCarlo {
                    replicates: 2000,
                    seed: settings.certification.seed,
                })
            };
            weak_variance_2q(problem, &pop, &resolution, settings.q, n, mode)?.value
        }
    };

    let profile_at = |r: f64| -> CoveringProfile {
        match class {
            HypothesisClass::Linear { dim } => CoveringProfile::Parametric { dim: *dim as f64 },
            HypothesisClass::Finite { .. } => CoveringProfile::Directions {
                directions: directions.iter().filter(|d| d.0 >= r).map(|d| d.1.clone()).collect(),
                pi: pi.clone(),
            },
        }
    };
    let gamma = |alpha: f64, r: f64| gamma_alpha_upper(&profile_at(r), r, alpha, consts.c_alpha);
    gamma(2.0, 1.0)?;
    let CriticalRadius { r: r_star, floored, saturated } =
        critical_radius(|_| weak_variance, |r| gamma(2.0, r).unwrap_or(f64::NAN), n, consts.c1)?;
    let local = LocalComplexity {
        weak_variance,
        gamma2: gamma(2.0, r_star)?,
        gamma_eta: gamma(eta, r_star)?,
        gamma_mixed: gamma((2.0 + 6.0 * eta) / 4.0, r_star)?,
    };

    let kmix = k_mix(BetaSequence::new(problem.chain()), n, delta)?;
    let k = match settings.k {
        Some(k) => {
            if k == 0 || n % 2 != 0 || (n / 2) % k != 0 {
                return Err(Error::Divisibility { k, what: "n/2", value: n / 2 });
            }
            k
        }
        None => block_length_for(n, kmix)?,
    };
    let params = BoundParams {
        l: certificate.l,
        eta,
        p: settings.p,
        q_conj: settings.q_conj,
        k,
        delta,
        noise_psi,
    };
    let nq = n_quad(&params, local.gamma_eta, local.gamma_mixed, r_star)?;
    let nm = n_mult(&params, local.gamma_eta, r_star)?;
    let multiplier = multiplier_bound_rhs(&params, &local, r_star, n, consts.c1, consts.c2)?;
    let quadratic = quadratic_bound_rhs(&params, &local, r_star, n, BURN_IN_EPS, consts.c)?;
    let past_burn_in = n as f64 >= consts.c3 * nq.max(nm) as f64 && k >= kmix;

    Ok(BoundReport {
        n,
        delta,
        q: settings.q,
        q_conj: settings.q_conj,
        p: settings.p,
        certificate,
        noise_psi,
        weak_variance,
        gamma2: local.gamma2,
        gamma_eta: local.gamma_eta,
        gamma_mixed: local.gamma_mixed,
        r_star,
        r_star_floored: floored,
        r_star_saturated: saturated,
        n_quad: nq,
        n_mult: nm,
        k_mix: kmix,
        k,
        risk_bound: risk_bound(r_star, weak_variance, n, delta, consts.c2),
        c1: consts.c1,
        c2: consts.c2,
        c3: consts.c3,
        past_burn_in,
        terms: BoundTerms { multiplier, quadratic },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn risk_bound_homogeneity() {
        assert!(risk_bound(0.0, 1.0, 10, 1.0 - 1e-15, 1.0) < 1e-14);
        let a = risk_bound((2.0f64 / 1000.0).sqrt(), 0.5, 1000, 0.1, 2.0);
        let b = risk_bound((2.0f64 / 2000.0).sqrt(), 0.5, 2000, 0.1, 2.0);
        assert!((a - 2.0 * b).abs() < 1e-15);
    }

    #[test]
    fn block_length_rule() {
        assert_eq!(block_length_for(1024, 1).unwrap(), 1);
        assert_eq!(block_length_for(1024, 3).unwrap(), 4);
        assert_eq!(block_length_for(24, 5).unwrap(), 6);
        assert!(block_length_for(11, 1).is_err());
    }
}
