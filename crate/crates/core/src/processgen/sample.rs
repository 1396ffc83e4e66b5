use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::problem::RegressionProblem;
use crate::error::{invalid, Error, Result};
use crate::law::CumulativeSampler;
use crate::seed::rng_from_seed;

/// A sampled path `(X, Y)_{1:n}` together with the chain states behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub dim: usize,
    pub states: Vec<usize>,
    /// Row-major `n × dim`.
    pub covariates: Vec<f64>,
    pub targets: Vec<f64>,
    pub seed: u64,
}

impl Trajectory {
    pub fn covariate(&self, t: usize) -> &[f64] {
        &self.covariates[t * self.dim..(t + 1) * self.dim]
    }

    /// Build from explicit rows; states are left as `0..n` placeholders only
    /// when the caller has none (the state index is then meaningless).
    pub fn from_rows(states: Vec<usize>, rows: &[Vec<f64>], targets: Vec<f64>, seed: u64) -> Result<Self> {
        let n = targets.len();
        if rows.len() != n || states.len() != n {
            return Err(invalid("rows", "states, covariates and targets differ in length"));
        }
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("rows", "covariate rows differ in length"));
        }
        Ok(Self {
            n,
            dim,
            states,
            covariates: rows.iter().flatten().copied().collect(),
            targets,
            seed,
        })
    }

    /// CSV with header `t,state,x_1..x_d,y`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string(), "state".to_string()];
        header.extend((1..=self.dim).map(|j| format!("x_{j}")));
        header.push("y".into());
        w.write_record(&header)?;
        for t in 0..self.n {
            let mut rec = vec![(t + 1).to_string(), self.states[t].to_string()];
            rec.extend(self.covariate(t).iter().map(|v| format!("{v:?}")));
            rec.push(format!("{:?}", self.targets[t]));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, seed: u64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols = header.len();
        if cols < 4 || &header[0] != "t" || &header[1] != "state" || &header[cols - 1] != "y" {
            return Err(invalid("csv", "expected header t,state,x_1..x_d,y"));
        }
        let dim = cols - 3;
        let mut states = Vec::new();
        let mut covariates = Vec::new();
        let mut targets = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| invalid("csv", format!("bad number {s:?}: {e}")))
            };
            states.push(
                rec[1]
                    .parse::<usize>()
                    .map_err(|e| invalid("csv", format!("bad state {:?}: {e}", &rec[1])))?,
            );
            for j in 0..dim {
                covariates.push(parse(&rec[2 + j])?);
            }
            targets.push(parse(&rec[cols - 1])?);
        }
        Ok(Self {
            n: targets.len(),
            dim,
            states,
            covariates,
            targets,
            seed,
        })
    }
}

/// Precomputed inverse-CDF tables for simulating a [`RegressionProblem`].
#[derive(Debug, Clone)]
pub struct ProblemSampler {
    initial: CumulativeSampler,
    rows: Vec<CumulativeSampler>,
    noise: Vec<(CumulativeSampler, Vec<f64>)>,
    mean_target: Vec<f64>,
}

impl ProblemSampler {
    pub fn new(problem: &RegressionProblem) -> Self {
        let chain = problem.chain();
        let noise = (0..problem.states())
            .map(|x| {
                let law = problem.noise().law(x);
                (law.sampler(), law.values().to_vec())
            })
            .collect();
        Self {
            initial: CumulativeSampler::new(chain.stationary()),
            rows: chain.transition().iter().map(|r| CumulativeSampler::new(r)).collect(),
            noise,
            mean_target: problem.mean_target(),
        }
    }

    #[inline]
    fn target<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> f64 {
        let (sampler, values) = &self.noise[state];
        let xi = if values.len() == 1 { values[0] } else { values[sampler.sample(rng)] };
        self.mean_target[state] + xi
    }

    /// Run `n` steps of the stationary chain, calling `visit(state, y)` each step.
    pub fn run<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, mut visit: impl FnMut(usize, f64)) {
        if n == 0 {
            return;
        }
        let mut state = self.initial.sample(rng);
        visit(state, self.target(state, rng));
        for _ in 1..n {
            state = self.rows[state].sample(rng);
            visit(state, self.target(state, rng));
        }
    }

    /// `n / k` independent stationary blocks of length `k`, concatenated.
    pub fn run_blocks<R: Rng + ?Sized>(
        &self,
        n: usize,
        k: usize,
        rng: &mut R,
        mut visit: impl FnMut(usize, f64),
    ) {
        for _ in 0..n / k {
            self.run(k, rng, &mut visit);
        }
    }
}

fn collect(problem: &RegressionProblem, n: usize, seed: u64, drive: impl FnOnce(&mut dyn FnMut(usize, f64))) -> Trajectory {
    let mut states = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    drive(&mut |s, y| {
        states.push(s);
        targets.push(y);
    });
    let emb = problem.embedding();
    let covariates = states.iter().flat_map(|&s| emb[s].iter().copied()).collect();
    Trajectory {
        n,
        dim: problem.dim(),
        states,
        covariates,
        targets,
        seed,
    }
}

/// Stationary trajectory of length `n`; a pure function of `(problem, n, seed)`.
pub fn sample_trajectory(problem: &RegressionProblem, n: usize, seed: u64) -> Result<Trajectory> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let sampler = ProblemSampler::new(problem);
    let mut rng = rng_from_seed(seed);
    Ok(collect(problem, n, seed, |visit| sampler.run(n, &mut rng, visit)))
}

/// Concatenation of `n / k` independent stationary length-`k` blocks: a
/// `k`-wise independent sequence whose blocks share the chain's joint law.
pub fn kwise_independent_surrogate(
    problem: &RegressionProblem,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<Trajectory> {
    if k == 0 || n == 0 || !n.is_multiple_of(k) {
        return Err(Error::Divisibility { k, what: "n", value: n });
    }
    let sampler = ProblemSampler::new(problem);
    let mut rng = rng_from_seed(seed);
    Ok(collect(problem, n, seed, |visit| sampler.run_blocks(n, k, &mut rng, visit)))
}
