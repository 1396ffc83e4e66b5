use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use mixfree_core::bounds::{
    certify_weak_subgaussian, compute_bound_report, serde_inf, BoundSettings, CertifyMethod, SphereGrid,
};
use mixfree_core::config::ProblemSpec;
use mixfree_core::erm::HypothesisClass;
use mixfree_core::harness::{
    coverage_experiment, process_diagnostics, run_sweep, summarize, sweep_svg, CoverageConfig, DiagnosticsConfig,
    SweepConfig,
};
use mixfree_core::processgen::{kwise_independent_surrogate, sample_trajectory, RegressionProblem};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Common;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] mixfree_core::Error),
}

impl CliError {
    /// 1 for anything the config could fix, 2 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        use mixfree_core::Error as E;
        match self {
            Self::Config(_) => 1,
            Self::Core(
                E::InvalidTransition(_)
                | E::NoUniqueStationary { .. }
                | E::InvalidNoise(_)
                | E::InvalidProblem(_)
                | E::InvalidArgument { .. }
                | E::Divisibility { .. }
                | E::EmptyClass
                | E::NotConjugate { .. },
            ) => 1,
            Self::Core(_) => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn out_dir(c: &Common) -> Result<&Path> {
    fs::create_dir_all(&c.out).map_err(mixfree_core::Error::from)?;
    Ok(&c.out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path).map_err(mixfree_core::Error::from)?);
    serde_json::to_writer_pretty(f, value).map_err(mixfree_core::Error::from)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(mixfree_core::Error::from)?))
}

fn say(c: &Common, msg: impl AsRef<str>) {
    if !c.quiet {
        println!("{}", msg.as_ref());
    }
}

fn level_or_default(problem: &ProblemSpec, level: Option<f64>) -> Result<RegressionProblem> {
    Ok(match level {
        Some(l) => problem.build_at(l)?,
        None => problem.build()?,
    })
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SimulateConfig {
    problem: ProblemSpec,
    #[serde(default)]
    mixing_level: Option<f64>,
    n: usize,
    #[serde(default)]
    seed: u64,
    /// Sample independent stationary blocks of this length instead of one chain.
    #[serde(default)]
    block_length: Option<usize>,
}

pub fn simulate(c: &Common) -> Result<()> {
    let cfg: SimulateConfig = load(&c.config)?;
    let seed = c.seed.unwrap_or(cfg.seed);
    let problem = level_or_default(&cfg.problem, cfg.mixing_level)?;
    let traj = match cfg.block_length {
        Some(k) => kwise_independent_surrogate(&problem, cfg.n, k, seed)?,
        None => sample_trajectory(&problem, cfg.n, seed)?,
    };
    let path = out_dir(c)?.join("trajectory.csv");
    traj.write_csv(create(&path)?)?;
    say(c, format!("wrote {} ({} steps, {} states, seed {seed})", path.display(), traj.n, problem.states()));
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct BoundConfig {
    problem: ProblemSpec,
    #[serde(default)]
    mixing_level: Option<f64>,
    #[serde(default)]
    class: Option<HypothesisClass>,
    bound: BoundSettings,
}

pub fn bound(c: &Common) -> Result<()> {
    let mut cfg: BoundConfig = load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.bound.certification.seed = s;
    }
    let problem = level_or_default(&cfg.problem, cfg.mixing_level)?;
    let class = cfg.class.unwrap_or(HypothesisClass::Linear { dim: problem.dim() });
    let report = compute_bound_report(&problem, &class, &cfg.bound)?;
    let dir = out_dir(c)?;
    write_json(&dir.join("bound_report.json"), &report)?;
    let mut w = csv::Writer::from_writer(create(&dir.join("terms.csv"))?);
    for row in report.term_rows() {
        w.serialize(row).map_err(mixfree_core::Error::from)?;
    }
    w.flush().map_err(mixfree_core::Error::from)?;
    say(
        c,
        format!(
            "rStar {:.6e}  riskBound {:.6e}  nQuad {}  nMult {}  kMix {}  k {}  pastBurnIn {}",
            report.r_star, report.risk_bound, report.n_quad, report.n_mult, report.k_mix, report.k, report.past_burn_in
        ),
    );
    Ok(())
}

fn infinity() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CertifyConfig {
    problem: ProblemSpec,
    #[serde(default)]
    mixing_level: Option<f64>,
    #[serde(default)]
    class: Option<HypothesisClass>,
    #[serde(default = "infinity", with = "serde_inf")]
    p: f64,
    /// Defaults to the exact method for the class.
    #[serde(default)]
    method: Option<CertifyMethod>,
    #[serde(default)]
    grid: SphereGrid,
}

pub fn certify(c: &Common) -> Result<()> {
    let mut cfg: CertifyConfig = load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.grid.seed = s;
    }
    let problem = level_or_default(&cfg.problem, cfg.mixing_level)?;
    let class = cfg.class.unwrap_or(HypothesisClass::Linear { dim: problem.dim() });
    let method = cfg.method.unwrap_or(match class {
        HypothesisClass::Linear { .. } => CertifyMethod::LinearExact,
        HypothesisClass::Finite { .. } => CertifyMethod::FiniteExact,
    });
    let cert = certify_weak_subgaussian(&class, &problem, cfg.p, method, &cfg.grid)?;
    write_json(&out_dir(c)?.join("certificate.json"), &cert)?;
    say(c, format!("L {:.6}  eta {:.4}  ({:?}, {} witnesses)", cert.l, cert.eta, cert.method, cert.witnesses));
    Ok(())
}

pub fn sweep(c: &Common) -> Result<()> {
    let mut cfg: SweepConfig = load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let result = run_sweep(&cfg)?;
    let summary = summarize(&result);
    let dir = out_dir(c)?;
    result.write_csv(create(&dir.join("sweep.csv"))?)?;
    write_json(&dir.join("summary.json"), &summary)?;
    fs::write(dir.join("sweep.svg"), sweep_svg(&summary)).map_err(mixfree_core::Error::from)?;
    for f in &summary.fits {
        match &f.fit {
            Some(fit) => say(
                c,
                format!("level {}: exponent {:.4}  R² {:.4}", f.mixing_level, fit.exponent, fit.r_squared),
            ),
            None => say(c, format!("level {}: too few positive medians to fit", f.mixing_level)),
        }
    }
    if let Some(m) = &summary.mixing_free {
        say(c, format!("leading-constant ratio {:.3}  block-length ratio {:.1}", m.constant_ratio, m.naive_ratio));
    } else if let Some(e) = &summary.mixing_free_error {
        say(c, format!("no mixing comparison: {e}"));
    }
    Ok(())
}

pub fn coverage(c: &Common) -> Result<()> {
    let mut cfg: CoverageConfig = load(&c.config)?;
    if let Some(s) = c.seed {
        match &mut cfg {
            CoverageConfig::BlockedBernstein { seed, .. } | CoverageConfig::RiskBound { seed, .. } => *seed = s,
        }
    }
    let outcome = coverage_experiment(&cfg)?;
    let dir = out_dir(c)?;
    outcome.write_csv(create(&dir.join("coverage.csv"))?)?;
    write_json(&dir.join("coverage.json"), &outcome.report)?;
    let r = &outcome.report;
    say(
        c,
        format!(
            "{}: exceedance {:.4} over {} replicates (allowed {:.4}){}",
            r.kind,
            r.frequency,
            r.replicates,
            r.threshold,
            r.calibrated_c2.map(|c2| format!(", calibrated c2 {c2:.4}")).unwrap_or_default()
        ),
    );
    Ok(())
}

pub fn diagnose(c: &Common) -> Result<()> {
    let mut cfg: DiagnosticsConfig = load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let d = process_diagnostics(&cfg)?;
    write_json(&out_dir(c)?.join("diagnostics.json"), &d)?;
    say(
        c,
        format!(
            "Q_n > 0 on {:.4} of {} pairs; multiplier sup above rhs in {:.4} of replicates",
            d.quadratic_positive_fraction, d.pairs, d.multiplier_exceed_fraction
        ),
    );
    Ok(())
}
