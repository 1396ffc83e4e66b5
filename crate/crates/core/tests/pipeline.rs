use mixfree_core::bounds::{compute_bound_report, BoundSettings, SphereGrid};
use mixfree_core::config::ProblemSpec;
use mixfree_core::erm::HypothesisClass;
use mixfree_core::harness::{
    coverage_experiment, run_cell, run_sweep, summarize, CoverageConfig, CoverageOutcome, Phase, SweepConfig,
    SweepContext, SweepResult, SweepSummary,
};
use mixfree_core::law::FiniteLaw;
use mixfree_core::processgen::{sample_trajectory, NoiseKind, NoiseSpec, RegressionProblem, Trajectory};
use mixfree_core::Error;

fn md_hypercube(dim: usize, spectral: f64) -> RegressionProblem {
    let noise = NoiseSpec::new(NoiseKind::MartingaleDifference, Some(1.0), vec![FiniteLaw::rademacher(1.0)]).unwrap();
    RegressionProblem::hypercube(dim, spectral, (0..dim).map(|j| 1.0 / (j + 1) as f64).collect(), noise).unwrap()
}

fn small_grid() -> SphereGrid {
    SphereGrid { directions: 500, refinement_rounds: 1, seed: 0 }
}

fn small_sweep() -> SweepConfig {
    serde_json::from_str(
        r#"{
            "problem": {"kind": "hypercube", "dim": 3, "betaStar": [1, -1, 0.5],
                        "noise": {"kind": "martingale-difference", "laws": [{"values": [-1, 1], "probs": [0.5, 0.5]}]}},
            "nGrid": [64, 128, 256, 512],
            "mixingLevels": [0.0, 0.6],
            "replicates": 12,
            "seed": 99,
            "certification": {"directions": 400, "refinementRounds": 1, "seed": 0}
        }"#,
    )
    .unwrap()
}

#[test]
fn trajectory_csv_round_trip() {
    let traj = sample_trajectory(&md_hypercube(3, 0.5), 200, 4).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let back = Trajectory::read_csv(buf.as_slice(), 4).unwrap();
    assert_eq!(back.targets, traj.targets);
    assert_eq!(back.covariates, traj.covariates);
}

#[test]
fn parametric_critical_radius_in_the_report() {
    // homoscedastic martingale noise: V = 1, γ₂(r) = √d Γ(3/2) r
    let problem = md_hypercube(5, 0.0);
    let class = HypothesisClass::Linear { dim: 5 };
    let mut settings = BoundSettings::new(4096, 0.05);
    settings.certification = small_grid();
    let a = compute_bound_report(&problem, &class, &settings).unwrap();
    assert!((a.weak_variance - 1.0).abs() < 1e-12);
    let want = libm::tgamma(1.5) * (5.0f64 / 4096.0).sqrt();
    assert!((a.r_star / want - 1.0).abs() < 1e-9, "{} vs {want}", a.r_star);
    settings.n = 4 * 4096;
    let b = compute_bound_report(&problem, &class, &settings).unwrap();
    assert!((a.r_star / b.r_star - 2.0).abs() < 1e-9);
    let risk = a.c2 * (a.r_star.powi(2) + a.weak_variance * 20f64.ln() / 4096.0);
    assert!((a.risk_bound - risk).abs() < 1e-15);
    assert_eq!(a.k_mix, 1);
    assert_eq!(a.past_burn_in, 4096 >= a.n_quad.max(a.n_mult) && a.k >= a.k_mix);
}

#[test]
fn slower_mixing_only_moves_burn_ins() {
    let class = HypothesisClass::Linear { dim: 3 };
    let mut settings = BoundSettings::new(1 << 14, 0.05);
    settings.certification = small_grid();
    let fast = compute_bound_report(&md_hypercube(3, 0.0), &class, &settings).unwrap();
    let slow = compute_bound_report(&md_hypercube(3, 0.9), &class, &settings).unwrap();
    assert!((fast.r_star - slow.r_star).abs() < 1e-12);
    assert!(slow.k_mix >= 10 * fast.k_mix);
    assert!(slow.n_quad > fast.n_quad && slow.n_mult > fast.n_mult);
    assert_eq!((1 << 13) % slow.k, 0);
}

#[test]
fn bound_settings_are_validated() {
    let problem = md_hypercube(2, 0.3);
    let class = HypothesisClass::Linear { dim: 2 };
    let mut s = BoundSettings::new(100, 0.05);
    s.certification = small_grid();
    s.k = Some(7);
    assert!(matches!(compute_bound_report(&problem, &class, &s), Err(Error::Divisibility { .. })));
    s.k = None;
    s.q = 2.0;
    s.q_conj = 3.0;
    assert!(matches!(compute_bound_report(&problem, &class, &s), Err(Error::NotConjugate { .. })));
    assert!(compute_bound_report(&problem, &HypothesisClass::Linear { dim: 3 }, &BoundSettings::new(100, 0.05)).is_err());
}

#[test]
fn finite_class_report() {
    let spec: ProblemSpec = serde_json::from_str(
        r#"{"kind": "explicit",
            "transition": [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            "embedding": [[0], [1], [2]],
            "target": {"tabular": [0.2, -0.3, 0.6]},
            "noise": {"kind": "martingale-difference", "laws": [{"values": [-0.5, 0.5], "probs": [0.5, 0.5]}]}}"#,
    )
    .unwrap();
    let class = HypothesisClass::Finite {
        hypotheses: vec![vec![0.2, -0.3, 0.6], vec![0.0, 0.0, 0.0], vec![1.0, -1.0, 0.5], vec![0.2, 0.3, 0.6]],
    };
    let report = compute_bound_report(&spec.build().unwrap(), &class, &BoundSettings::new(2000, 0.05)).unwrap();
    assert!(report.r_star > 0.0 && report.r_star <= 1.0);
    assert!(report.certificate.l >= 1.0);
    assert!(report.k_mix >= 1);
}

#[test]
fn sweeps_are_reproducible_and_thread_independent() {
    let cfg = small_sweep();
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&cfg).unwrap();
    assert_eq!(a, b);
    let ctx = SweepContext::new(&cfg).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = single.install(|| ctx.run()).unwrap();
    assert_eq!(a, c);
    let row = &a.rows[17];
    let level = cfg.mixing_levels.iter().position(|&l| l == row.mixing_level).unwrap();
    let again = run_cell(&cfg, row.n_grid, level, row.replicate).unwrap();
    assert_eq!(again, row.excess_risk);
}

#[test]
fn sweep_outputs_round_trip() {
    let result = run_sweep(&small_sweep()).unwrap();
    assert_eq!(result.rows.len(), 4 * 2 * 12);
    let mut buf = Vec::new();
    result.write_csv(&mut buf).unwrap();
    assert_eq!(SweepResult::read_csv(buf.as_slice()).unwrap(), result.rows);
    let summary = summarize(&result);
    let json = serde_json::to_string(&summary).unwrap();
    assert_eq!(serde_json::from_str::<SweepSummary>(&json).unwrap(), summary);
    for fit in &summary.fits {
        let fit = fit.fit.as_ref().unwrap();
        assert!(fit.exponent < -0.5, "exponent {}", fit.exponent);
    }
}

#[test]
fn sweep_rejects_odd_sample_sizes() {
    let mut cfg = small_sweep();
    cfg.n_grid = vec![64, 101];
    assert!(run_sweep(&cfg).is_err());
}

#[test]
fn risk_coverage_phases_use_disjoint_replicates() {
    let cfg: CoverageConfig = serde_json::from_str(
        r#"{"kind": "risk-bound",
            "problem": {"kind": "hypercube", "dim": 2, "spectral": 0.4, "betaStar": [1, 0],
                        "noise": {"kind": "martingale-difference", "laws": [{"values": [-1, 1], "probs": [0.5, 0.5]}]}},
            "n": 256, "delta": 0.05, "calibrationReplicates": 100, "validationReplicates": 200, "seed": 3,
            "certification": {"directions": 300, "refinementRounds": 1, "seed": 0}}"#,
    )
    .unwrap();
    let out = coverage_experiment(&cfg).unwrap();
    let calibration = out.trials.iter().filter(|t| t.phase == Phase::Calibration).count();
    assert_eq!(calibration, 100);
    assert_eq!(out.report.replicates, 200);
    let exceeded = out.trials.iter().filter(|t| t.phase == Phase::Validation && t.exceeded).count();
    assert_eq!(exceeded, out.report.exceedances);
    let mut buf = Vec::new();
    out.write_csv(&mut buf).unwrap();
    assert_eq!(CoverageOutcome::read_csv(buf.as_slice()).unwrap(), out.trials);
}
