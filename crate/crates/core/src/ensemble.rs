//! Monte Carlo ensembles and the statistical verification of the front laws.
//!
//! Samples are independent jobs over immutable configuration: every sample
//! derives its noise seed as mix(master_seed, sample_id), runs the full
//! pipeline, and results are merged by sample index, so the reported
//! statistics cannot depend on the parallelism degree.
//!
//! Front displacement probes are taken at rescaled times τ = ε^{2/3} t: the
//! Brownian regime of the rescaled noise integral requires the front to cross
//! many decorrelation lengths of w, i.e. solver times t = τ ε^{−2/3}.

use crate::fields::{AdvectionExpr, AdvectionSpec, Grid2D, ScalarField, SimParams};
use crate::front::{extract_front_tracked, FrontCurve};
use crate::limit::{solve_limit, LimitConfig, LimitError};
use crate::metric::{
    default_y_max, extract_corrector, metric_grid, solve_rho, MetricError,
};
use crate::noise::{
    make_driver_path, mix_seed, sample_brownian, sample_noise_with_resolution, NoiseError,
    NoiseSpec, StepLaw,
};
use crate::solver::{solve_ivp, Scheme, SolverConfig, SolverError};
use crate::stats::{
    ks_one_sample, ks_two_sample, mean, median, normal_cdf, pearson, percentile, variance,
    ProbeStats, StatsReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),
    #[error("all {0} samples failed")]
    AllSamplesFailed(usize),
    #[error("exclusion rate {rate:.3} exceeds 0.05: ensemble marked invalid")]
    TooManyExclusions { rate: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error(transparent)]
    Field(#[from] crate::fields::FieldError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// One recorded probe value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRow {
    pub sample_id: usize,
    pub seed: u64,
    pub probe: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SampleTable {
    pub rows: Vec<SampleRow>,
    pub failures: Vec<(usize, String)>,
    pub n_samples: usize,
}

impl SampleTable {
    pub fn exclusion_rate(&self) -> f64 {
        self.failures.len() as f64 / self.n_samples.max(1) as f64
    }

    pub fn values(&self, probe: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.probe == probe)
            .map(|r| r.value)
            .collect()
    }

    fn validate(self) -> Result<Self, EnsembleError> {
        if self.failures.len() == self.n_samples {
            return Err(EnsembleError::AllSamplesFailed(self.n_samples));
        }
        let rate = self.exclusion_rate();
        if rate > 0.05 {
            return Err(EnsembleError::TooManyExclusions { rate });
        }
        Ok(self)
    }
}

/// Pure-shear front-fluctuation ensemble: u∥ ≡ 1, u⊥ ≡ 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontEnsembleOpts {
    pub n_samples: usize,
    pub master_seed: u64,
    pub eps: f64,
    pub r: f64,
    /// Probe times in corrector units; solver time is τ ε^{−2/3}.
    pub probe_taus: Vec<f64>,
    pub hy: f64,
    pub step_law: StepLaw,
    /// Test hook: reuse the master seed for every sample.
    pub identical_seeds: bool,
}

impl FrontEnsembleOpts {
    pub fn new(eps: f64, r: f64, n_samples: usize, master_seed: u64) -> Self {
        Self {
            n_samples,
            master_seed,
            eps,
            r,
            probe_taus: vec![0.5, 1.0],
            hy: 0.01,
            step_law: StepLaw::UnitGaussian,
            identical_seeds: false,
        }
    }

    pub fn solver_time(&self, tau: f64) -> f64 {
        if self.eps > 0.0 {
            tau * self.eps.powf(-2.0 / 3.0)
        } else {
            tau
        }
    }
}

fn front_sample(
    opts: &FrontEnsembleOpts,
    seed: u64,
) -> Result<Vec<(String, f64)>, EnsembleError> {
    let eps = opts.eps;
    let times: Vec<f64> = opts.probe_taus.iter().map(|&tau| opts.solver_time(tau)).collect();
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let y_top = t_max + 2.0;
    let spec = NoiseSpec::new(seed, opts.step_law);
    let noise = sample_noise_with_resolution(&spec, (-3.5, y_top + 2.0), opts.hy)?;
    let grid = Grid2D::line((-1.5, y_top), ((y_top + 1.5) / opts.hy).ceil() as usize + 1)?;
    let params = SimParams::new(eps, f64::INFINITY, f64::INFINITY, opts.r);
    let scheme = if opts.r == 1.0 { Scheme::GodunovR1 } else { Scheme::LaxFriedrichs };
    let config = SolverConfig::new(scheme, t_max).with_outputs(times.clone());
    let initial = ScalarField::from_fn(grid, 0.0, |_, y| y);
    let adv = AdvectionSpec::pure_shear(1.0);
    let out = solve_ivp(&initial, &params, &adv, Some(&noise), &config)?;
    let mut rows = Vec::new();
    let mut prev: Option<FrontCurve<f64>> = None;
    for (snap, &tau) in out.snapshots.iter().zip(&opts.probe_taus) {
        let front = extract_front_tracked(snap, prev.as_ref());
        if front.multivalued_flag[0] {
            return Err(EnsembleError::InvalidConfig(format!(
                "flagged front at tau = {tau}"
            )));
        }
        rows.push((format!("D(tau={tau})"), front.y_front[0] - snap.time_stamp));
        prev = Some(front);
    }
    Ok(rows)
}

/// Run the front ensemble; failures are recorded per sample, not fatal.
pub fn front_fluctuation_ensemble(
    opts: &FrontEnsembleOpts,
) -> Result<SampleTable, EnsembleError> {
    if opts.n_samples < 2 {
        return Err(EnsembleError::InvalidConfig("n_samples must be >= 2".into()));
    }
    let results: Vec<(usize, u64, Result<Vec<(String, f64)>, String>)> = (0..opts.n_samples)
        .into_par_iter()
        .map(|id| {
            let seed = if opts.identical_seeds {
                opts.master_seed
            } else {
                mix_seed(opts.master_seed, id as u64)
            };
            let out = front_sample(opts, seed).map_err(|e| e.to_string());
            (id, seed, out)
        })
        .collect();
    let mut table = SampleTable { n_samples: opts.n_samples, ..Default::default() };
    for (id, seed, res) in results {
        match res {
            Ok(rows) => {
                for (probe, value) in rows {
                    table.rows.push(SampleRow { sample_id: id, seed, probe, value });
                }
            }
            Err(e) => table.failures.push((id, e)),
        }
    }
    table.validate()
}

/// The four-part Brownian-fluctuation check on front displacement samples.
/// `tau` is the rescaled probe time; samples must also carry `tau/2`.
pub fn brownian_front_test(
    table: &SampleTable,
    eps: f64,
    tau: f64,
) -> Result<StatsReport, EnsembleError> {
    let d_full = table.values(&format!("D(tau={tau})"));
    let half_tau = tau / 2.0;
    let d_half = table.values(&format!("D(tau={half_tau})"));
    brownian_front_test_on(&d_half, &d_full, eps, tau)
}

pub fn brownian_front_test_on(
    d_half: &[f64],
    d_full: &[f64],
    eps: f64,
    tau: f64,
) -> Result<StatsReport, EnsembleError> {
    let n = d_full.len();
    if n < 50 {
        return Err(EnsembleError::TooFewSamples { needed: 50, got: n });
    }
    let t_solver = tau * eps.powf(-2.0 / 3.0);
    let mut report = StatsReport::new(n);
    report.probes.push(ProbeStats::from_samples(format!("D(tau={tau})"), d_full));

    // (a) mean ≈ 0, allowing the known O(ε² t) quadratic drift
    let m = mean(d_full);
    let se = (variance(d_full) / n as f64).sqrt();
    let drift_allowance = eps * eps * t_solver;
    report.require(
        m.abs() <= 4.0 * se + drift_allowance,
        format!("mean {m:.4} exceeds 4·SE + eps²t = {:.4}", 4.0 * se + drift_allowance),
    );

    // (b) variance ratio against the Brownian prediction ε² t
    let ratio = variance(d_full) / (eps * eps * t_solver);
    report.variance_ratio = Some(ratio);
    report.require(
        (0.7..=1.3).contains(&ratio),
        format!("variance ratio {ratio:.3} outside [0.7, 1.3]"),
    );

    // (c) Gaussianity of D/sqrt(ε² t)
    let scaled: Vec<f64> = d_full.iter().map(|d| d / (eps * eps * t_solver).sqrt()).collect();
    let ks = ks_one_sample(&scaled, normal_cdf);
    report.ks.push(ks);
    report.require(ks.p_value >= 0.01, format!("KS normality p = {:.4}", ks.p_value));

    // (d) increment decorrelation between [0, t/2] and [t/2, t]
    if d_half.len() == n {
        let increments: Vec<f64> =
            d_full.iter().zip(d_half).map(|(f, h)| f - h).collect();
        let corr = pearson(d_half, &increments);
        report.increment_correlation = Some(corr);
        let cap = 4.0 / (n as f64).sqrt();
        report.require(
            corr.abs() <= cap,
            format!("increment correlation {corr:.3} exceeds {cap:.3}"),
        );
    } else {
        report.require(false, "missing tau/2 samples for the increment check");
    }
    Ok(report)
}

/// Fraction of bootstrap resamples in which |ratio(eps) − 1| improves
/// monotonically as eps decreases (eps_list sorted descending). The ensembles
/// are matched by seed, so one index set is resampled and applied to every
/// eps column (a paired bootstrap).
pub fn variance_improvement_bootstrap(
    samples: &[Vec<f64>],
    eps_list: &[f64],
    tau: f64,
    n_bootstrap: usize,
    seed: u64,
) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = samples.iter().map(|v| v.len()).min().unwrap_or(0);
    let mut hits = 0usize;
    for _ in 0..n_bootstrap {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut devs = Vec::with_capacity(eps_list.len());
        for (vals, &eps) in samples.iter().zip(eps_list) {
            let resample: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
            let t_solver = tau * eps.powf(-2.0 / 3.0);
            let ratio = variance(&resample) / (eps * eps * t_solver);
            devs.push((ratio - 1.0).abs());
        }
        if devs.windows(2).all(|w| w[1] <= w[0]) {
            hits += 1;
        }
    }
    hits as f64 / n_bootstrap as f64
}

// ---------------------------------------------------------------------------
// corrector coupling

/// One coupled sample: the finite-ε corrector against the limit solution
/// driven by the same realized W^ε path.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CouplingSample {
    /// sup_{ξ ≤ 1} |χ^ε(0, ξ) − χ_lim(0, ξ)| under the shared driver.
    pub sup_gap: f64,
    /// χ^ε at the probe (x, ξ) = (0, ξ_probe).
    pub chi_at_probe: f64,
    /// gap at ξ = 0 (both sides vanish there up to interpolation error).
    pub gap_at_zero: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingOpts {
    pub n_samples: usize,
    pub master_seed: u64,
    pub eps: f64,
    pub xi_probe: f64,
    pub step_law: StepLaw,
}

impl CouplingOpts {
    pub fn new(eps: f64, n_samples: usize, master_seed: u64) -> Self {
        Self { n_samples, master_seed, eps, xi_probe: 1.0, step_law: StepLaw::UnitGaussian }
    }
}

fn coupling_sample(opts: &CouplingOpts, seed: u64) -> Result<CouplingSample, EnsembleError> {
    let eps = opts.eps;
    let hy = (eps / 12.0).min(0.01);
    let y_max = default_y_max(eps);
    let spec = NoiseSpec::new(seed, opts.step_law);
    let noise = sample_noise_with_resolution(&spec, (-2.0, y_max + 2.0), hy)?;
    let params = SimParams::g_equation(eps);
    let adv = AdvectionSpec::pure_shear(1.0);
    let grid = metric_grid((0.0, std::f64::consts::TAU), 1, y_max, hy, false)?;
    let sol = solve_rho(&params, &adv, Some(&noise), grid, 1e-6)?;
    let n_xi = 201usize;
    let xi_max = opts.xi_probe.max(1.0);
    let xi_nodes: Vec<f64> = (0..n_xi)
        .map(|i| xi_max * i as f64 / (n_xi - 1) as f64)
        .collect();
    let corr = extract_corrector(&sol.rho, eps, &noise, |_| 1.0, xi_nodes.clone())?;
    // limit solve under the coupled driver (pure shift for u∥ ≡ 1, but run
    // the actual solver rather than its closed form)
    let driver = make_driver_path(&noise, eps, xi_max, 2001)?;
    let mut cfg = LimitConfig::new(AdvectionExpr::constant(1.0), 1, xi_max, n_xi);
    cfg.cfl = 0.4;
    let lim = solve_limit(&cfg, &driver)?;
    let mut sup_gap = 0.0f64;
    for k in 0..n_xi {
        if xi_nodes[k] > 1.0 + 1e-12 {
            break;
        }
        let gap = (corr.chi_at(0, k) - lim.chi_at(0, k)).abs();
        sup_gap = sup_gap.max(gap);
    }
    let probe_idx = ((opts.xi_probe / xi_max) * (n_xi - 1) as f64).round() as usize;
    Ok(CouplingSample {
        sup_gap,
        chi_at_probe: corr.chi_at(0, probe_idx),
        gap_at_zero: (corr.chi_at(0, 0) - lim.chi_at(0, 0)).abs(),
    })
}

/// Coupled ensemble at one ε; common random numbers across an ε-sweep come
/// from reusing the same master seed.
pub fn coupling_ensemble(opts: &CouplingOpts) -> Result<Vec<CouplingSample>, EnsembleError> {
    let results: Vec<Result<CouplingSample, String>> = (0..opts.n_samples)
        .into_par_iter()
        .map(|id| {
            coupling_sample(opts, mix_seed(opts.master_seed, id as u64))
                .map_err(|e| e.to_string())
        })
        .collect();
    let ok: Vec<CouplingSample> = results.iter().filter_map(|r| r.as_ref().ok()).copied().collect();
    let failed = results.len() - ok.len();
    if ok.is_empty() {
        return Err(EnsembleError::AllSamplesFailed(opts.n_samples));
    }
    if failed as f64 / opts.n_samples as f64 > 0.05 {
        return Err(EnsembleError::TooManyExclusions {
            rate: failed as f64 / opts.n_samples as f64,
        });
    }
    Ok(ok)
}

/// χ at the probe under independently sampled Brownian drivers (the limit law).
pub fn limit_law_ensemble(
    u_par: &AdvectionExpr<f64>,
    xi_probe: f64,
    n_samples: usize,
    master_seed: u64,
) -> Result<Vec<f64>, EnsembleError> {
    let n_xi = 101usize;
    let results: Vec<Result<f64, String>> = (0..n_samples)
        .into_par_iter()
        .map(|id| {
            let driver =
                sample_brownian::<f64>(mix_seed(master_seed, id as u64), xi_probe, 1001);
            let cfg = LimitConfig::new(u_par.clone(), 1, xi_probe, n_xi);
            solve_limit(&cfg, &driver)
                .map(|c| c.chi_at(0, n_xi - 1))
                .map_err(|e| e.to_string())
        })
        .collect();
    let ok: Vec<f64> = results.into_iter().filter_map(|r| r.ok()).collect();
    if ok.is_empty() {
        return Err(EnsembleError::AllSamplesFailed(n_samples));
    }
    Ok(ok)
}

/// Pathwise-coupling and law-wise convergence across an ε-sweep
/// (eps_list sorted descending).
pub fn corrector_convergence_test(
    per_eps: &[Vec<CouplingSample>],
    eps_list: &[f64],
    limit_law: &[f64],
) -> Result<StatsReport, EnsembleError> {
    if per_eps.len() != eps_list.len() || per_eps.len() < 2 {
        return Err(EnsembleError::InvalidConfig("need samples for every eps".into()));
    }
    let n_min = per_eps.iter().map(|v| v.len()).min().unwrap();
    let mut report = StatsReport::new(n_min);
    let mut medians = Vec::new();
    let mut ks_dists = Vec::new();
    for (samples, &eps) in per_eps.iter().zip(eps_list) {
        let gaps: Vec<f64> = samples.iter().map(|s| s.sup_gap).collect();
        let med = median(&gaps);
        let p90 = percentile(&gaps, 0.9);
        medians.push(med);
        report.probes.push(ProbeStats::from_samples(format!("sup_gap(eps={eps})"), &gaps));
        report.note(format!("eps={eps}: median gap {med:.4}, p90 {p90:.4}"));
        let chi: Vec<f64> = samples.iter().map(|s| s.chi_at_probe).collect();
        let ks = ks_two_sample(&chi, limit_law);
        ks_dists.push(ks.statistic);
        report.ks.push(ks);
    }
    for w in medians.windows(2) {
        report.require(
            w[1] < w[0],
            format!("median coupling gap did not decrease: {:.4} -> {:.4}", w[0], w[1]),
        );
    }
    for w in ks_dists.windows(2) {
        report.require(
            w[1] <= w[0] + 1e-12,
            format!("KS distance to the limit law increased: {:.4} -> {:.4}", w[0], w[1]),
        );
    }
    // boundary probe: both correctors vanish at ξ = 0
    let worst_zero = per_eps
        .iter()
        .flat_map(|v| v.iter().map(|s| s.gap_at_zero))
        .fold(0.0f64, f64::max);
    report.require(worst_zero <= 1e-6, format!("gap at xi = 0 is {worst_zero:.2e}"));
    Ok(report)
}

// ---------------------------------------------------------------------------
// model-gap ensemble (level-set vs eikonal fronts under matched seeds)

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelGapSample {
    /// sup over output times ≤ t_max of the front gap.
    pub sup_gap: f64,
    pub d_level_set: f64,
    pub d_eikonal: f64,
}

/// Solve both models from the same noise realization and compare fronts.
pub fn model_gap_ensemble(
    eps: f64,
    n_samples: usize,
    master_seed: u64,
    t_max: f64,
    hy: f64,
) -> Result<Vec<ModelGapSample>, EnsembleError> {
    let times: Vec<f64> = (1..=5).map(|i| t_max * i as f64 / 5.0).collect();
    let results: Vec<Result<ModelGapSample, String>> = (0..n_samples)
        .into_par_iter()
        .map(|id| {
            let seed = mix_seed(master_seed, id as u64);
            let run = || -> Result<ModelGapSample, EnsembleError> {
                let spec = NoiseSpec::new(seed, StepLaw::UnitGaussian);
                let noise =
                    sample_noise_with_resolution(&spec, (-3.5, t_max + 3.5), hy)?;
                let grid = Grid2D::line(
                    (-1.0, t_max + 1.5),
                    ((t_max + 2.5) / hy).ceil() as usize + 1,
                )?;
                let initial = ScalarField::from_fn(grid, 0.0, |_, y| y);
                let adv = AdvectionSpec::pure_shear(1.0);
                let mut fronts = Vec::new();
                for &r in &[1.0, 2.0] {
                    let params = SimParams::new(eps, f64::INFINITY, f64::INFINITY, r);
                    let scheme =
                        if r == 1.0 { Scheme::GodunovR1 } else { Scheme::LaxFriedrichs };
                    let config =
                        SolverConfig::new(scheme, t_max).with_outputs(times.clone());
                    let out = solve_ivp(&initial, &params, &adv, Some(&noise), &config)?;
                    let mut curve = Vec::new();
                    for snap in &out.snapshots {
                        let front = extract_front_tracked(snap, None);
                        if front.multivalued_flag[0] {
                            return Err(EnsembleError::InvalidConfig(
                                "flagged front".into(),
                            ));
                        }
                        curve.push(front.y_front[0]);
                    }
                    fronts.push(curve);
                }
                let sup_gap = fronts[0]
                    .iter()
                    .zip(&fronts[1])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                Ok(ModelGapSample {
                    sup_gap,
                    d_level_set: fronts[0].last().unwrap() - t_max,
                    d_eikonal: fronts[1].last().unwrap() - t_max,
                })
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let ok: Vec<ModelGapSample> = results.iter().filter_map(|r| r.as_ref().ok()).copied().collect();
    if ok.is_empty() {
        return Err(EnsembleError::AllSamplesFailed(n_samples));
    }
    Ok(ok)
}

// ---------------------------------------------------------------------------
// synthetic-null soundness harness

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullCheckReport {
    pub per_test: Vec<(String, usize, usize)>,
    pub pass: bool,
}

/// Run every statistical test on a synthetic model of its own null hypothesis
/// and count passes; the harness is sound when each rate is >= 95%.
pub fn statistical_null_selfcheck(runs: usize, master_seed: u64) -> NullCheckReport {
    use rand::{Rng, SeedableRng};
    let eps = 0.1f64;
    let tau = 1.0f64;
    let t_solver = tau * eps.powf(-2.0 / 3.0);
    let n = 200usize;
    let mut counts = vec![0usize; 5];
    for run in 0..runs {
        let mut rng =
            rand_chacha::ChaCha8Rng::seed_from_u64(mix_seed(master_seed, run as u64));
        // (1) Brownian front null: D built from exact Brownian increments
        let mut d_half = Vec::with_capacity(n);
        let mut d_full = Vec::with_capacity(n);
        for _ in 0..n {
            let z1: f64 = rng.sample(rand_distr::StandardNormal);
            let z2: f64 = rng.sample(rand_distr::StandardNormal);
            let h = eps * (t_solver / 2.0).sqrt();
            d_half.push(h * z1);
            d_full.push(h * z1 + h * z2);
        }
        if brownian_front_test_on(&d_half, &d_full, eps, tau)
            .map(|r| r.pass)
            .unwrap_or(false)
        {
            counts[0] += 1;
        }
        // (2) two-sample KS on equal laws
        let xs: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        if ks_two_sample(&xs, &ys).p_value >= 0.01 {
            counts[1] += 1;
        }
        // (3) scaling fit on ε^{4/3}(1 + 0.1 noise)
        let eps_list = [0.2f64, 0.1, 0.05];
        let errs: Vec<Vec<f64>> = eps_list
            .iter()
            .map(|e| {
                (0..30)
                    .map(|_| e.powf(4.0 / 3.0) * (1.0 + 0.1 * rng.random::<f64>()))
                    .collect()
            })
            .collect();
        if crate::stats::scaling_fit(&errs, &eps_list, 100, rng.random())
            .map(|f| f.exponent > 1.2 && f.exponent < 1.5)
            .unwrap_or(false)
        {
            counts[2] += 1;
        }
        // (4) coupling convergence null: gaps shrink like ε^{2/3}, the probe
        // law approaches N(0,1) with an ε^{2/3} mean shift and variance
        // deficit, common noise across eps (the production sample sizes
        // n = 400, m = 20000 are what make the KS ordering reliable)
        let n_chi = 400usize;
        let base: Vec<(f64, f64)> = (0..n_chi)
            .map(|_| {
                (
                    rng.sample::<f64, _>(rand_distr::StandardNormal),
                    rng.random::<f64>(),
                )
            })
            .collect();
        let per_eps: Vec<Vec<CouplingSample>> = eps_list
            .iter()
            .map(|e| {
                let b = e.powf(2.0 / 3.0);
                let sd = (1.0 - 0.54 * b).sqrt();
                base.iter()
                    .map(|&(z, u)| CouplingSample {
                        sup_gap: b * (0.4 + 0.3 * u),
                        chi_at_probe: sd * z + b * 0.55,
                        gap_at_zero: 0.0,
                    })
                    .collect()
            })
            .collect();
        let limit: Vec<f64> = (0..20_000)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        if corrector_convergence_test(&per_eps, &eps_list, &limit)
            .map(|r| r.pass)
            .unwrap_or(false)
        {
            counts[3] += 1;
        }
        // (5) bootstrap variance-improvement null: matched-seed displacement
        // samples (one common Gaussian per row) whose ratio deviation shrinks
        // like ε^{2/3}; n = 3000 matches the production ensemble size
        let zs: Vec<f64> = (0..3000)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let samples: Vec<Vec<f64>> = eps_list
            .iter()
            .map(|e| {
                let sd = e * (tau * e.powf(-2.0 / 3.0)).sqrt();
                let shrink = (1.0 - 0.54 * e.powf(2.0 / 3.0)).sqrt();
                zs.iter().map(|z| sd * shrink * z).collect()
            })
            .collect();
        let frac = variance_improvement_bootstrap(&samples, &eps_list, tau, 100, rng.random());
        if frac >= 0.8 {
            counts[4] += 1;
        }
    }
    let names = [
        "brownian_front",
        "ks_two_sample",
        "scaling_fit",
        "corrector_convergence",
        "variance_improvement_bootstrap",
    ];
    let per_test: Vec<(String, usize, usize)> = names
        .iter()
        .zip(&counts)
        .map(|(n, c)| (n.to_string(), *c, runs))
        .collect();
    let pass = counts.iter().all(|&c| c as f64 >= 0.95 * runs as f64);
    NullCheckReport { per_test, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_give_identical_probes() {
        let mut opts = FrontEnsembleOpts::new(0.1, 1.0, 2, 9);
        opts.identical_seeds = true;
        opts.probe_taus = vec![0.25, 0.5];
        opts.hy = 0.02;
        let table = front_fluctuation_ensemble(&opts).unwrap();
        for tau in ["D(tau=0.25)", "D(tau=0.5)"] {
            let v = table.values(tau);
            assert_eq!(v.len(), 2);
            assert_eq!(v[0], v[1]);
        }
    }

    #[test]
    fn zero_advection_gives_zero_variance() {
        // with eps = 0 the displacement is the pure grid bias, identical
        // across seeds
        let mut opts = FrontEnsembleOpts::new(0.0, 1.0, 4, 2);
        opts.probe_taus = vec![0.5, 1.0];
        opts.hy = 0.02;
        let table = front_fluctuation_ensemble(&opts).unwrap();
        let v = table.values("D(tau=1)");
        assert_eq!(v.len(), 4);
        let var = variance(&v);
        assert!(var <= 1e-24, "variance {var}");
    }

    #[test]
    fn table_row_count_matches_contract() {
        let mut opts = FrontEnsembleOpts::new(0.1, 1.0, 12, 5);
        opts.probe_taus = vec![0.5, 1.0];
        opts.hy = 0.02;
        let table = front_fluctuation_ensemble(&opts).unwrap();
        assert_eq!(table.rows.len(), 12 * 2);
        assert_eq!(table.exclusion_rate(), 0.0);
    }

    #[test]
    fn ensemble_deterministic_across_parallelism() {
        let mut opts = FrontEnsembleOpts::new(0.1, 1.0, 8, 123);
        opts.probe_taus = vec![0.5];
        opts.hy = 0.02;
        let a = front_fluctuation_ensemble(&opts).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| front_fluctuation_ensemble(&opts).unwrap());
        assert_eq!(a.rows.len(), b.rows.len());
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.sample_id, y.sample_id);
            assert_eq!(x.probe, y.probe);
            assert!(x.value.to_bits() == y.value.to_bits(), "nondeterministic value");
        }
    }

    #[test]
    fn brownian_front_null_self_test() {
        // synthetic samples D(t) = ε √t Z pass all four checks
        use rand::{Rng, SeedableRng};
        let eps = 0.1f64;
        let tau = 1.0f64;
        let t = tau * eps.powf(-2.0 / 3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 300;
        let mut d_half = Vec::new();
        let mut d_full = Vec::new();
        for _ in 0..n {
            let h = eps * (t / 2.0f64).sqrt();
            let z1: f64 = rng.sample(rand_distr::StandardNormal);
            let z2: f64 = rng.sample(rand_distr::StandardNormal);
            d_half.push(h * z1);
            d_full.push(h * (z1 + z2));
        }
        let rep = brownian_front_test_on(&d_half, &d_full, eps, tau).unwrap();
        assert!(rep.pass, "{:?}", rep.notes);
        assert!(rep.validate());
    }

    #[test]
    fn null_selfcheck_fast() {
        let rep = statistical_null_selfcheck(20, 7);
        for (name, passes, runs) in &rep.per_test {
            assert!(
                *passes as f64 >= 0.9 * *runs as f64,
                "{name}: {passes}/{runs}"
            );
        }
    }

    #[test]
    fn too_few_samples_refused() {
        assert!(matches!(
            brownian_front_test_on(&[0.0; 10], &[0.0; 10], 0.1, 1.0),
            Err(EnsembleError::TooFewSamples { .. })
        ));
    }
}
