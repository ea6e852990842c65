//! Statistical toolbox for the Monte Carlo verification layer: moments,
//! one- and two-sample Kolmogorov–Smirnov tests with asymptotic p-values,
//! bootstrap confidence intervals, and log-log scaling fits.
//!
//! Everything here consumes probe values as `f64`; determinism is inherited
//! from the seeded ensembles feeding it.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("scaling fit needs >= 3 eps values spanning a factor >= 4")]
    BadScalingInput,
    #[error("nonpositive error value {0} in scaling fit")]
    NonpositiveError(f64),
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let s2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let s3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    if s2 <= 0.0 {
        0.0
    } else {
        s3 / s2.powf(1.5)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn percentile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() {
        v[i] * (1.0 - frac) + v[i + 1] * frac
    } else {
        v[i]
    }
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov survival function Q(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
}

/// One-sample KS test against a reference CDF (Stephens' small-sample
/// correction for the asymptotic p-value).
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / nf - f).abs());
        d = d.max((f - i as f64 / nf).abs());
    }
    let sqrt_n = nf.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    KsResult { statistic: d, p_value: kolmogorov_sf(lambda), n, m: 0 }
}

/// Two-sample KS distance and asymptotic p-value.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> KsResult {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    KsResult { statistic: d, p_value: kolmogorov_sf(lambda), n, m }
}

/// Least-squares slope of log(error) vs log(eps) with a bootstrap CI.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_points: usize,
}

fn slope_of_log_medians(errors: &[Vec<f64>], eps_list: &[f64]) -> Result<f64, StatsError> {
    let xs: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let mut ys = Vec::with_capacity(errors.len());
    for errs in errors {
        let med = median(errs);
        if med <= 0.0 {
            return Err(StatsError::NonpositiveError(med));
        }
        ys.push(med.ln());
    }
    let mx = mean(&xs);
    let my = mean(&ys);
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx).powi(2);
    }
    Ok(num / den)
}

/// `errors[i]` holds the per-sample error values observed at `eps_list[i]`
/// (a single value per eps is allowed; the CI then degenerates).
pub fn scaling_fit(
    errors: &[Vec<f64>],
    eps_list: &[f64],
    n_bootstrap: usize,
    seed: u64,
) -> Result<ScalingFit, StatsError> {
    if errors.len() != eps_list.len() || eps_list.len() < 3 {
        return Err(StatsError::BadScalingInput);
    }
    let max_e = eps_list.iter().cloned().fold(f64::MIN, f64::max);
    let min_e = eps_list.iter().cloned().fold(f64::MAX, f64::min);
    if !(max_e / min_e >= 4.0 - 1e-12) || min_e <= 0.0 {
        return Err(StatsError::BadScalingInput);
    }
    for errs in errors {
        if errs.is_empty() {
            return Err(StatsError::BadScalingInput);
        }
        for &e in errs {
            if e <= 0.0 {
                return Err(StatsError::NonpositiveError(e));
            }
        }
    }
    let exponent = slope_of_log_medians(errors, eps_list)?;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(n_bootstrap);
    for _ in 0..n_bootstrap {
        let resampled: Vec<Vec<f64>> = errors
            .iter()
            .map(|errs| {
                (0..errs.len())
                    .map(|_| errs[rng.random_range(0..errs.len())])
                    .collect()
            })
            .collect();
        slopes.push(slope_of_log_medians(&resampled, eps_list)?);
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = percentile(&slopes, 0.025);
    let hi = percentile(&slopes, 0.975);
    Ok(ScalingFit { exponent, ci_low: lo, ci_high: hi, n_points: eps_list.len() })
}

/// Per-probe summary used in reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeStats {
    pub probe: String,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

impl ProbeStats {
    pub fn from_samples(probe: impl Into<String>, xs: &[f64]) -> Self {
        Self {
            probe: probe.into(),
            n: xs.len(),
            mean: mean(xs),
            variance: variance(xs),
            skewness: skewness(xs),
        }
    }
}

/// Unified statistics report emitted by the verification ensembles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub probes: Vec<ProbeStats>,
    pub ks: Vec<KsResult>,
    pub variance_ratio: Option<f64>,
    pub increment_correlation: Option<f64>,
    pub scaling: Option<ScalingFit>,
    pub sample_count: usize,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl StatsReport {
    pub fn new(sample_count: usize) -> Self {
        Self {
            probes: Vec::new(),
            ks: Vec::new(),
            variance_ratio: None,
            increment_correlation: None,
            scaling: None,
            sample_count,
            pass: true,
            notes: Vec::new(),
        }
    }

    pub fn validate(&self) -> bool {
        self.ks.iter().all(|k| (0.0..=1.0).contains(&k.p_value))
            && self.probes.iter().all(|p| p.variance >= 0.0)
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn require(&mut self, ok: bool, what: impl std::fmt::Display) {
        if !ok {
            self.pass = false;
            self.notes.push(format!("FAILED: {what}"));
        }
    }
}
