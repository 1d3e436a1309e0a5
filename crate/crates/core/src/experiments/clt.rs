//! Fluctuations of `F_F(θ, T)` around `γT`: the CLT statistic and the
//! growth rate of the error.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use serde_json::json;

use super::{par_trials, sample_theta, trial_rng, ExperimentOutput, ExperimentRecord, RunConfig, TrialFailure};
use crate::observable::Observable;
use crate::reference::{estimate_sigma_from_series, is_abs_1d, window_sums_multi, LimitConstants};
use crate::stats::{ks_fitted_centered_normal, ks_normal, mean, quantile_regression, variance};
use crate::{Error, Result};

/// Window sums of `F` and window counts for every successful trial.
#[derive(Debug, Clone)]
pub struct OrbitBatch {
    pub trials: Vec<u64>,
    pub sums: Vec<Vec<f64>>,
    pub counts: Vec<Vec<f64>>,
    pub wall_ms: Vec<u64>,
    pub failures: Vec<TrialFailure>,
    pub limits: LimitConstants,
    pub exact_limits: bool,
}

pub fn orbit_batch(config: &RunConfig, t: usize) -> Result<OrbitBatch> {
    let norms = config.norms();
    let measure = config.measure()?;
    let bits = config.bits();
    let fs = [config.observable.clone(), Observable::Constant { value: 1.0 }];
    let results = par_trials(config.trials, config.threads, |trial| {
        let start = Instant::now();
        let mut rng = trial_rng(config.seed, trial);
        let r = sample_theta(&measure, config.m, config.n, bits, &mut rng)
            .and_then(|theta| window_sums_multi(&theta, t, &fs, &norms));
        (r, start.elapsed().as_millis() as u64)
    });
    let mut batch = OrbitBatch {
        trials: Vec::new(),
        sums: Vec::new(),
        counts: Vec::new(),
        wall_ms: Vec::new(),
        failures: Vec::new(),
        limits: LimitConstants::one_dim(&config.observable, 0.0),
        exact_limits: config.m == 1 && config.n == 1 && is_abs_1d(&norms),
    };
    for (trial, (r, ms)) in results.into_iter().enumerate() {
        match r {
            Ok(mut v) => {
                batch.counts.push(v.pop().unwrap());
                batch.sums.push(v.pop().unwrap());
                batch.trials.push(trial as u64);
                batch.wall_ms.push(ms);
            }
            Err(e) => batch.failures.push(TrialFailure { trial: trial as u64, error: e.to_string() }),
        }
    }
    if !batch.exact_limits {
        let total = (batch.sums.len() * t) as f64;
        let gamma = batch.sums.iter().flatten().sum::<f64>() / total;
        let gamma0 = batch.counts.iter().flatten().sum::<f64>() / total;
        batch.limits = LimitConstants { gamma, gamma0, beta: gamma / gamma0, sigma: 0.0 };
    }
    Ok(batch)
}

fn records(config: &RunConfig, batch: &OrbitBatch, cps: &[usize]) -> Vec<ExperimentRecord> {
    let g = batch.limits;
    let mut out = Vec::new();
    for (i, trial) in batch.trials.iter().enumerate() {
        let (mut s, mut c, mut next) = (0.0, 0.0, 0);
        for l in 0..batch.sums[i].len() {
            s += batch.sums[i][l];
            c += batch.counts[i][l];
            if next < cps.len() && l + 1 == cps[next] {
                let t = cps[next] as f64;
                out.push(ExperimentRecord {
                    trial: *trial,
                    checkpoint_t: t,
                    sum_f: s,
                    count_n: c as u64,
                    err_gamma: s - g.gamma * t,
                    err_gamma0: c - g.gamma0 * t,
                    clt_stat: (s - g.gamma * t) / t.sqrt(),
                    seed: config.seed,
                    wall_ms: if config.timing { batch.wall_ms[i] } else { 0 },
                });
                next += 1;
            }
        }
    }
    out
}

fn calibration(limits: &LimitConstants) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("gamma".to_string(), limits.gamma),
        ("gamma0".to_string(), limits.gamma0),
        ("beta".to_string(), limits.beta),
        ("sigma".to_string(), limits.sigma),
    ])
}

pub fn run_clt(config: &RunConfig) -> Result<ExperimentOutput> {
    if config.trials < 50 {
        return Err(Error::InsufficientData(format!("CLT needs at least 50 trials, got {}", config.trials)));
    }
    let t = config.t_horizon.unwrap_or(0);
    let mut batch = orbit_batch(config, t)?;
    if batch.sums.len() < 50 {
        return Err(Error::InsufficientData(format!("only {} trials succeeded", batch.sums.len())));
    }
    let cutoffs = config.cutoffs.clone().unwrap_or_else(|| vec![20, 40]);
    let sigmas = cutoffs
        .iter()
        .map(|&c| estimate_sigma_from_series(&batch.sums, c))
        .collect::<Result<Vec<_>>>()?;
    let sigma = *sigmas.last().unwrap_or(&0.0);
    batch.limits.sigma = sigma;
    let g = batch.limits.gamma;
    let stats: Vec<f64> = batch
        .sums
        .iter()
        .map(|s| (s.iter().sum::<f64>() - g * t as f64) / (t as f64).sqrt())
        .collect();
    let (sigma_fit, ks_fit) = ks_fitted_centered_normal(&stats);
    let ks_sigma = ks_normal(&stats, sigma);
    let stat_var = if stats.len() > 1 { variance(&stats) } else { 0.0 };
    let stability = if sigmas.len() >= 2 && sigmas[0] > 0.0 {
        (sigmas[sigmas.len() - 1] / sigmas[0] - 1.0).abs()
    } else {
        0.0
    };
    let summary = json!({
        "mode": "clt",
        "observable": config.observable.name(),
        "t_horizon": t,
        "trials_ok": stats.len(),
        "trials_failed": batch.failures.len(),
        "gamma": g,
        "stat_mean": mean(&stats),
        "stat_variance": stat_var,
        "cutoffs": cutoffs,
        "sigma_by_cutoff": sigmas,
        "sigma_relative_change": stability,
        "sigma_fit": sigma_fit,
        "ks_fitted_normal": ks_fit,
        "ks_sigma_normal": ks_sigma,
        "variance_ratio": if sigma > 0.0 { stat_var / (sigma * sigma) } else { f64::NAN },
    });
    let cps = config.checkpoints_or_default(t);
    Ok(ExperimentOutput {
        records: records(config, &batch, &cps),
        summary,
        calibration: calibration(&batch.limits),
        failures: batch.failures,
        coefficients: Vec::new(),
    })
}

/// Roughly ten checkpoints per decade from 100 to `t`.
pub fn rate_checkpoints(t: usize) -> Vec<usize> {
    let mut cps: Vec<usize> = Vec::new();
    let mut k = 0;
    loop {
        let c = (100.0 * 10f64.powf(k as f64 / 10.0)).round() as usize;
        if c >= t {
            break;
        }
        if cps.last() != Some(&c) {
            cps.push(c);
        }
        k += 1;
    }
    cps.push(t);
    cps
}

/// Slope of the `τ`-quantile regression of `ln|err|` on `ln T`, skipping
/// exact zeros.
pub fn error_slope(points: &[(f64, f64)], tau: f64) -> Option<(f64, f64)> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, e)| *e != 0.0 && e.is_finite())
        .map(|(t, e)| (t.ln(), e.abs().ln()))
        .unzip();
    if x.len() < 3 {
        return None;
    }
    Some(quantile_regression(&x, &y, tau))
}

/// Harness self-test: errors `√T (1 + |Z|)` with Gaussian-like noise must
/// give slope `1/2`.
pub fn planted_slope(seed: u64, trials: usize, checkpoints: &[usize]) -> f64 {
    let mut pts = Vec::new();
    for trial in 0..trials as u64 {
        let mut rng = trial_rng(seed, trial);
        for &c in checkpoints {
            let z: f64 = (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0;
            pts.push((c as f64, (c as f64).sqrt() * (1.0 + z.abs())));
        }
    }
    error_slope(&pts, 0.9).map_or(f64::NAN, |(_, b)| b)
}

pub fn run_rate_fit(config: &RunConfig) -> Result<ExperimentOutput> {
    let batch = orbit_batch(config, config.t_horizon.unwrap_or(0))?;
    Ok(rate_fit(config, batch))
}

/// Rate report for an already computed batch.
pub fn rate_fit(config: &RunConfig, batch: OrbitBatch) -> ExperimentOutput {
    let t = config.t_horizon.unwrap_or(0);
    let cps = config.checkpoints.clone().unwrap_or_else(|| rate_checkpoints(t));
    let recs = records(config, &batch, &cps);
    let pts: Vec<(f64, f64)> = recs.iter().map(|r| (r.checkpoint_t, r.err_gamma)).collect();
    let fit = error_slope(&pts, 0.9);
    let eps = config.eps_log;
    let normalized = recs
        .iter()
        .filter(|r| r.checkpoint_t > std::f64::consts::E)
        .map(|r| r.err_gamma.abs() / (r.checkpoint_t.sqrt() * r.checkpoint_t.ln().powf(1.5 + eps)))
        .fold(0.0, f64::max);
    let summary = json!({
        "mode": "rate",
        "observable": config.observable.name(),
        "t_horizon": t,
        "trials_ok": batch.sums.len(),
        "trials_failed": batch.failures.len(),
        "checkpoints": cps,
        "slope_q90": fit.map(|f| f.1),
        "intercept_q90": fit.map(|f| f.0),
        "eps_log": eps,
        "sup_normalized_error": normalized,
        "gamma": batch.limits.gamma,
    });
    ExperimentOutput {
        records: recs,
        summary,
        calibration: calibration(&batch.limits),
        failures: batch.failures,
        coefficients: Vec::new(),
    }
}
