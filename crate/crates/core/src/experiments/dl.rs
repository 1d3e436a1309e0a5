//! Running averages of `F` over the first `N` best approximations.

use std::time::Instant;

use serde_json::json;

use super::{par_trials, sample_theta, trial_rng, ExperimentOutput, ExperimentRecord, RunConfig, TrialFailure};
use crate::best_approx::{enumerate_best, MatrixTheta};
use crate::cf::CoefficientStream;
use crate::norms::NormSpec;
use crate::observable::Observable;
use crate::reference::{is_abs_1d, nu_cdf, LimitConstants};
use crate::stats::{empirical_cdf, mean, variance};
use crate::{Error, Result};

/// `(ln ‖q‖, z, F(φ))` for each best approximation in order.
pub type OrbitPoint = (f64, f64, f64);

/// The first `n` best approximations of `θ`.
pub fn first_best(theta: &MatrixTheta, n: usize, f: &Observable, norms: &(NormSpec, NormSpec)) -> Result<Vec<OrbitPoint>> {
    if theta.m() == 1 && theta.n() == 1 && is_abs_1d(norms) {
        let x = &theta.entries[0][0];
        let mut out = Vec::with_capacity(n);
        for step in CoefficientStream::new(x, theta.precision_tag.as_ref()) {
            if out.len() == n {
                return Ok(out);
            }
            if !step.is_best {
                continue;
            }
            if !step.certified {
                return Err(Error::BeyondCertifiedHorizon { horizon: step.ln_q });
            }
            out.push((step.ln_q, step.coefficient, f.eval_1d(step.coefficient, step.sign)));
        }
        if out.len() == n {
            return Ok(out);
        }
        return Err(Error::RationalDegeneracy { p: vec![-x.numer().clone()], q: vec![x.denom().clone()] });
    }
    let mut t = 4.0;
    loop {
        let seq = enumerate_best(theta, t, norms)?;
        if seq.items.len() >= n {
            return Ok(seq
                .items
                .iter()
                .take(n)
                .map(|b| (b.qnorm.ln(), b.phi().0, b.evaluate(f)))
                .collect());
        }
        t += 2.0;
    }
}

pub fn run_dl(config: &RunConfig) -> Result<ExperimentOutput> {
    let n = config.n_horizon.unwrap_or(0);
    let cps = config.checkpoints_or_default(n);
    let norms = config.norms();
    let measure = config.measure()?;
    let bits = config.bits();
    let f = &config.observable;
    let results = par_trials(config.trials, config.threads, |trial| {
        let start = Instant::now();
        let mut rng = trial_rng(config.seed, trial);
        let orbit = sample_theta(&measure, config.m, config.n, bits, &mut rng)
            .and_then(|theta| first_best(&theta, n, f, &norms));
        (orbit, start.elapsed().as_millis() as u64)
    });

    let exact = config.m == 1 && config.n == 1 && is_abs_1d(&norms);
    let mut failures = Vec::new();
    let mut good = Vec::new();
    for (trial, (res, ms)) in results.into_iter().enumerate() {
        match res {
            Ok(o) => good.push((trial as u64, o, ms)),
            Err(e) => failures.push(TrialFailure { trial: trial as u64, error: e.to_string() }),
        }
    }
    // pooled estimates stand in for the unknown limits outside the 1-D case
    let limits = if exact {
        LimitConstants::one_dim(f, 0.0)
    } else {
        let t_sum: f64 = good.iter().map(|(_, o, _)| o[n - 1].0).sum();
        let f_sum: f64 = good.iter().map(|(_, o, _)| o.iter().map(|p| p.2).sum::<f64>()).sum();
        let gamma0 = (good.len() * n) as f64 / t_sum;
        let gamma = f_sum / t_sum;
        LimitConstants { gamma, gamma0, beta: gamma / gamma0, sigma: 0.0 }
    };

    let mut records = Vec::new();
    let mut coefficients = Vec::with_capacity(good.len() * n);
    let mut trial_means = Vec::new();
    for (trial, orbit, ms) in &good {
        let mut acc = 0.0;
        let mut next = 0;
        for (i, p) in orbit.iter().enumerate() {
            acc += p.2;
            if next < cps.len() && i + 1 == cps[next] {
                let t = p.0;
                let err = acc - limits.gamma * t;
                records.push(ExperimentRecord {
                    trial: *trial,
                    checkpoint_t: t,
                    sum_f: acc,
                    count_n: (i + 1) as u64,
                    err_gamma: err,
                    err_gamma0: (i + 1) as f64 - limits.gamma0 * t,
                    clt_stat: err / t.sqrt(),
                    seed: config.seed,
                    wall_ms: if config.timing { *ms } else { 0 },
                });
                next += 1;
            }
        }
        trial_means.push(acc / n as f64);
        coefficients.extend(orbit.iter().map(|p| p.1));
    }

    let mut sorted = coefficients.clone();
    sorted.sort_by(f64::total_cmp);
    let cdf_half = if sorted.is_empty() { f64::NAN } else { empirical_cdf(&sorted, 0.5) };
    let cdf_sup = (1..=100)
        .map(|i| {
            let z = i as f64 / 100.0;
            (empirical_cdf(&sorted, z) - nu_cdf(z)).abs()
        })
        .fold(0.0, f64::max);
    let grand_mean = if trial_means.is_empty() { f64::NAN } else { mean(&trial_means) };
    let t_final: Vec<f64> = good.iter().map(|(_, o, _)| o[n - 1].0).collect();
    let gamma0_hat = if t_final.is_empty() { f64::NAN } else { (t_final.len() * n) as f64 / t_final.iter().sum::<f64>() };
    let summary = json!({
        "mode": format!("{:?}", config.mode).to_lowercase(),
        "observable": f.name(),
        "trials_ok": good.len(),
        "trials_failed": failures.len(),
        "n_horizon": n,
        "grand_mean": grand_mean,
        "beta": limits.beta,
        "abs_error": (grand_mean - limits.beta).abs(),
        "trial_mean_sd": if trial_means.len() > 1 { variance(&trial_means).sqrt() } else { 0.0 },
        "gamma0_hat": gamma0_hat,
        "gamma0": limits.gamma0,
        "cdf_at_half": cdf_half,
        "cdf_sup_distance": cdf_sup,
        "limits_exact": exact,
    });
    let mut calibration = std::collections::BTreeMap::new();
    calibration.insert("gamma".into(), limits.gamma);
    calibration.insert("gamma0".into(), limits.gamma0);
    calibration.insert("beta".into(), limits.beta);
    Ok(ExperimentOutput { records, summary, calibration, failures, coefficients })
}
