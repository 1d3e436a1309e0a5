//! Decay of correlations along expanding horocycles in dimension two,
//! measured on a fixed bump of the shortest vector length.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{trial_rng, ExperimentOutput, RunConfig};
use crate::lattice::siegel::shortest_length;
use crate::reference::adaptive_simpson;
use crate::stats::{ols, spearman};
use crate::{Error, Result};

/// Versioned test-function preset: `ψ(s) = exp(1 − 1/(1 − ((s − c)/w)²))`
/// on `|s − c| < w`, applied to `λ₁(Λ)`.
pub const BUMP_PRESET: &str = "sv-bump-v1";
const BUMP_C: f64 = 0.6;
const BUMP_W: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    /// Number of flowed factors, 1 or 2 (`t₂ = 2t₁`).
    pub r: usize,
    pub grid: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_preset")]
    pub preset: String,
}

fn default_samples() -> usize {
    1_000_000
}

fn default_preset() -> String {
    BUMP_PRESET.into()
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig {
            r: 1,
            grid: (1..=8).map(|k| k as f64 * 0.5).collect(),
            samples: default_samples(),
            preset: default_preset(),
        }
    }
}

impl CorrelationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.r) {
            return Err(Error::Config("correlation.r must be 1 or 2".into()));
        }
        if self.preset != BUMP_PRESET {
            return Err(Error::Config(format!("unknown test-function preset `{}`", self.preset)));
        }
        if self.grid.is_empty() || self.grid.iter().any(|t| !(*t >= 0.0 && *t <= 10.0)) {
            return Err(Error::Config("correlation grid must be nonempty within [0, 10]".into()));
        }
        if self.samples < 100 {
            return Err(Error::Config("correlation needs at least 100 samples".into()));
        }
        Ok(())
    }
}

pub fn bump(s: f64) -> f64 {
    let u = (s - BUMP_C) / BUMP_W;
    if u.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// `μ_X(ψ∘λ₁) = ∫ ψ(s) (6s/π) ds`; the law of `λ₁` has density `6s/π`
/// below `(4/3)^{1/4}`, which contains the support of `ψ`.
pub fn bump_haar_mean() -> f64 {
    adaptive_simpson(&|s| bump(s) * 6.0 * s / std::f64::consts::PI, BUMP_C - BUMP_W, BUMP_C + BUMP_W, 1e-14)
}

fn euler_phi_table(n: usize) -> Vec<u64> {
    let mut phi: Vec<u64> = (0..=n as u64).collect();
    for p in 2..=n {
        if phi[p] == p as u64 {
            for k in (p..=n).step_by(p) {
                phi[k] -= phi[k] / p as u64;
            }
        }
    }
    phi
}

/// `∫₀¹ ψ(λ₁(a_t u(θ)Z²)) dθ` by unfolding over primitive vectors:
/// `Σ_q φ(q)/(q e^t) ∫ ψ(√(s² + (q e^{−t})²)) ds`.
pub fn horocycle_mean(t: f64) -> f64 {
    let et = t.exp();
    let q_max = ((BUMP_C + BUMP_W) * et).floor() as usize;
    let phi = euler_phi_table(q_max.max(1));
    let top = BUMP_C + BUMP_W;
    (1..=q_max)
        .map(|q| {
            let h = q as f64 / et;
            if h >= top {
                return 0.0;
            }
            let half = (top * top - h * h).sqrt();
            let inner = 2.0 * adaptive_simpson(&|s| bump((s * s + h * h).sqrt()), 0.0, half, 1e-13);
            phi[q] as f64 / (q as f64 * et) * inner
        })
        .sum()
}

fn flowed_lambda1(theta: f64, t: f64) -> f64 {
    let (ex, ey) = (t.exp(), (-t).exp());
    shortest_length([[ex, 0.0], [ex * theta, ey]])
}

/// Stratified Monte Carlo over `θ ∈ [0, 1)`; returns the estimate of
/// `∫ Π_i ψ(λ₁(a_{t_i} u(θ)Z²)) dθ` and a standard error.
pub fn horocycle_product_mc(times: &[f64], samples: usize, seed: u64, stream: u64) -> (f64, f64) {
    let mut rng = trial_rng(seed, stream);
    let block = 64;
    let mut means = Vec::with_capacity(samples.div_ceil(block));
    let mut acc = 0.0;
    let mut cnt = 0;
    for i in 0..samples {
        let theta = (i as f64 + rng.random::<f64>()) / samples as f64;
        acc += times.iter().map(|&t| bump(flowed_lambda1(theta, t))).product::<f64>();
        cnt += 1;
        if cnt == block || i + 1 == samples {
            means.push(acc / cnt as f64);
            acc = 0.0;
            cnt = 0;
        }
    }
    let total = means.iter().sum::<f64>() / means.len() as f64;
    // spread of block means as a conservative error proxy
    let var = means.iter().map(|m| (m - total).powi(2)).sum::<f64>() / (means.len() as f64 - 1.0).max(1.0);
    (total, (var / means.len() as f64).sqrt())
}

pub fn run_correlation(config: &RunConfig) -> Result<ExperimentOutput> {
    if (config.m, config.n) != (1, 1) {
        return Err(Error::Config("correlation probes run for m = n = 1".into()));
    }
    let cc = config.correlation.clone().unwrap_or_default();
    cc.validate()?;
    let mu = bump_haar_mean();
    let expected = mu.powi(cc.r as i32);
    let mut rows = Vec::new();
    let mut ds = Vec::new();
    let mut abs_disc = Vec::new();
    for (k, &t) in cc.grid.iter().enumerate() {
        let times: Vec<f64> = if cc.r == 1 { vec![t] } else { vec![t, 2.0 * t] };
        let (est, se) = horocycle_product_mc(&times, cc.samples, config.seed, k as u64);
        let disc = est - expected;
        let oracle = (cc.r == 1).then(|| horocycle_mean(t) - mu);
        rows.push(json!({ "t": t, "D": t, "estimate": est, "std_error": se, "discrepancy": disc, "oracle_discrepancy": oracle }));
        ds.push(t);
        abs_disc.push(disc.abs());
    }
    let rho = spearman(&ds, &abs_disc);
    let logs: Vec<(f64, f64)> = ds.iter().zip(&abs_disc).filter(|(_, a)| **a > 0.0).map(|(d, a)| (*d, a.ln())).collect();
    let slope = if logs.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = logs.into_iter().unzip();
        Some(ols(&x, &y).1)
    } else {
        None
    };
    let summary = json!({
        "mode": "correlation",
        "preset": cc.preset,
        "r": cc.r,
        "samples": cc.samples,
        "mu_x": mu,
        "grid": rows,
        "spearman_abs_discrepancy": rho,
        "log_discrepancy_slope": slope,
    });
    let mut calibration = std::collections::BTreeMap::new();
    calibration.insert("mu_x_bump".into(), mu);
    Ok(ExperimentOutput { records: Vec::new(), summary, calibration, failures: Vec::new(), coefficients: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.6), 1.0);
        assert_eq!(bump(0.3), 0.0);
        assert_eq!(bump(0.95), 0.0);
        assert!((bump_haar_mean() - 0.414_901_768_612_010).abs() < 1e-10);
    }

    #[test]
    fn oracle_matches_monte_carlo() {
        for t in [0.5, 1.5, 2.5] {
            let (mc, se) = horocycle_product_mc(&[t], 200_000, 1, 0);
            let exact = horocycle_mean(t);
            assert!((mc - exact).abs() < 1e-4 + 5.0 * se, "{t}: {mc} vs {exact}");
        }
    }
}
