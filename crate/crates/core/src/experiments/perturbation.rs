//! Empirical check of the perturbation inequality for `f(gΛ) − f(Λ)` with
//! `g` in an `ε`-ball around the identity.

use serde::Serialize;

use super::{par_trials, trial_rng, RunConfig};
use crate::lattice::perturb::{c0_for_family, perturbation_bound, random_lattice, random_perturbation, PerturbationReport};
use crate::lattice::s_lambda::compute_s_lambda;
use crate::lattice::LatticeBasis;
use crate::norms::NormSpec;
use crate::observable::Observable;
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationSummary {
    pub eps: f64,
    pub c: f64,
    pub m_hat: f64,
    pub lattices: usize,
    pub violations: usize,
    pub max_ratio: f64,
}

/// Largest `#S_Λ` over `samples` random lattices.
pub fn m_hat_estimate(seed: u64, samples: usize, m: usize, n: usize, norms: &(NormSpec, NormSpec), threads: Option<usize>) -> Result<usize> {
    let counts = par_trials(samples, threads, |i| {
        let mut rng = trial_rng(seed ^ 0x5eed_0f_1a77, i);
        compute_s_lambda(&random_lattice(&mut rng, m, n), norms).map(|s| s.count())
    });
    counts.into_iter().try_fold(0, |acc, c| c.map(|c| acc.max(c)))
}

fn pair(seed: u64, i: u64, m: usize, n: usize, eps: f64) -> (LatticeBasis, Vec<Vec<crate::BigRational>>) {
    let mut rng = trial_rng(seed, i);
    let lattice = random_lattice(&mut rng, m, n);
    let g = random_perturbation(&mut rng, m + n, eps);
    (lattice, g)
}

/// Runs `lattices` random pairs `(Λ, g)`. `M̂` is the largest count seen
/// over the pairs themselves and `m_hat_pool` extra lattices.
#[allow(clippy::too_many_arguments)]
pub fn run_perturbation(
    seed: u64,
    lattices: usize,
    eps: f64,
    m_hat_pool: usize,
    f: &Observable,
    config: &RunConfig,
) -> Result<(PerturbationSummary, Vec<PerturbationReport>)> {
    let (m, n) = (config.m, config.n);
    let norms = config.norms();
    let c = 2.0 * c0_for_family(m + n, &norms) * std::f64::consts::E;
    let mut m_hat = m_hat_estimate(seed, m_hat_pool, m, n, &norms, config.threads)?;
    let counts = par_trials(lattices, config.threads, |i| -> Result<usize> {
        let (lat, g) = pair(seed, i, m, n, eps);
        let a = compute_s_lambda(&lat, &norms)?.count();
        let b = compute_s_lambda(&lat.left_mul(&g)?, &norms)?.count();
        Ok(a.max(b))
    });
    for c in counts {
        m_hat = m_hat.max(c?);
    }
    let reports = par_trials(lattices, config.threads, |i| {
        let (lat, g) = pair(seed, i, m, n, eps);
        perturbation_bound(&lat, &g, eps, c, m_hat as f64, f, &norms)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let violations = reports.iter().filter(|r| !r.holds).count();
    let max_ratio = reports
        .iter()
        .filter(|r| r.bound > 0.0)
        .map(|r| r.difference / r.bound)
        .fold(0.0, f64::max);
    Ok((
        PerturbationSummary { eps, c, m_hat: m_hat as f64, lattices, violations, max_ratio },
        reports,
    ))
}
