//! The limiting law `ν` of approximation coefficients in dimension one, its
//! functionals, and the Birkhoff and variance estimators along `a_l u(θ)`.

use std::f64::consts::{LN_2, PI};

use crate::best_approx::{enumerate_best, window_sum, MatrixTheta};
use crate::cf::CoefficientStream;
use crate::norms::{NormKind, NormSpec};
use crate::observable::Observable;
use crate::{BigRational, Error, Result};

/// Density of `ν`: `1/ln 2` on `[0, 1/2]` and `(1/z − 1)/ln 2` on `(1/2, 1]`.
pub fn nu_density(z: f64) -> f64 {
    if !(0.0..=1.0).contains(&z) {
        0.0
    } else if z <= 0.5 {
        1.0 / LN_2
    } else {
        (1.0 / z - 1.0) / LN_2
    }
}

pub fn nu_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z <= 0.5 {
        z / LN_2
    } else if z < 1.0 {
        ((2.0 * z).ln() + 1.0 - z) / LN_2
    } else {
        1.0
    }
}

/// `∫ g dν` by adaptive Simpson on each smooth piece.
pub fn nu_functional(g: impl Fn(f64) -> f64) -> f64 {
    let h = |z: f64| g(z) * nu_density(z);
    adaptive_simpson(&h, 0.0, 0.5, 1e-13) + adaptive_simpson(&h, 0.5, 1.0, 1e-13)
}

/// `∫ z dν = 1/(4 ln 2)`.
pub fn nu_mean() -> f64 {
    1.0 / (4.0 * LN_2)
}

/// Convergents per unit of `ln q`: `12 ln 2 / π²`.
pub fn levy_gamma0_1d() -> f64 {
    12.0 * LN_2 / (PI * PI)
}

/// `β = ∫ F dν` for the 1-D law, with the side of approach equidistributed.
pub fn beta_1d(f: &Observable) -> f64 {
    nu_functional(|z| 0.5 * (f.eval_1d(z, 1) + f.eval_1d(z, -1)))
}

/// Limits `γ = β γ₀`, `γ₀` and `σ` of the Birkhoff sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitConstants {
    pub gamma: f64,
    pub gamma0: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl LimitConstants {
    pub fn one_dim(f: &Observable, sigma: f64) -> Self {
        let beta = beta_1d(f);
        let gamma0 = levy_gamma0_1d();
        LimitConstants { gamma: beta * gamma0, gamma0, beta, sigma: sigma.max(0.0) }
    }
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Birkhoff estimate `(1/T) Σ_{l=1..T} f_l` with its running averages.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    pub gamma: f64,
    /// `f_l`: the sum of `F` over best approximations with `e^l ≤ ‖q‖ < e^{l+1}`,
    /// one term per `±` pair.
    pub window_sums: Vec<f64>,
    /// Running averages after `1, …, T` windows.
    pub trajectory: Vec<f64>,
}

pub fn is_abs_1d(norms: &(NormSpec, NormSpec)) -> bool {
    let unit = |s: &NormSpec| {
        s.dim == 1 && s.scale == BigRational::from_integer(1.into()) && matches!(s.kind, NormKind::Sup | NormKind::Euclidean)
    };
    unit(&norms.0) && unit(&norms.1)
}

/// `f_1, …, f_T` along the orbit of `θ`; the 1-D absolute-value case runs on
/// the continued fraction.
pub fn window_sums(theta: &MatrixTheta, t: usize, f: &Observable, norms: &(NormSpec, NormSpec)) -> Result<Vec<f64>> {
    Ok(window_sums_multi(theta, t, std::slice::from_ref(f), norms)?.pop().unwrap())
}

/// Window sums for several observables from a single pass over the orbit.
pub fn window_sums_multi(
    theta: &MatrixTheta,
    t: usize,
    fs: &[Observable],
    norms: &(NormSpec, NormSpec),
) -> Result<Vec<Vec<f64>>> {
    if theta.m() == 1 && theta.n() == 1 && is_abs_1d(norms) {
        return window_sums_1d(&theta.entries[0][0], theta.precision_tag.as_ref(), t, fs);
    }
    let seq = enumerate_best(theta, (t + 1) as f64, norms)?;
    Ok(fs
        .iter()
        .map(|f| (1..=t).map(|l| window_sum(&seq, l as f64, (l + 1) as f64, f, &norms.1)).collect())
        .collect())
}

pub fn window_sums_1d(theta: &BigRational, tag: Option<&BigRational>, t: usize, fs: &[Observable]) -> Result<Vec<Vec<f64>>> {
    let mut sums = vec![vec![0.0; t]; fs.len()];
    let t = t as i64;
    for step in CoefficientStream::new(theta, tag) {
        if step.window > t {
            return Ok(sums);
        }
        if step.window < 1 || !step.is_best {
            continue;
        }
        if !step.certified {
            return Err(Error::BeyondCertifiedHorizon { horizon: (t + 1) as f64 });
        }
        for (acc, f) in sums.iter_mut().zip(fs) {
            acc[(step.window - 1) as usize] += f.eval_1d(step.coefficient, step.sign);
        }
    }
    // the expansion terminated: θ = p/q with q below e^{T+1}
    Err(Error::RationalDegeneracy { p: vec![-theta.numer().clone()], q: vec![theta.denom().clone()] })
}

pub fn estimate_gamma(f: &Observable, theta: &MatrixTheta, t: usize, norms: &(NormSpec, NormSpec)) -> Result<GammaEstimate> {
    if t == 0 {
        return Err(Error::invalid("T must be at least 1"));
    }
    let window_sums = window_sums(theta, t, f, norms)?;
    Ok(from_window_sums(window_sums))
}

pub fn from_window_sums(window_sums: Vec<f64>) -> GammaEstimate {
    let mut acc = 0.0;
    let trajectory: Vec<f64> = window_sums
        .iter()
        .enumerate()
        .map(|(i, x)| {
            acc += x;
            acc / (i + 1) as f64
        })
        .collect();
    GammaEstimate { gamma: *trajectory.last().unwrap_or(&0.0), window_sums, trajectory }
}

/// Pooled autocovariance estimate of `σ² = Σ_{|s| ≤ cutoff} Cov(f_0, f_s)`,
/// floored at zero.
pub fn estimate_sigma_from_series(series: &[Vec<f64>], cutoff: usize) -> Result<f64> {
    let t = series.iter().map(Vec::len).min().unwrap_or(0);
    if series.is_empty() || t < 10 * cutoff.max(1) {
        return Err(Error::InsufficientData(format!(
            "need series of length ≥ {} for cutoff {cutoff}, got {t}",
            10 * cutoff.max(1)
        )));
    }
    let total: usize = series.iter().map(Vec::len).sum();
    let mean = series.iter().flatten().sum::<f64>() / total as f64;
    let autocov = |s: usize| {
        let mut acc = 0.0;
        let mut cnt = 0usize;
        for x in series {
            for i in 0..x.len() - s {
                acc += (x[i] - mean) * (x[i + s] - mean);
            }
            cnt += x.len() - s;
        }
        acc / cnt as f64
    };
    let var = autocov(0) + 2.0 * (1..=cutoff).map(autocov).sum::<f64>();
    if var < 0.0 {
        log::warn!("negative plug-in variance {var:.3e} floored at 0");
    }
    Ok(var.max(0.0).sqrt())
}

pub fn estimate_sigma(
    f: &Observable,
    thetas: &[MatrixTheta],
    t: usize,
    cutoff: usize,
    norms: &(NormSpec, NormSpec),
) -> Result<f64> {
    if t < 10 * cutoff.max(1) {
        return Err(Error::InsufficientData(format!("T = {t} < 10 · cutoff = {}", 10 * cutoff)));
    }
    let series = thetas.iter().map(|th| window_sums(th, t, f, norms)).collect::<Result<Vec<_>>>()?;
    estimate_sigma_from_series(&series, cutoff)
}
