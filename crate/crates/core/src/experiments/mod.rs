//! Seeded experiment drivers. Every trial draws from its own ChaCha stream
//! derived from the master seed, so results do not depend on thread count.

pub mod clt;
pub mod correlation;
pub mod dl;
pub mod lemma51;
pub mod perturbation;
pub mod record;

use num_bigint::BigInt;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::best_approx::MatrixTheta;
use crate::cf::random_dyadic;
use crate::fractal::{cantor_system, depth_for_bits, sample_theta as ifs_sample, IFSSystem};
use crate::norms::NormSpec;
use crate::observable::Observable;
use crate::{BigRational, Error, Result};

pub use record::{ExperimentOutput, ExperimentRecord, TrialFailure};

/// `π²/(12 ln 2)`, the a.e. limit of `ln q_N / N`.
pub const LEVY_GROWTH: f64 = 1.186_569_110_415_625;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dl,
    Clt,
    Fractal,
    Rate,
    Correlation,
    Lemma51,
}

/// Sampling measure for θ: `"lebesgue"`, `{"ifs": "cantor"}` or
/// `{"ifs": {<IFSSystem>}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    #[default]
    Lebesgue,
    Ifs(IfsChoice),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IfsChoice {
    Named(String),
    Custom(IFSSystem),
}

impl Measure {
    pub fn system(&self) -> Result<Option<IFSSystem>> {
        match self {
            Measure::Lebesgue => Ok(None),
            Measure::Ifs(IfsChoice::Named(name)) if name == "cantor" => Ok(Some(cantor_system())),
            Measure::Ifs(IfsChoice::Named(name)) => Err(Error::Config(format!("unknown IFS preset `{name}`"))),
            Measure::Ifs(IfsChoice::Custom(sys)) => {
                sys.validate().map_err(|e| Error::Config(e.to_string()))?;
                Ok(Some(sys.clone()))
            }
        }
    }
}

fn one() -> usize {
    1
}

fn version() -> u32 {
    CONFIG_VERSION
}

fn default_eps_log() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "version")]
    pub version: u32,
    pub mode: Mode,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default = "one")]
    pub n: usize,
    /// `(norm on R^m, norm on R^n)`; sup norms when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norms: Option<(NormSpec, NormSpec)>,
    #[serde(default)]
    pub observable: Observable,
    /// Number of best approximations per trial (`dl`, `fractal`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_horizon: Option<usize>,
    /// Number of unit windows of `ln ‖q‖` per trial (`clt`, `rate`,
    /// `lemma51`, `correlation`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub measure: Measure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_bits: Option<u64>,
    /// Autocovariance cutoffs for the variance estimate (`clt`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<usize>>,
    /// `ε` in the `log^{3/2+ε}` normalization of rate reports.
    #[serde(default = "default_eps_log")]
    pub eps_log: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<correlation::CorrelationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Fill `wall_ms`; off by default so outputs are bit-reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            mode,
            m: 1,
            n: 1,
            norms: None,
            observable: Observable::Coefficient,
            n_horizon: None,
            t_horizon: None,
            checkpoints: None,
            trials: 1,
            seed: 0,
            measure: Measure::Lebesgue,
            precision_bits: None,
            cutoffs: None,
            eps_log: default_eps_log(),
            correlation: None,
            threads: None,
            timing: false,
            output: None,
        }
    }

    pub fn norms(&self) -> (NormSpec, NormSpec) {
        self.norms.clone().unwrap_or_else(|| (NormSpec::sup(self.m), NormSpec::sup(self.n)))
    }

    pub fn measure(&self) -> Result<Measure> {
        if self.mode == Mode::Fractal && self.measure == Measure::Lebesgue {
            return Ok(Measure::Ifs(IfsChoice::Named("cantor".into())));
        }
        Ok(self.measure.clone())
    }

    /// Bits of θ needed for the configured horizon.
    pub fn required_bits(&self) -> u64 {
        let per_entry = match (self.n_horizon, self.t_horizon) {
            (Some(n), _) if self.mode == Mode::Dl || self.mode == Mode::Fractal => n_bits(n),
            (_, Some(t)) => t_bits(t, self.n as f64 / self.m as f64),
            _ => 256,
        };
        per_entry
    }

    pub fn bits(&self) -> u64 {
        self.precision_bits.unwrap_or_else(|| self.required_bits())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {}", self.version));
        }
        if self.m == 0 || self.n == 0 {
            return bad("m and n must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        let (nm, nn) = self.norms();
        if nm.dim != self.m || nn.dim != self.n {
            return bad(format!("norm dimensions ({}, {}) do not match (m, n) = ({}, {})", nm.dim, nn.dim, self.m, self.n));
        }
        nm.validate().and(nn.validate()).map_err(|e| Error::Config(e.to_string()))?;
        self.observable.validate().map_err(|e| Error::Config(e.to_string()))?;
        let measure = self.measure()?;
        if let Some(sys) = measure.system()? {
            if sys.m() != self.m || sys.n() != self.n {
                return bad("IFS dimensions do not match (m, n)".into());
            }
        }
        match self.mode {
            Mode::Dl | Mode::Fractal => {
                if self.n_horizon.unwrap_or(0) == 0 {
                    return bad("n_horizon must be at least 1".into());
                }
            }
            Mode::Clt | Mode::Rate | Mode::Lemma51 => {
                if self.t_horizon.unwrap_or(0) == 0 {
                    return bad("t_horizon must be at least 1".into());
                }
            }
            Mode::Correlation => {}
        }
        if let Some(cps) = &self.checkpoints {
            if cps.is_empty() || cps.windows(2).any(|w| w[0] >= w[1]) || cps[0] == 0 {
                return bad("checkpoints must be positive and strictly increasing".into());
            }
            let horizon = self.n_horizon.or(self.t_horizon).unwrap_or(0);
            if cps.last().is_some_and(|&c| c > horizon) {
                return bad("checkpoints exceed the horizon".into());
            }
        }
        if let Some(bits) = self.precision_bits {
            if matches!(self.mode, Mode::Dl | Mode::Fractal | Mode::Clt | Mode::Rate) && bits < self.required_bits() {
                return bad(format!(
                    "precision_bits = {bits} is below the {} bits needed for the horizon",
                    self.required_bits()
                ));
            }
        }
        if !(self.eps_log > 0.0) {
            return bad("eps_log must be positive".into());
        }
        if let Some(c) = &self.correlation {
            c.validate()?;
        }
        Ok(())
    }

    /// Checkpoints, defaulting to one per decade plus the horizon.
    pub fn checkpoints_or_default(&self, horizon: usize) -> Vec<usize> {
        if let Some(c) = &self.checkpoints {
            return c.clone();
        }
        let mut cps: Vec<usize> = (1..).map(|k| 10usize.pow(k)).take_while(|&c| c < horizon).collect();
        cps.push(horizon);
        cps
    }
}

/// Bits for `N` convergents: `ln q_N ≈ 1.18657 N`, squared, 25% margin.
pub fn n_bits(n: usize) -> u64 {
    (n as f64 * 2.0 * LEVY_GROWTH / std::f64::consts::LN_2 * 1.25).ceil() as u64 + 128
}

/// Bits for `‖q‖ < e^{T+1}`: residuals reach `e^{−(n/m)T}`, 10% margin.
pub fn t_bits(t: usize, ratio: f64) -> u64 {
    ((t + 1) as f64 * (1.0 + ratio) / std::f64::consts::LN_2 * 1.1).ceil() as u64 + 256
}

/// Per-trial generator: master seed, stream = trial index.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws θ from the measure with the given precision.
pub fn sample_theta(measure: &Measure, m: usize, n: usize, bits: u64, rng: &mut ChaCha8Rng) -> Result<MatrixTheta> {
    match measure.system()? {
        None => {
            let entries = (0..m).map(|_| (0..n).map(|_| random_dyadic(rng, bits)).collect()).collect();
            let tag = BigRational::new(BigInt::one(), BigInt::one() << bits as usize);
            Ok(MatrixTheta { entries, precision_tag: Some(tag) })
        }
        Some(sys) => {
            let depth = depth_for_bits(&sys, bits);
            Ok(ifs_sample(&sys, depth, rng)?.0)
        }
    }
}

pub fn thread_count(requested: Option<usize>) -> usize {
    std::env::var("DLX_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .or(requested)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Runs `job(trial)` for every trial on a dedicated pool, in trial order.
pub fn par_trials<T: Send>(trials: usize, threads: Option<usize>, job: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(threads))
        .build()
        .expect("thread pool");
    pool.install(|| (0..trials as u64).into_par_iter().map(&job).collect())
}

/// Validates the config and dispatches on its mode.
pub fn run(config: &RunConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    match config.mode {
        Mode::Dl | Mode::Fractal => dl::run_dl(config),
        Mode::Clt => clt::run_clt(config),
        Mode::Rate => clt::run_rate_fit(config),
        Mode::Correlation => correlation::run_correlation(config),
        Mode::Lemma51 => lemma51::run_lemma51(config),
    }
}
