use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dlx_core::best_approx::{enumerate_best, MatrixTheta};
use dlx_core::cf::{approx_coefficient, cf_expand, convergents};
use dlx_core::experiments::correlation::CorrelationConfig;
use dlx_core::experiments::{self, Measure, Mode, RunConfig};
use dlx_core::io::{load_config, write_run, Format};
use dlx_core::norms::NormSpec;
use dlx_core::observable::Observable;
use dlx_core::rational::{format_rational, parse_rational, rational_to_f64};
use dlx_core::reference::{nu_cdf, nu_density, nu_functional};
use dlx_core::Error;

#[derive(Parser)]
#[command(name = "dlx", version, about = "Continued-fraction and best-approximation statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continued fraction, convergents and approximation coefficients of θ.
    Cf {
        /// Rational `p/q` or a decimal.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, default_value_t = 40)]
        terms: usize,
    },
    /// Best approximations of an m×n matrix with ‖q‖ < e^T.
    Best {
        /// Row-major entries, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 5.0)]
        t: f64,
    },
    /// Running averages over the first N best approximations.
    Dl(ExperimentArgs),
    /// Fluctuations of the windowed sums around γT.
    Clt(ExperimentArgs),
    /// Same as `dl` with θ drawn from a self-similar measure.
    Fractal(ExperimentArgs),
    /// Quantile slope of the error growth.
    Rate(ExperimentArgs),
    /// Correlation decay along expanding horocycles.
    Corr(ExperimentArgs),
    /// Window-by-window best-approximation / lattice correspondence.
    Lemma51(ExperimentArgs),
    /// Density and CDF table of the limiting law.
    Nu {
        #[arg(long, default_value_t = 10)]
        grid: usize,
    },
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory for records, summary and manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Number of best approximations (`dl`, `fractal`).
    #[arg(long = "n-horizon")]
    n_horizon: Option<usize>,
    /// Number of unit windows (`clt`, `rate`, `lemma51`).
    #[arg(long = "t-horizon")]
    t_horizon: Option<usize>,
    /// Observable name (`coefficient`, `signed-coefficient`) or JSON.
    #[arg(long)]
    observable: Option<String>,
    /// `lebesgue`, `cantor` or an IFS as JSON.
    #[arg(long)]
    measure: Option<String>,
    /// Number of flowed factors for `corr`.
    #[arg(long)]
    r: Option<usize>,
    /// Monte Carlo samples per grid point for `corr`.
    #[arg(long)]
    samples: Option<usize>,
    /// Fill `wall_ms` in records.
    #[arg(long)]
    timing: bool,
}

/// Distinguishes configuration problems (exit 2) from runtime ones (exit 1).
enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Config(msg),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn parse_observable(s: &str) -> Result<Observable, Failure> {
    let json = if s.trim_start().starts_with('{') { s.to_string() } else { format!("{{\"id\":\"{s}\"}}") };
    serde_json::from_str(&json).map_err(|e| Failure::Config(format!("--observable: {e}")))
}

fn parse_measure(s: &str) -> Result<Measure, Failure> {
    let json = match s {
        "lebesgue" => "\"lebesgue\"".to_string(),
        "cantor" => "{\"ifs\":\"cantor\"}".to_string(),
        other => format!("{{\"ifs\":{other}}}"),
    };
    serde_json::from_str(&json).map_err(|e| Failure::Config(format!("--measure: {e}")))
}

fn build_config(mode: Mode, a: &ExperimentArgs) -> Result<RunConfig, Failure> {
    let mut c = match &a.config {
        Some(path) => {
            let c = load_config(path)?;
            if c.mode != mode {
                return Err(Failure::Config(format!("config mode {:?} does not match the subcommand", c.mode)));
            }
            c
        }
        None => RunConfig::new(mode),
    };
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.threads {
        c.threads = Some(v);
    }
    if let Some(v) = a.trials {
        c.trials = v;
    }
    if let Some(v) = a.m {
        c.m = v;
    }
    if let Some(v) = a.n {
        c.n = v;
    }
    if a.m.is_some() || a.n.is_some() {
        c.norms = Some((NormSpec::sup(c.m), NormSpec::sup(c.n)));
    }
    if let Some(v) = a.n_horizon {
        c.n_horizon = Some(v);
    }
    if let Some(v) = a.t_horizon {
        c.t_horizon = Some(v);
    }
    if let Some(s) = &a.observable {
        c.observable = parse_observable(s)?;
    }
    if let Some(s) = &a.measure {
        c.measure = parse_measure(s)?;
    }
    if a.r.is_some() || a.samples.is_some() {
        let mut cc = c.correlation.clone().unwrap_or_default();
        cc.r = a.r.unwrap_or(cc.r);
        cc.samples = a.samples.unwrap_or(cc.samples);
        c.correlation = Some(cc);
    } else if mode == Mode::Correlation && c.correlation.is_none() {
        c.correlation = Some(CorrelationConfig::default());
    }
    if a.timing {
        c.timing = true;
    }
    if let Some(out) = &a.out {
        c.output = Some(out.display().to_string());
    }
    match (mode, c.n_horizon, c.t_horizon) {
        (Mode::Dl | Mode::Fractal, None, _) => c.n_horizon = Some(1000),
        (Mode::Clt | Mode::Rate, _, None) => c.t_horizon = Some(1000),
        (Mode::Lemma51, _, None) => c.t_horizon = Some(8),
        _ => {}
    }
    if mode == Mode::Clt && a.trials.is_none() && a.config.is_none() {
        c.trials = 100;
    }
    c.validate()?;
    Ok(c)
}

fn run_experiment(mode: Mode, a: &ExperimentArgs) -> Result<(), Failure> {
    let format: Format = a.format.parse()?;
    let config = build_config(mode, a)?;
    let started = dlx_core::io::now();
    let output = experiments::run(&config)?;
    println!("{}", serde_json::to_string_pretty(&output.summary).context("summary")?);
    if let Some(dir) = &a.out {
        let manifest = write_run(dir, &config, &output, format, started)?;
        log::info!("wrote {}", manifest.display());
    }
    Ok(())
}

fn run_cf(theta: &str, terms: usize) -> Result<(), Failure> {
    let x = parse_rational(theta).map_err(|e| Failure::Config(e.to_string()))?;
    let cf = cf_expand(&x, terms);
    let quotients: Vec<String> =
        std::iter::once(&cf.a0).chain(&cf.partial_quotients).map(|a| a.to_string()).collect();
    println!("theta = {}", format_rational(&x));
    println!("quotients = {}", quotients.join(","));
    println!("k\tp_k\tq_k\tcoefficient");
    for (k, (p, q)) in convergents(&cf).pairs.iter().enumerate() {
        let c = rational_to_f64(&approx_coefficient(&x, p, q));
        println!("{k}\t{p}\t{q}\t{c:.12}");
    }
    Ok(())
}

fn run_best(theta: &str, m: usize, n: usize, t: f64) -> Result<(), Failure> {
    let vals = theta
        .split(',')
        .map(|s| parse_rational(s.trim()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Config(e.to_string()))?;
    if vals.len() != m * n {
        return Err(Failure::Config(format!("expected {} entries for a {m}×{n} matrix, got {}", m * n, vals.len())));
    }
    let entries = vals.chunks(n).map(|r| r.to_vec()).collect();
    let theta = MatrixTheta::new(entries, None).map_err(|e| Failure::Config(e.to_string()))?;
    let seq = enumerate_best(&theta, t, &(NormSpec::sup(m), NormSpec::sup(n)))?;
    println!("p\tq\tresidual_norm\tq_norm\tz");
    for b in &seq.items {
        let join = |v: &[num_bigint::BigInt]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        println!("{}\t{}\t{:.6e}\t{}\t{:.9}", join(&b.p), join(&b.q), b.rnorm, b.qnorm, b.phi().0);
    }
    Ok(())
}

fn run_nu(grid: usize) -> Result<(), Failure> {
    if grid == 0 {
        return Err(Failure::Config("--grid must be positive".into()));
    }
    println!("z\tdensity\tcdf");
    for i in 0..=grid {
        let z = i as f64 / grid as f64;
        println!("{z:.4}\t{:.10}\t{:.10}", nu_density(z), nu_cdf(z));
    }
    println!("# mean = {:.12}", nu_functional(|z| z));
    println!("# second moment = {:.12}", nu_functional(|z| z * z));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Cf { theta, terms } => run_cf(theta, *terms),
        Command::Best { theta, m, n, t } => run_best(theta, *m, *n, *t),
        Command::Dl(a) => run_experiment(Mode::Dl, a),
        Command::Clt(a) => run_experiment(Mode::Clt, a),
        Command::Fractal(a) => run_experiment(Mode::Fractal, a),
        Command::Rate(a) => run_experiment(Mode::Rate, a),
        Command::Corr(a) => run_experiment(Mode::Correlation, a),
        Command::Lemma51(a) => run_experiment(Mode::Lemma51, a),
        Command::Nu { grid } => run_nu(*grid),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
