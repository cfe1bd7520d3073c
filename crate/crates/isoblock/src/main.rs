use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use isoblock::csvio::{self, fmt17};
use isoblock::error::{Error, Result};
use isoblock::estimator;
use isoblock::experiments::{self, ExperimentConfig};
use isoblock::limit::{self, SupInfSettings};
use isoblock::minimax;
use isoblock::rates::{self, AlphaExp, RateReport, SmoothnessProfile};
use isoblock::testfn;

#[derive(Parser)]
#[command(
    name = "isoblock",
    version,
    about = "Max-min block estimation for multiple isotonic regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DesignArg {
    Lattice,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DriftArg {
    Dalpha,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the max-min block estimator on a CSV dataset (columns x_1..x_d,y).
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Query point, comma separated. Required unless --grid is set.
        #[arg(long)]
        x0: Option<String>,
        /// Fit at every design point of a lattice dataset.
        #[arg(long)]
        grid: bool,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rate calculus: effective dimension, rate exponent, constants.
    Rates {
        /// Smoothness exponents, e.g. `1,3,inf`.
        #[arg(long)]
        alpha: String,
        /// Lattice exponents, e.g. `1/2,1/2` (fractions keep ties exact).
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, value_enum, default_value = "lattice")]
        design: DesignArg,
        /// Smoothness profile JSON for the limit constant.
        #[arg(long)]
        derivs: Option<PathBuf>,
    },
    /// Monte Carlo draws of the sup-inf limit statistic.
    SimulateLimit {
        /// Exponents of the effective dimensions, e.g. `1,1` or `1,inf`.
        #[arg(long)]
        alpha: String,
        /// Effective dimension cutoff (1-based).
        #[arg(long, default_value_t = 1)]
        kappa: usize,
        #[arg(long, value_enum, default_value = "dalpha")]
        drift: DriftArg,
        /// Profile JSON; required for --drift full, optional otherwise.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long = "M", default_value_t = 1000)]
        draws: usize,
        #[arg(long, default_value_t = 8.0)]
        c: f64,
        #[arg(long, default_value_t = 2.0)]
        gamma_star: f64,
        #[arg(long, default_value_t = 48)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV of draws (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Slope-at-zero draws of the greatest convex minorant of B(t)+t².
    Chernoff {
        #[arg(long = "M", default_value_t = 1000)]
        draws: usize,
        #[arg(long = "T", default_value_t = 8.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Two-point minimax certificates along a sample-size ladder.
    Minimax {
        /// Profile JSON with a `function` field naming the base function.
        #[arg(long)]
        profile: PathBuf,
        #[arg(long = "n-list")]
        n_list: String,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replicated CDF/QQ/rate experiment driven by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "output-dir")]
        output_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn parse_x0(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad coordinate `{t}`")))
        })
        .collect()
}

fn out_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout()),
    })
}

fn write_draws(path: &Option<PathBuf>, draws: &[f64]) -> Result<()> {
    let mut w = out_writer(path)?;
    writeln!(w, "draw")?;
    for v in draws {
        writeln!(w, "{}", fmt17(*v))?;
    }
    Ok(())
}

/// Profile JSON plus the catalog id of its evaluator.
#[derive(Deserialize)]
struct ProfileSpec {
    #[serde(default)]
    function: Option<String>,
    #[serde(flatten)]
    profile: SmoothnessProfile,
}

fn load_profile(path: &PathBuf) -> Result<ProfileSpec> {
    let text = std::fs::read_to_string(path)?;
    let spec: ProfileSpec = serde_json::from_str(&text)?;
    spec.profile.validate()?;
    Ok(spec)
}

fn lattice_report(alpha: &[AlphaExp], beta_arg: &Option<String>) -> Result<RateReport> {
    let beta_str = beta_arg
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("lattice designs need --beta".into()))?;
    let tokens: Vec<&str> = beta_str.split(',').collect();
    if tokens.iter().all(|t| t.contains('/')) {
        let betas: Vec<rates::Rational> = tokens
            .iter()
            .map(|t| rates::parse_rational(t))
            .collect::<Result<_>>()?;
        rates::kappa_star_argmax_exact(alpha, &betas)
    } else {
        let betas: Vec<f64> = tokens
            .iter()
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad beta entry `{t}`")))
            })
            .collect::<Result<_>>()?;
        rates::kappa_star_argmax(alpha, &betas)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate {
            input,
            x0,
            grid,
            output,
        } => {
            let ds = csvio::read_dataset(File::open(&input)?)?;
            if grid {
                let fitted = estimator::fit_grid(&ds)?;
                let values = fitted.values_in_dataset_order();
                let rows: Vec<(Vec<f64>, f64)> = (0..ds.n())
                    .map(|i| (ds.point(i).to_vec(), values[i]))
                    .collect();
                csvio::write_fitted(ds.dim, &rows, out_writer(&output)?)?;
            } else {
                let x0 = parse_x0(
                    x0.as_deref()
                        .ok_or_else(|| Error::InvalidConfig("--x0 is required without --grid".into()))?,
                )?;
                let fit = estimator::max_min_estimate(&ds, &x0)?;
                csvio::write_fitted(ds.dim, &[(fit.query.clone(), fit.value)], out_writer(&output)?)?;
            }
            Ok(())
        }
        Command::Rates {
            alpha,
            beta,
            design,
            derivs,
        } => {
            let alpha = rates::parse_alpha(&alpha)?;
            let mut report = match design {
                DesignArg::Lattice => lattice_report(&alpha, &beta)?,
                DesignArg::Random => rates::rate_report_random(&alpha)?,
            };
            if let Some(path) = derivs {
                let spec = load_profile(&path)?;
                if spec.profile.alpha != alpha {
                    return Err(Error::InvalidConfig(
                        "profile exponents disagree with --alpha".into(),
                    ));
                }
                rates::attach_constant(&mut report, &spec.profile)?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::SimulateLimit {
            alpha,
            kappa,
            drift,
            profile,
            draws,
            c,
            gamma_star,
            m,
            seed,
            output,
        } => {
            let alpha = rates::parse_alpha(&alpha)?;
            let settings = SupInfSettings { c, gamma_star, m };
            let samples = match (drift, &profile) {
                (DriftArg::Full, Some(path)) => {
                    let spec = load_profile(path)?;
                    let report = rates::rate_report_random(&spec.profile.alpha)?;
                    let mut report = report;
                    report.kappa_star = kappa;
                    limit::sample_limit_distribution(&spec.profile, &report, draws, settings, seed)?
                }
                (DriftArg::Full, None) => {
                    return Err(Error::InvalidConfig("--drift full needs --profile".into()))
                }
                (DriftArg::Dalpha, _) => {
                    // Pivotal statistic with unit coefficients on the
                    // effective dimensions kappa..d.
                    if kappa < 1 || kappa > alpha.len() {
                        return Err(Error::InvalidConfig("kappa out of range".into()));
                    }
                    let mut smooth = Vec::new();
                    let mut caps = Vec::new();
                    for a in &alpha[kappa - 1..] {
                        match a.finite() {
                            Some(v) => smooth.push(v),
                            None => caps.push((0.5, 0.5)),
                        }
                    }
                    let mut cfg = limit::SupInfConfig::marginal(smooth, caps);
                    cfg.c = c;
                    cfg.gamma_star = gamma_star;
                    cfg.m = m;
                    limit::sample_sup_inf(&cfg, draws, seed)?
                }
            };
            write_draws(&output, &samples)
        }
        Command::Chernoff {
            draws,
            horizon,
            step,
            seed,
        } => {
            let samples = limit::chernoff_sample(draws, horizon, step, seed)?;
            write_draws(&None, &samples)
        }
        Command::Minimax {
            profile,
            n_list,
            sigma,
            tau,
            beta,
            seed,
        } => {
            let spec = load_profile(&profile)?;
            let fid = spec
                .function
                .ok_or_else(|| Error::InvalidConfig("profile JSON needs a `function` field".into()))?;
            let f = testfn::by_id(&fid)?;
            let ns: Vec<usize> = n_list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidConfig(format!("bad n `{t}`")))
                })
                .collect::<Result<_>>()?;
            let d = spec.profile.dim();
            let beta: Vec<f64> = match beta {
                Some(b) => b
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidConfig(format!("bad beta `{t}`")))
                    })
                    .collect::<Result<_>>()?,
                None => vec![1.0 / d as f64; d],
            };
            let report =
                minimax::certify_rate_optimality(&spec.profile, &f, &beta, &ns, sigma, tau, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Experiment { config, output_dir } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("bad experiment config: {e}")))?;
            cfg.resolve()?;
            let rows = experiments::run_cdf_experiment(&cfg)?;
            let fits = if cfg.lattice_sides.len() >= 3 {
                Some(experiments::rate_fit_from_rows(&cfg, &rows)?)
            } else {
                None
            };
            experiments::write_outputs(&output_dir, &cfg, &rows, fits.as_deref())?;
            Ok(())
        }
    }
}
