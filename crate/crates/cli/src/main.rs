mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use transonic::conjugation::PipelineConfig;
use transonic::illposedness::GrowthConfig;

use commands::{load_config, set, CkConfig, ClassifyConfig, FbiConfig, GevreyConfig, Outcome};
use error::CliError;
use output::{to_json_line, OutDir};

/// Caps the rayon worker pool.
const THREADS_ENV: &str = "TRANSONIC_THREADS";

#[derive(Parser)]
#[command(name = "transonic", version, about = "Type classification, FBI scans, series solves and growth experiments for 2D potential flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; flags given on the command line win over its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every node of an `x,T,u1,u2` field and trace the sonic line.
    Classify {
        field: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        c0: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Decay profiles of the FBI transform and an analyticity verdict at x0.
    Fbi {
        /// gaussian, lorentzian, abs, step or file:<path>.
        #[arg(long)]
        preset: Option<String>,
        /// Sampled datum with `x,f` rows.
        #[arg(long, conflicts_with = "preset")]
        file: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        /// Comma-separated directions.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Option<Vec<f64>>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        mu_max: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Series solve, conjugation fields, identity checks and decay fit.
    Pipeline {
        #[arg(long = "degree", short = 'N')]
        degree: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        #[arg(long = "t0", allow_hyphen_values = true)]
        t0: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Ratio sequences for Sobolev and Gevrey data norms.
    Growth {
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<u32>>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Power-series solution of the Cauchy problem from Taylor data.
    CkSolve {
        #[arg(long = "degree", short = 'N')]
        degree: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        #[arg(long = "t0", allow_hyphen_values = true)]
        t0: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Comma-separated Taylor coefficients of u1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u1: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u2: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Gevrey norm of a series on the initial line.
    GevreyNorm {
        /// Series JSON, or a ck-solve output.
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long)]
        component: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        center: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        beta_max: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(command: Command) -> Result<Outcome, CliError> {
    configure_threads()?;
    match command {
        Command::Classify {
            field,
            gamma,
            c0,
            tol,
            common,
        } => {
            let mut cfg: ClassifyConfig = load_config(common.config.as_deref())?;
            if field.is_some() {
                cfg.field = field;
            }
            set(&mut cfg.gamma, gamma);
            set(&mut cfg.c0, c0);
            set(&mut cfg.tol, tol);
            if common.seed.is_some() {
                cfg.seed = common.seed;
            }
            commands::classify(&cfg, &OutDir::create(&common.out)?)
        }
        Command::Fbi {
            preset,
            file,
            x0,
            xi,
            lambda,
            mu_max,
            common,
        } => {
            let mut cfg: FbiConfig = load_config(common.config.as_deref())?;
            set(&mut cfg.datum, preset);
            set(&mut cfg.datum, file.map(|p| format!("file:{}", p.display())));
            set(&mut cfg.x0, x0);
            set(&mut cfg.xi, xi);
            set(&mut cfg.lambda, lambda);
            set(&mut cfg.mu_max, mu_max);
            if common.seed.is_some() {
                cfg.seed = common.seed;
            }
            commands::fbi(&cfg, &OutDir::create(&common.out)?)
        }
        Command::Pipeline {
            degree,
            x0,
            t0,
            gamma,
            common,
        } => {
            let mut cfg: PipelineConfig = load_config(common.config.as_deref())?;
            set(&mut cfg.degree, degree);
            set(&mut cfg.x0, x0);
            set(&mut cfg.t0, t0);
            set(&mut cfg.gamma, gamma);
            if common.seed.is_some() {
                cfg.seed = common.seed;
            }
            commands::pipeline(&cfg, &OutDir::create(&common.out)?)
        }
        Command::Growth {
            k_list,
            horizon,
            alpha,
            s,
            sigma,
            common,
        } => {
            let mut cfg: GrowthConfig = load_config(common.config.as_deref())?;
            set(&mut cfg.k_list, k_list);
            set(&mut cfg.horizon, horizon);
            set(&mut cfg.alpha, alpha);
            set(&mut cfg.s, s);
            set(&mut cfg.sigma, sigma);
            if common.seed.is_some() {
                cfg.seed = common.seed;
            }
            commands::growth(&cfg, &OutDir::create(&common.out)?)
        }
        Command::CkSolve {
            degree,
            x0,
            t0,
            gamma,
            u1,
            u2,
            common,
        } => {
            let mut cfg: CkConfig = load_config(common.config.as_deref())?;
            set(&mut cfg.degree, degree);
            set(&mut cfg.x0, x0);
            set(&mut cfg.t0, t0);
            set(&mut cfg.gamma, gamma);
            set(&mut cfg.data_u1, u1);
            set(&mut cfg.data_u2, u2);
            if common.seed.is_some() {
                cfg.seed = common.seed;
            }
            commands::ck(&cfg, &OutDir::create(&common.out)?)
        }
        Command::GevreyNorm {
            series,
            component,
            center,
            radius,
            sigma,
            c,
            beta_max,
            common,
        } => {
            let mut cfg: GevreyConfig = load_config(common.config.as_deref())?;
            if series.is_some() {
                cfg.series = series;
            }
            set(&mut cfg.component, component);
            if center.is_some() {
                cfg.center = center;
            }
            set(&mut cfg.radius, radius);
            set(&mut cfg.sigma, sigma);
            set(&mut cfg.c, c);
            set(&mut cfg.beta_max, beta_max);
            if common.seed.is_some() {
                cfg.seed = common.seed;
            }
            commands::gevrey(&cfg, &OutDir::create(&common.out)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.kind().to_string() + ": " + e.render().to_string().trim());
            eprintln!("{}", to_json_line(&err.diagnostic()));
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.inconclusive {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{}", to_json_line(&e.diagnostic()));
            ExitCode::from(1)
        }
    }
}
