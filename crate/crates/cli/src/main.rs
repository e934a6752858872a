use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use degobs::config::{Experiment, ExperimentConfig};
use degobs::{error_line, exit_code, Command};
use degobs_core::spectral::DEFAULT_ALPHA_CAP;
use degobs_core::Result;

#[derive(Parser, Debug)]
#[command(name = "degobs", version, about = "Spectra, observability and null-control experiments for -(x^a u')'")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Comma-separated exponents; `auto` selects the experiment grid.
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Number of eigenpairs.
    #[arg(long, global = true)]
    n_max: Option<String>,
    /// Comma-separated time horizons.
    #[arg(long, global = true)]
    horizon: Option<String>,
    /// Observation window `a,b` inside (0, 1).
    #[arg(long, global = true)]
    window: Option<String>,
    /// Time set `t0,t1;t2,t3` for the heat experiment.
    #[arg(long, global = true, allow_hyphen_values = true)]
    measurable_set: Option<String>,
    /// Working precision in bits.
    #[arg(long, global = true)]
    bits: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Random samples per grid cell.
    #[arg(long, global = true)]
    samples: Option<String>,
    /// Eigensolver: bessel or fem.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Largest accepted exponent (default 1.95); larger values lose accuracy.
    #[arg(long, global = true)]
    alpha_cap: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Configuration file in `key = value` form; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Eigenpairs, first eigenvalue bracket and spectral gaps.
    Eig,
    /// Window Gram matrices and eigenfunction masses.
    Gram,
    /// Growth of the observability constant with the spectral cut.
    Specineq,
    /// Interpolation constants for the elliptic evolution.
    Interp,
    /// Moment-method null controls and their cost.
    Control,
    /// Measurable-time-set observability of the heat flow.
    HeatObs,
    /// Every experiment with its default grid, plus a summary.
    All,
}

impl Sub {
    fn command(self) -> Command {
        match self {
            Sub::Eig => Command::One(Experiment::Eig),
            Sub::Gram => Command::One(Experiment::Gram),
            Sub::Specineq => Command::One(Experiment::Specineq),
            Sub::Interp => Command::One(Experiment::Interp),
            Sub::Control => Command::One(Experiment::Control),
            Sub::HeatObs => Command::One(Experiment::HeatObs),
            Sub::All => Command::All,
        }
    }
}

fn configuration(cli: &Cli) -> Result<ExperimentConfig> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| degobs_core::Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let mut flags = ExperimentConfig::default();
    let pairs = [
        ("alpha", &cli.alpha),
        ("n_max", &cli.n_max),
        ("horizon", &cli.horizon),
        ("window", &cli.window),
        ("measurable_set", &cli.measurable_set),
        ("bits", &cli.bits),
        ("seed", &cli.seed),
        ("samples", &cli.samples),
        ("method", &cli.method),
        ("alpha_cap", &cli.alpha_cap),
        ("out", &cli.out),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            flags.set(key, v)?;
        }
    }
    let cfg = base.merged(&flags);
    if let Some(cap) = cfg.alpha_cap.filter(|c| *c > DEFAULT_ALPHA_CAP) {
        eprintln!("warning: alpha cap raised to {cap}; eigenpairs near alpha = 2 lose accuracy");
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.command();
    let result = configuration(&cli).and_then(|cfg| {
        if cli.print_config {
            print!("# config {}\n{}", cfg.hash(command.name()), cfg.render());
            return Ok(());
        }
        for path in degobs::run(command, &cfg)? {
            println!("{}", path.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
