use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use parahyper::catalog::{load_builtin, load_user, RunSettings, Suite};
use parahyper::smooth::{FdScheme, StencilOrder};
use parahyper::Error;
use parahyper_cli::{list_text, run, run_entries, CliError, Format, RunConfig, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "parahyper", version, about = "Numerical verification of para-hyperhermitian and mixed 3-structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run check suites on catalog entries.
    Verify(VerifyArgs),
    /// List catalog entries.
    List,
    /// Validate a user case file and run its suites.
    Load {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Glob on entry ids; may be repeated.
    #[arg(long = "case")]
    cases: Vec<String>,
    /// Suite to run; may be repeated.
    #[arg(long = "suite")]
    suites: Vec<String>,
    #[arg(long)]
    fd_step: Option<f64>,
    /// Step for derivatives of finite-difference results; defaults to ten times --fd-step.
    #[arg(long)]
    fd_nested_step: Option<f64>,
    #[arg(long, value_parser = ["2", "4"])]
    fd_order: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, env = "PARAHYPER_SEED")]
    seed: Option<u64>,
    /// Tolerance override NAME=X; may be repeated.
    #[arg(long = "tol")]
    tols: Vec<String>,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config_from(args: &VerifyArgs) -> Result<RunConfig, CliError> {
    let invalid = |e: Error| CliError::InvalidConfig(e.to_string());
    let mut settings = RunSettings::default();
    settings.plan.seed = args.seed.unwrap_or(DEFAULT_SEED);
    if let Some(n) = args.samples {
        settings.plan.count = n;
    }
    let order = match &args.fd_order {
        Some(o) => StencilOrder::from_order(o.parse().expect("validated by clap")).map_err(invalid)?,
        None => settings.scheme.order,
    };
    let mut scheme = match args.fd_step {
        Some(step) => FdScheme::with_step(step, order).map_err(invalid)?,
        None => FdScheme { order, ..settings.scheme },
    };
    if let Some(n) = args.fd_nested_step {
        scheme.nested_step = n;
    }
    settings.scheme = scheme;
    for t in &args.tols {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| CliError::InvalidConfig(format!("--tol expects NAME=X, got `{t}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::InvalidConfig(format!("--tol {name}: `{value}` is not a number")))?;
        settings.tol.set(name, value).map_err(invalid)?;
    }
    let suites = args
        .suites
        .iter()
        .map(|s| s.parse::<Suite>().map_err(invalid))
        .collect::<Result<Vec<_>, _>>()?;
    let config = RunConfig {
        cases: args.cases.clone(),
        suites,
        settings,
        jobs: args.jobs,
    };
    config.validate()?;
    Ok(config)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn format_of(f: FormatArg) -> Format {
    match f {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
    }
}

fn render(outcome: &parahyper_cli::RunOutcome, format: Format) -> String {
    match format {
        Format::Text => outcome.to_text(),
        Format::Json => outcome.to_json(),
    }
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Verify(args) => {
            let config = config_from(&args)?;
            let outcome = run(&config)?;
            emit(&render(&outcome, format_of(args.format)), args.out.as_ref())?;
            Ok(outcome.exit_code())
        }
        Command::List => {
            print!("{}", list_text(&load_builtin(&RunSettings::default())?));
            Ok(0)
        }
        Command::Load { path, format } => {
            let entry = match load_user(&path) {
                Ok(e) => e,
                Err(Error::ValidationFailed { axiom, residual }) => {
                    eprintln!("{}: fails `{axiom}` (residual {residual:e})", path.display());
                    return Ok(1);
                }
                Err(e) => return Err(e.into()),
            };
            let config = RunConfig::default();
            let outcome = run_entries(std::slice::from_ref(&entry), &config)?;
            print!("{}", render(&outcome, format_of(format)));
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::EXIT_CODE as u8)
        }
    }
}
