//! `heavytail`: runs one experiment descriptor and writes its report.

mod descriptor;
mod examples;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use descriptor::{Descriptor, Kind};

#[derive(Debug)]
pub enum CliError {
    /// Bad descriptor or input data: exit code 2.
    Validation(String),
    /// The numerics failed: exit code 3.
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<heavytail::Error> for CliError {
    fn from(e: heavytail::Error) -> Self {
        if e.is_user_error() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "heavytail", version, about = "Diversification experiments for infinite-mean losses")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Override the descriptor's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of Monte Carlo draws.
    #[arg(long = "n-mc", global = true)]
    n_mc: Option<usize>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path; `-` or no path writes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format: `csv` or `json`.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Diversified against concentrated exceedance probabilities.
    Dominance { descriptor: PathBuf },
    /// The same comparison for truncated losses, with VaR levels.
    Truncated { descriptor: PathBuf },
    /// Randomly counted and weighted claims.
    Collective { descriptor: PathBuf },
    /// Concentrated-position optimizer.
    Portfolio { descriptor: PathBuf },
    /// VaR of a sum against the sum of VaRs.
    Superadd { descriptor: PathBuf },
    /// Internal, external, or finite-mean ES market equilibria.
    Equilibrium { descriptor: PathBuf },
    /// Hill tail-index estimates.
    Hill { descriptor: PathBuf },
    /// Comonotonic against independent sums of two data sets.
    Empirical { descriptor: PathBuf },
    /// Print an example descriptor.
    Example {
        #[arg(value_enum)]
        kind: Kind,
    },
    /// Print the JSON schema of a descriptor kind.
    Schema {
        #[arg(value_enum)]
        kind: Kind,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("heavytail: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    if let Some(t) = g.threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let (sub, path) = match cli.command {
        Command::Example { kind } => {
            println!("{}", serde_json::to_string_pretty(&examples::example(kind)).expect("json"));
            return Ok(());
        }
        Command::Schema { kind } => {
            println!("{}", examples::schema(kind));
            return Ok(());
        }
        Command::Dominance { descriptor } => ("dominance", descriptor),
        Command::Truncated { descriptor } => ("truncated", descriptor),
        Command::Collective { descriptor } => ("collective", descriptor),
        Command::Portfolio { descriptor } => ("portfolio", descriptor),
        Command::Superadd { descriptor } => ("superadd", descriptor),
        Command::Equilibrium { descriptor } => ("equilibrium", descriptor),
        Command::Hill { descriptor } => ("hill", descriptor),
        Command::Empirical { descriptor } => ("empirical", descriptor),
    };
    let mut d = Descriptor::from_path(&path)?;
    if d.kind.subcommand() != sub {
        return Err(CliError::Validation(format!(
            "descriptor kind `{}` belongs to the `{}` subcommand, not `{sub}`",
            d.kind.as_str(),
            d.kind.subcommand()
        )));
    }
    if let Some(s) = g.seed {
        d.seed = s;
    }
    if let Some(n) = g.n_mc {
        d.n_mc = Some(n);
    }
    let format = g.format.or(d.format.clone());
    if let Some(f) = &format {
        if f != "csv" && f != "json" {
            return Err(CliError::Validation(format!("unknown format `{f}`; use csv or json")));
        }
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let artifact = run::run(&d, &base)?;
    let bytes = match (format.as_deref(), artifact.csv) {
        (Some("json"), _) | (None, None) => {
            let mut s = serde_json::to_string_pretty(&artifact.json).expect("json");
            s.push('\n');
            s.into_bytes()
        }
        (_, Some(csv)) => csv,
        (Some(_), None) => {
            return Err(CliError::Validation(format!(
                "kind `{}` has no CSV report; use json",
                d.kind.as_str()
            )))
        }
    };
    match g.out.or(d.output.clone()) {
        Some(p) if p.as_os_str() != "-" => std::fs::write(&p, bytes)?,
        _ => std::io::stdout().write_all(&bytes)?,
    }
    eprintln!("{}", artifact.summary);
    Ok(())
}
