mod commands;
mod context;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::context::{CliError, Context};

#[derive(Parser, Debug)]
#[command(name = "hpadic", version, about = "Horizontal p-adic L-functions of elliptic curves at finite level")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Curve catalog CSV (defaults to the bundled catalog)
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Directory for symbol and coefficient caches
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Working precision in bits for period integrals
    #[arg(long, global = true, default_value_t = hpadic::modsym::DEFAULT_PRECISION,
          value_parser = clap::value_parser!(u32).range(64..))]
    pub precision: u32,
    /// Denominator bound for rational reconstruction
    #[arg(long, global = true, default_value_t = hpadic::modsym::DEFAULT_QMAX,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub qmax: u64,
    /// Bound X for sieves, censuses, searches and symbol tables (per-command default)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub bound: Option<u64>,
    #[arg(long, global = true, default_value_t = 20240601)]
    pub seed: u64,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Table of ⟨a/q⟩± for every q up to the bound coprime to N
    Symbols {
        #[arg(long)]
        label: String,
    },
    /// Theta element over (Z/L)^× for squarefree L = ∏ primes
    Theta {
        #[arg(long)]
        label: String,
        #[arg(long, value_delimiter = ',', required = true)]
        primes: Vec<u64>,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        sign: i64,
    },
    /// Finite truncation ν_A with exceptional and Taylor–Wiles coordinates
    Nu {
        #[arg(long)]
        label: String,
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',')]
        exceptional: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        tail: Vec<u64>,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        sign: i64,
        /// Tabulate ν(χ) and v_p(ν(χ)) for every character
        #[arg(long)]
        evaluate_all: bool,
    },
    /// Taylor–Wiles primes ℓ ≤ X (joint over several labels)
    TwSieve {
        #[arg(long, value_delimiter = ',', required = true)]
        labels: Vec<String>,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        m: u32,
    },
    /// Kato primes q ≤ X
    KatoSieve {
        #[arg(long)]
        label: String,
        #[arg(long)]
        p: u64,
    },
    /// Count primitive characters of order d with conductor ≤ X
    Census {
        #[arg(long)]
        d: u64,
        /// Only conductors supported on these primes
        #[arg(long, value_delimiter = ',')]
        restrict: Option<Vec<u64>>,
    },
    /// Kurihara numbers: a given Q, or a search over Kato primes ≤ X
    Kurihara {
        #[arg(long)]
        label: String,
        #[arg(long)]
        p: u64,
        /// Kato primes q_1, …, q_r; omitted means search
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        generators: Option<Vec<u64>>,
        #[arg(long, default_value_t = 1)]
        r_max: usize,
        /// Also check the derivative congruence with this Taylor–Wiles tail
        #[arg(long, value_delimiter = ',')]
        tail: Option<Vec<u64>>,
        /// Also find a character attaining the valuation bound
        #[arg(long)]
        kolyvagin: bool,
    },
    /// Run a verification suite; exit 1 on any failure
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Number of random measures (measures suite)
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// Perturb one coefficient per measure after evaluation (measures suite)
    #[arg(long)]
    pub corrupt: bool,
    /// Curves to use (default: first 10 for normrel, first 3 for interp, all for kurihara)
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// A saved `nu` report to re-verify (interp suite)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Bound for the growth-exponent fits (census suite)
    #[arg(long, default_value_t = 1_000_000)]
    pub fit_bound: u64,
    /// Count growth-exponent fits outside tolerance as failures (census suite)
    #[arg(long)]
    pub strict_fit: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Measures,
    Normrel,
    Interp,
    Kurihara,
    Census,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    let ctx = Context::new(cli.global.clone())?;
    let out = match &cli.command {
        Command::Symbols { label } => commands::symbols(&ctx, label)?,
        Command::Theta { label, primes, sign } => commands::theta(&ctx, label, primes, *sign)?,
        Command::Nu { label, p, exceptional, tail, sign, evaluate_all } => {
            commands::nu(&ctx, label, *p, exceptional, tail, *sign, *evaluate_all)?
        }
        Command::TwSieve { labels, p, m } => commands::tw_sieve(&ctx, labels, *p, *m)?,
        Command::KatoSieve { label, p } => commands::kato_sieve(&ctx, label, *p)?,
        Command::Census { d, restrict } => commands::census(&ctx, *d, restrict.as_deref())?,
        Command::Kurihara { label, p, q, generators, r_max, tail, kolyvagin } => commands::kurihara(
            &ctx,
            label,
            *p,
            q.as_deref(),
            generators.as_deref(),
            *r_max,
            tail.as_deref(),
            *kolyvagin,
        )?,
        Command::Verify(args) => {
            let (out, ok) = verify::run(&ctx, args)?;
            ctx.emit(&out);
            return if ok { Ok(()) } else { Err(CliError::verification("verification failed")) };
        }
    };
    ctx.emit(&out);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
