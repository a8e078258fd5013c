use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use blocksim_cli::{
    bench_ghz, bench_rows_to_csv, simulate_file, verify_file, verify_random, CliError,
    OutputFormat, OutputMode, SimulateOptions, EXIT_FAILURE,
};
use blocksim_core::state::Backend;

#[derive(Parser)]
#[command(
    name = "blocksim",
    about = "Block-wise statevector simulator for mixed-dimensional qudit circuits",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a circuit file and print the resulting amplitudes or probabilities
    Simulate {
        /// Circuit file in the text format (see the README)
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = BackendArg::Sparse)]
        backend: BackendArg,
        /// Sparse prune threshold
        #[arg(long, default_value_t = blocksim_core::state::DEFAULT_SPARSE_THRESHOLD)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = OutputArg::Amplitudes)]
        output: OutputArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
    /// Cross-check a circuit (or a seeded random batch) against the
    /// tensor-product reference
    Verify {
        /// Circuit file; omit when using --random
        file: Option<PathBuf>,
        /// seed:count, e.g. 42:200
        #[arg(long, value_name = "SEED:COUNT", conflicts_with = "file")]
        random: Option<String>,
        /// Largest total dimension the reference will materialize
        #[arg(long, default_value_t = blocksim_oracle::DEFAULT_ORACLE_CAP)]
        cap: u64,
    },
    /// Scaling benchmarks, CSV on stdout
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// GHZ ladders of one dimension over a range of register sizes
    Ghz(BenchGhzArgs),
}

#[derive(Args)]
struct BenchGhzArgs {
    /// Qudit dimension d
    #[arg(long)]
    dim: usize,
    /// Smallest register size n
    #[arg(long)]
    min: usize,
    /// Largest register size n
    #[arg(long)]
    max: usize,
    /// Executions per size; the median is reported
    #[arg(long, default_value_t = 100)]
    repeat: usize,
    #[arg(long, value_enum, default_value_t = BackendArg::Sparse)]
    backend: BackendArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Dense,
    Sparse,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Dense => Backend::Dense,
            BackendArg::Sparse => Backend::Sparse,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputArg {
    Amplitudes,
    Probabilities,
}

impl From<OutputArg> for OutputMode {
    fn from(o: OutputArg) -> Self {
        match o {
            OutputArg::Amplitudes => OutputMode::Amplitudes,
            OutputArg::Probabilities => OutputMode::Probabilities,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Text,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Text => OutputFormat::Text,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate {
            file,
            backend,
            threshold,
            output,
            format,
        } => {
            let report = simulate_file(
                &file,
                SimulateOptions {
                    backend: backend.into(),
                    threshold,
                    output: output.into(),
                    format: format.into(),
                },
            )?;
            print!("{}", ensure_trailing_newline(report.render(format.into())));
            Ok(0)
        }
        Command::Verify { file, random, cap } => {
            let report = match (file, random) {
                (Some(path), None) => verify_file(&path, cap)?,
                (None, Some(spec)) => {
                    let (seed, count) = parse_seed_count(&spec)?;
                    verify_random(seed, count, cap)?
                }
                _ => {
                    eprintln!("error: verify needs a circuit file or --random SEED:COUNT");
                    return Ok(EXIT_FAILURE);
                }
            };
            print!("{}", report.to_text());
            Ok(if report.all_pass() { 0 } else { EXIT_FAILURE })
        }
        Command::Bench {
            which: BenchCommand::Ghz(args),
        } => {
            let rows = bench_ghz(
                args.dim,
                args.min,
                args.max,
                args.repeat,
                args.backend.into(),
            )?;
            print!("{}", bench_rows_to_csv(&rows));
            Ok(0)
        }
    }
}

fn parse_seed_count(spec: &str) -> Result<(u64, u64), CliError> {
    let parsed = spec
        .split_once(':')
        .and_then(|(seed, count)| Some((seed.parse::<u64>().ok()?, count.parse::<u64>().ok()?)));
    parsed.ok_or_else(|| {
        CliError::Parse(blocksim_core::format::ParseError::Syntax {
            line: 0,
            col: 0,
            message: format!("--random expects SEED:COUNT, got `{spec}`"),
        })
    })
}

fn ensure_trailing_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}
