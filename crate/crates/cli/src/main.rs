//! Command-line front end for the modular-reduction models.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error, 3 calibration
//! required.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "modred", version, about = "Large-number modular reduction: datapath models, comparison tables, and design-space exploration")]
struct Cli {
    /// Storage block capacity in bits (drives the table input width).
    #[arg(long, global = true, default_value_t = 36864)]
    capacity_bits: u64,

    /// Cost table CSV overriding the built-in calibrated areas.
    #[arg(long, global = true)]
    cost_table: Option<PathBuf>,

    /// Output format for structured results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output path (`tables`, `calibrate`) or path prefix (`explore`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Lut,
    Iter,
    Hybrid,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    /// Datapath to run.
    #[arg(long, value_enum)]
    method: Method,

    /// Modulus width in bits; the operand is 2n bits.
    #[arg(long)]
    n: u32,

    /// Operand, hex, up to 2n bits.
    #[arg(long = "A")]
    a: String,

    /// Modulus, hex, exactly n bits (most significant bit set).
    #[arg(long = "M")]
    m: String,

    /// Table input width override (defaults to the capacity-derived value).
    #[arg(long)]
    k: Option<u32>,

    /// Hybrid split point override (defaults to the balanced split).
    #[arg(long = "m")]
    split_m: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce one operand and print the residue.
    Reduce {
        #[command(flatten)]
        args: ReduceArgs,
        /// Also print the cycle-annotated event trace.
        #[arg(long)]
        trace: bool,
    },
    /// Reduce one operand and print its full event trace.
    Trace {
        #[command(flatten)]
        args: ReduceArgs,
    },
    /// Reproduce the three-method comparison table with reference diffs.
    Tables,
    /// Enumerate feasible design points and extract the Pareto frontier.
    Explore {
        /// Modulus width in bits.
        #[arg(long)]
        n: u32,
        /// Table input width override.
        #[arg(long)]
        k: Option<u32>,
        /// Throughput in Ops/cycle, e.g. `0.5` or `1/4`.
        #[arg(long, default_value = "0.5")]
        tp: String,
        /// Core-latency cap in cycles.
        #[arg(long)]
        latency_req: Option<u64>,
        /// Area cap in LUT-equivalents.
        #[arg(long)]
        area_req: Option<u64>,
        /// Comma-separated throughput list for a frontier sweep, e.g.
        /// `1/16,1/8,1/4,1/2`.
        #[arg(long)]
        tp_sweep: Option<String>,
    },
    /// Fit per-width unit areas from reference efficiencies.
    Calibrate {
        /// Reference rows CSV (defaults to the bundled data).
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(modred::Error::CalibrationRequired { .. }) = cause.downcast_ref() {
            return 3;
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = commands::Context {
        capacity_bits: cli.capacity_bits,
        cost_table: cli.cost_table,
        json: cli.format == Format::Json,
        out: cli.out,
    };
    match cli.command {
        Command::Reduce { args, trace } => commands::reduce::run(&ctx, &args, trace),
        Command::Trace { args } => commands::reduce::run(&ctx, &args, true),
        Command::Tables => commands::tables::run(&ctx),
        Command::Explore {
            n,
            k,
            tp,
            latency_req,
            area_req,
            tp_sweep,
        } => commands::explore::run(&ctx, n, k, &tp, latency_req, area_req, tp_sweep.as_deref()),
        Command::Calibrate { data } => commands::calibrate::run(&ctx, data.as_deref()),
    }
}
