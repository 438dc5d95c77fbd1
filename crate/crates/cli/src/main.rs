mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spg_core::analysis::SweepParameter;
use spg_core::extensions::{default_epsilon, TwoMarketScenario};
use spg_core::{Error, ErrorClass, Rational, Result};

use commands::{parse_value, Report};
use render::Format;

/// Subgame-perfect equilibria of supply chains on series-parallel networks.
#[derive(Debug, Parser)]
#[command(name = "spgeq", version)]
struct Cli {
    /// Report format.
    #[arg(
        long,
        global = true,
        value_enum,
        default_value = "table",
        env = "SPGEQ_FORMAT"
    )]
    format: Format,
    /// Render rationals as 12-significant-digit decimals.
    #[arg(long, global = true)]
    decimal: bool,
    /// Write the report to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a network document and report its structure.
    Validate { input: PathBuf },
    /// Equilibrium flows, throughputs and prices.
    Solve { input: PathBuf },
    /// Utilities, welfare, λ and the double-utility bounds.
    Analyze { input: PathBuf },
    /// Exchange the two halves of a series composition and compare invariants.
    Swap {
        input: PathBuf,
        /// The node joining the two halves.
        #[arg(long)]
        at: String,
    },
    /// Re-solve over a range of demand intercepts or costs.
    Sweep {
        input: PathBuf,
        #[arg(long, value_enum)]
        parameter: Parameter,
        #[arg(long, value_parser = parse_value)]
        from: Rational,
        #[arg(long, value_parser = parse_value)]
        to: Rational,
        #[arg(long, value_parser = parse_value)]
        step: Rational,
    },
    /// Run the property suite on random networks.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Largest node count.
        #[arg(long, default_value_t = 12)]
        budget: usize,
    },
    /// High and low price strategies of `s -> v -> {t1, t2}`.
    TwoMarket {
        #[arg(long, value_parser = parse_value)]
        cost: Rational,
        #[arg(long, value_parser = parse_value)]
        a1: Rational,
        #[arg(long, value_parser = parse_value)]
        b1: Rational,
        #[arg(long, value_parser = parse_value)]
        a2: Rational,
        #[arg(long, value_parser = parse_value)]
        b2: Rational,
        /// Vary a1, as `a1=lo:hi:step`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Worked examples outside the series-parallel case.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
}

#[derive(Debug, Subcommand)]
enum Demo {
    /// Undercutting between two sources never settles.
    Msspg {
        #[arg(long, value_parser = parse_value, default_value = "3/2")]
        start: Rational,
        #[arg(long, value_parser = parse_value)]
        epsilon: Option<Rational>,
        #[arg(long, default_value_t = 20)]
        rounds: usize,
    },
    /// The non-series-parallel example solved by cases.
    Dag,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Parameter {
    Demand,
    Cost,
}

fn run(command: &Command) -> Result<Report> {
    match command {
        Command::Validate { input } => commands::validate(&commands::load(input)?),
        Command::Solve { input } => commands::solve_network(&commands::load(input)?),
        Command::Analyze { input } => commands::analyze_network(&commands::load(input)?),
        Command::Swap { input, at } => commands::swap(&commands::load(input)?, at),
        Command::Sweep {
            input,
            parameter,
            from,
            to,
            step,
        } => {
            let p = match parameter {
                Parameter::Demand => SweepParameter::Demand,
                Parameter::Cost => SweepParameter::Cost,
            };
            commands::sweep(&commands::load(input)?, p, from, to, step)
        }
        Command::Oracle {
            seed,
            count,
            budget,
        } => commands::oracle(*seed, *count, *budget),
        Command::TwoMarket {
            cost,
            a1,
            b1,
            a2,
            b2,
            sweep,
        } => {
            let sc = TwoMarketScenario::new(
                cost.clone(),
                a1.clone(),
                b1.clone(),
                a2.clone(),
                b2.clone(),
            )?;
            commands::two_market(&sc, sweep.as_deref())
        }
        Command::Demo {
            which:
                Demo::Msspg {
                    start,
                    epsilon,
                    rounds,
                },
        } => commands::demo_msspg(
            start,
            &epsilon.clone().unwrap_or_else(default_epsilon),
            *rounds,
        ),
        Command::Demo { which: Demo::Dag } => commands::demo_dag(),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::InvalidNetwork => 2,
        ErrorClass::NotSeriesParallel => 3,
        ErrorClass::Infeasible => 4,
        ErrorClass::Invariant => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("spgeq: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let text = report.sheet.render(cli.format, cli.decimal);
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("spgeq: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    match report.failure {
        Some(msg) => {
            eprintln!("spgeq: {msg}");
            ExitCode::from(5)
        }
        None => ExitCode::SUCCESS,
    }
}
