use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use posergcn_cli::bench::{bench, BenchArgs};
use posergcn_cli::eval::{eval, EvalArgs, METRICS_HEADER};
use posergcn_cli::gradcheck::{gradcheck, GradcheckArgs};
use posergcn_cli::inspect::{inspect, InspectArgs};
use posergcn_cli::synth::{synth, SynthArgs};
use posergcn_cli::train::{train, TrainArgs};
use posergcn_cli::{exit_code, EXIT_FAILURE, EXIT_OK};

#[derive(Parser, Debug)]
#[command(name = "posergcn", version, about = "Pose-graph recurrent GCNs for video person re-identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic walking dataset.
    Synth(SynthArgs),
    /// Train a model from a config file.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the held-out tracks.
    Eval(EvalArgs),
    /// Finite-difference check of every gradient pipeline.
    Gradcheck(GradcheckArgs),
    /// Time one unroll of each cell.
    Bench(BenchArgs),
    /// Print attention scores of one track.
    Inspect(InspectArgs),
}

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Synth(args) => {
            let s = synth(&args)?;
            println!("wrote {} tracks to {}", s.tracks, s.path.display());
        }
        Command::Train(args) => {
            let out = train(&args)?;
            let m = &out.metrics;
            println!("checkpoint {}", out.checkpoint().display());
            println!("fused mAP {:.4} rank1 {:.4} rank5 {:.4} rank20 {:.4}", m.map, m.rank1, m.rank5, m.rank20);
        }
        Command::Eval(args) => {
            let out = eval(&args)?;
            println!("{METRICS_HEADER}");
            println!("{}", out.csv_row());
        }
        Command::Gradcheck(args) => {
            let report = gradcheck(&args)?;
            println!("{report}");
            if !report.passed() {
                return Ok(EXIT_FAILURE);
            }
        }
        Command::Bench(args) => print!("{}", bench(&args)?),
        Command::Inspect(args) => println!("{}", inspect(&args)?),
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
