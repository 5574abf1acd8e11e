use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use guwen_cli::{stages, CliError, Context, StageOutcome};

#[derive(Parser)]
#[command(name = "guwen", version, about = "Ancient-to-modern Chinese translation pipeline")]
struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `threads` from the configuration.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalise raw corpus files into clean.jsonl.
    Clean {
        /// Input files; replaces `paths.input`.
        inputs: Vec<PathBuf>,
    },
    /// Drop near-duplicate records.
    Dedup,
    /// Align the parallel records and report coverage.
    AlignStats,
    /// Split the benchmark sets and build the training pool.
    Benchmark,
    /// Train a model on the training pool.
    Train,
    /// Translate one sentence per line from FILE or standard input.
    Translate { file: Option<PathBuf> },
    /// Score the trained model on every benchmark test split.
    Evaluate,
    /// Train and score every ablation variant.
    Ablate,
}

fn run(cli: Cli) -> Result<StageOutcome, CliError> {
    let mut ctx = Context::load(cli.config.as_deref(), cli.seed, cli.threads)?;
    // Ignore the error raised when the global pool already exists.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(ctx.cfg.threads).build_global();
    match cli.command {
        Cmd::Clean { inputs } => {
            if !inputs.is_empty() {
                ctx.cfg.paths.input = inputs.clone();
                ctx.written.paths.input = inputs;
            }
            stages::clean(&ctx)
        }
        Cmd::Dedup => stages::dedup(&ctx),
        Cmd::AlignStats => stages::align_stats(&ctx),
        Cmd::Benchmark => stages::benchmark(&ctx),
        Cmd::Train => stages::train_model(&ctx),
        Cmd::Translate { file } => {
            let (label, text) = match file {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
                    (p.display().to_string(), text)
                }
                None => {
                    let mut text = String::new();
                    std::io::stdin().read_to_string(&mut text).map_err(|e| CliError::io("<stdin>".as_ref(), e))?;
                    ("<stdin>".to_string(), text)
                }
            };
            let (outcome, rendered) = stages::translate(&ctx, &label, &text)?;
            std::io::stdout().write_all(rendered.as_bytes()).map_err(|e| CliError::io("<stdout>".as_ref(), e))?;
            Ok(outcome)
        }
        Cmd::Evaluate => stages::evaluate(&ctx),
        Cmd::Ablate => stages::ablate(&ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            for m in &outcome.messages {
                eprintln!("{m}");
            }
            if outcome.success() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{} record(s) skipped:", outcome.record_errors.len());
                for e in &outcome.record_errors {
                    eprintln!("  {}:{}: {}", e.path, e.line, e.message);
                }
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
