use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use beaver_zoo::corpus::{self, format_percent, MatchKind, DEFAULT_CHUNK};
use beaver_zoo::enumerate::{self, count_all, count_free, GenConfig, GenMode};
use beaver_zoo::quad::{self, QuadMachine};
use beaver_zoo::sim::{self, DEFAULT_BOUND};
use beaver_zoo::transform;
use beaver_zoo::{parse_machine, Dimension, Machine, RunOptions};
use clap::{Args, Parser, Subcommand};

/// Above this many machines, free and all generation only count unless
/// forced.
const MATERIALIZE_LIMIT: u128 = 10_000_000;

#[derive(Parser)]
#[command(name = "zoo", version, about = "Generate and analyse small Turing machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a machine class into a corpus directory.
    Generate(GenerateArgs),
    /// Run one machine from the blank tape.
    Run(RunArgs),
    /// Per-branch and per-status counts of a corpus.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Normalize a machine and look it up in a corpus.
    Find {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        machine: String,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: u64,
    },
    /// Recount a corpus against its manifest and an expected total.
    VerifyCounts {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        expected: u64,
    },
    /// Print the normal-form rewrite of a machine.
    Normalize {
        #[arg(long)]
        machine: String,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: u64,
    },
    /// Add a state that writes one more 1 before halting.
    Augment {
        #[arg(long)]
        machine: String,
    },
    /// Print the chain machine with n states.
    Goanna {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        symbols: usize,
    },
    /// Convert a quadruple machine into a quintuple machine.
    Quad2quint {
        #[arg(long)]
        machine: String,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    states: u32,
    #[arg(long)]
    symbols: u32,
    #[arg(long, default_value = "tnf")]
    mode: GenMode,
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bound: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CHUNK)]
    chunk: u64,
    #[arg(long)]
    detect_cycles: bool,
    /// Keep running partial machines whose tape becomes blank again.
    #[arg(long)]
    no_blank_check: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Print the count without writing a corpus.
    #[arg(long)]
    count_only: bool,
    /// Write free or all corpora even when they are very large.
    #[arg(long)]
    force_materialize: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    machine: String,
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bound: u64,
    #[arg(long)]
    detect_cycles: bool,
    #[arg(long)]
    no_blank_check: bool,
    /// Print every configuration.
    #[arg(long)]
    trace: bool,
}

/// Accepts a table with or without a trailing status field.
fn machine_arg(text: &str) -> Result<Machine> {
    let text = text.trim();
    match parse_machine(text) {
        Ok((m, _)) => Ok(m),
        Err(_) => text.parse().with_context(|| format!("bad machine {text:?}")),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let dim = Dimension::new(args.states, args.symbols)?;
    let run_options = RunOptions {
        bound: args.bound,
        detect_blank_tape: !args.no_blank_check,
        detect_cycles: args.detect_cycles,
        ..RunOptions::default()
    };
    let cfg = GenConfig {
        dim,
        mode: args.mode,
        run_options,
    };
    let closed_form = match args.mode {
        GenMode::Tnf => None,
        GenMode::Free => Some(count_free(dim)),
        GenMode::All => Some(count_all(dim)),
    };
    let too_big = closed_form.is_some_and(|n| n > MATERIALIZE_LIMIT) && !args.force_materialize;
    if args.count_only || too_big {
        if too_big && !args.count_only {
            eprintln!("{} {} machines exceed the materialization limit; counting only", dim, args.mode);
        }
        let n = match closed_form {
            Some(n) => n,
            None => enumerate::count(&cfg) as u128,
        };
        println!("{n}");
        return Ok(());
    }
    let Some(out) = args.out else {
        bail!("--out is required unless --count-only is given");
    };
    let manifest = corpus::write_corpus_parallel(&cfg, &out, args.chunk, args.workers)?;
    println!("{}", manifest.total);
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let m = machine_arg(&args.machine)?;
    let opts = RunOptions {
        bound: args.bound,
        detect_blank_tape: !args.no_blank_check,
        detect_cycles: args.detect_cycles,
        ..RunOptions::default()
    };
    if args.trace {
        let t = sim::trace(&m, &opts);
        println!("{t}");
        println!("{}", t.outcome.summary());
    } else {
        println!("{}", sim::run(&m, &opts).summary());
    }
    Ok(())
}

fn stats(input: PathBuf) -> Result<()> {
    let s = corpus::stats(&input)?;
    println!("total {}", s.total);
    for (kind, n) in &s.per_status {
        println!("status {} {n}", kind.letter());
    }
    for ((action, n), (_, tenths)) in s.per_b0.iter().zip(s.b0_tenths()) {
        let label = action.map_or_else(|| "---".to_string(), |a| a.to_string());
        println!("b0 {label} {n} {}", format_percent(tenths));
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate(args) => generate(args)?,
        Command::Run(args) => run(args)?,
        Command::Stats { input } => stats(input)?,
        Command::Find { input, machine, bound } => {
            let m = machine_arg(&machine)?;
            let hits = corpus::find(&input, &m, &RunOptions::with_bound(bound))?;
            for (id, kind) in &hits {
                let kind = match kind {
                    MatchKind::Exact => "exact",
                    MatchKind::Prefix => "prefix",
                };
                println!("{id} {kind}");
            }
            if hits.is_empty() {
                println!("not found");
                return Ok(ExitCode::from(1));
            }
        }
        Command::VerifyCounts { input, expected } => {
            let report = corpus::verify_counts(&input, expected)?;
            for c in report.bad_chunks() {
                let counted = c.counted_lines.map_or_else(|| "missing".to_string(), |n| n.to_string());
                println!(
                    "chunk {} manifest={} counted={counted} checksum={}",
                    c.file,
                    c.manifest_lines,
                    if c.checksum_ok { "ok" } else { "bad" }
                );
            }
            println!(
                "expected={} manifest={} counted={} {}",
                report.expected,
                report.manifest_total,
                report.counted,
                if report.ok() { "ok" } else { "MISMATCH" }
            );
            if !report.ok() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Normalize { machine, bound } => {
            let m = machine_arg(&machine)?;
            let report = transform::normalize(&m, &RunOptions::plain(bound));
            for step in &report.applied {
                println!("{step}");
            }
            println!("{}", report.result);
            println!("{}", report.verdict);
        }
        Command::Augment { machine } => {
            let m = machine_arg(&machine)?;
            println!("{}", transform::augment_state(&m)?);
        }
        Command::Goanna { states, symbols } => {
            println!("{}", transform::goanna(states, symbols)?);
        }
        Command::Quad2quint { machine } => {
            let q: QuadMachine = machine.trim().parse()?;
            let stripped = quad::strip_self_loops(&quad::normalise_quad(&q));
            println!("{}", quad::quad_to_quint(&stripped)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}
