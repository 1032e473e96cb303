use std::path::PathBuf;
use std::process::ExitCode;

use chirrup_cli::{ost, run, with_threads, ExperimentSpec, Result};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Chirrup,
    OstPredict,
    OstMc,
}

/// Seeded CHIRRUP and OST experiments.
#[derive(Debug, Parser)]
#[command(name = "chirrup", version)]
struct Args {
    /// Experiment spec (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; overrides `out` in the spec.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides `threads` in the spec.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "chirrup")]
    mode: Mode,
    /// Keep rows already in the output and skip their points.
    #[arg(long)]
    resume: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(args: Args) -> Result<()> {
    let mut spec = ExperimentSpec::load(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if args.threads.is_some() {
        spec.threads = args.threads;
    }
    let out = args
        .out
        .or_else(|| spec.out.clone())
        .unwrap_or_else(|| PathBuf::from("results.csv"));
    spec.out = Some(out.clone());

    with_threads(spec.threads, || match args.mode {
        Mode::Chirrup => {
            let summary = run(&spec, &out, args.resume)?;
            eprintln!(
                "{} rows written, {} already present -> {}",
                summary.written,
                summary.skipped,
                out.display()
            );
            Ok(())
        }
        Mode::OstPredict => {
            let rows = ost::predict(&spec)?;
            ost::write_rows(&out, &rows, &ost::PREDICT_HEADER, &spec, "ost-predict")
        }
        Mode::OstMc => {
            let rows = ost::monte_carlo(&spec)?;
            ost::write_rows(&out, &rows, &ost::MC_HEADER, &spec, "ost-mc")
        }
    })?
}
