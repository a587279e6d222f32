use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use strata_sigma::harness::{run, Command, CurveSource, RunConfig, Tolerances};

/// Sigma functions on hyperelliptic curves: periods, identity checks and sign audits.
#[derive(Parser)]
#[command(name = "strata-sigma", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Period matrices and their validation.
    Periods(Common),
    /// Every identity and structural check on each curve.
    Verify(Common),
    /// Fitted signs of the addition formula against each predicted sign formula.
    Audit(Common),
    /// Leading behaviour near infinity.
    Expand(Common),
}

#[derive(Args)]
struct Common {
    /// Curve file in JSON.
    #[arg(long, conflicts_with_all = ["inline", "corpus"])]
    curve: Option<PathBuf>,
    /// Inline curve: JSON, or comma-separated real coefficients λ0,…,λ2g.
    #[arg(long, conflicts_with = "corpus")]
    inline: Option<String>,
    /// Directory of curve files.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Relative tolerance for the full identities.
    #[arg(long)]
    tol: Option<f64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Include genus four curves of a corpus.
    #[arg(long)]
    slow: bool,
}

fn config(command: Command, c: Common) -> Result<RunConfig, String> {
    let source = match (c.curve, c.inline, c.corpus) {
        (Some(p), None, None) => CurveSource::File(p),
        (None, Some(s), None) => CurveSource::Inline(s),
        (None, None, Some(d)) => CurveSource::Corpus(d),
        (None, None, None) if command == Command::Audit => CurveSource::Corpus(PathBuf::from("corpus")),
        _ => return Err("give exactly one of --curve, --inline or --corpus".into()),
    };
    let mut tol = Tolerances::default();
    if let Some(t) = c.tol {
        if !(t > 0.0) {
            return Err(format!("tolerance must be positive, got {t}"));
        }
        tol.identity = t;
    }
    Ok(RunConfig {
        command,
        source,
        trials: c.trials,
        seed: c.seed,
        tol,
        output: c.output,
        slow_tier: c.slow,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("STRATA_SIGMA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let (command, common) = match cli.command {
        Sub::Periods(c) => (Command::Periods, c),
        Sub::Verify(c) => (Command::Verify, c),
        Sub::Audit(c) => (Command::Audit, c),
        Sub::Expand(c) => (Command::Expand, c),
    };
    let cfg = match config(command, common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_input_error() { 2 } else { 1 });
        }
    };
    let text = outcome.to_json();
    match &cfg.output {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("error: writing {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    match outcome.failures.first() {
        None => ExitCode::SUCCESS,
        Some(first) => {
            eprintln!("FAILED: {first}");
            ExitCode::from(1)
        }
    }
}
