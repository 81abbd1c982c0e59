use std::fs;
use std::io::{self, Write};
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sepprob::conjecture::p_of_alpha;
use sepprob::engine::{RunOutcome, RunPlan, Runner, DEFAULT_CHUNK_SIZE};
use sepprob::selftest::{Battery, CheckReport};
use sepprob::StateCase;

const FORMAT_VERSION: u32 = 1;
const SELFTEST_BUDGET_SECS: f64 = 60.0;

#[derive(Parser, Debug)]
#[command(name = "sepprob", version, about = "Monte Carlo separability probabilities for two-qubit-like systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the separable fraction by sampling the coefficient ball.
    Estimate(EstimateArgs),
    /// Evaluate the conjectured closed-form probability P(alpha).
    Conjecture(ConjectureArgs),
    /// Run the invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    case: StateCase,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Thread count, or `auto` for the available parallelism.
    #[arg(long, default_value = "auto")]
    workers: Workers,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE, value_parser = clap::value_parser!(u64).range(1..))]
    chunk_size: u64,
    /// Resume from and save progress to this file.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Chunks between checkpoint saves.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..), requires = "checkpoint")]
    checkpoint_every: u64,
    /// Stop after this many chunks; the checkpoint keeps the progress.
    #[arg(long, requires = "checkpoint")]
    max_chunks: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConjectureArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-12)]
    rel_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug)]
struct Workers(usize);

impl FromStr for Workers {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Workers(std::thread::available_parallelism().map_or(1, NonZeroUsize::get)));
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Workers(n)),
            _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
        }
    }
}

#[derive(Serialize)]
struct EstimateDoc {
    format: &'static str,
    format_version: u32,
    tool_version: &'static str,
    case: &'static str,
    alpha: f64,
    n_total: u64,
    n_positive: u64,
    n_sep: u64,
    p_hat: f64,
    std_err: f64,
    p_conjectured: f64,
    z: f64,
    seed: u64,
    chunk_size: u64,
    workers: usize,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct SuspendedDoc {
    format: &'static str,
    format_version: u32,
    tool_version: &'static str,
    case: &'static str,
    status: &'static str,
    chunks_done: u64,
    chunks_total: u64,
    n_total: u64,
    n_positive: u64,
    n_sep: u64,
    seed: u64,
    chunk_size: u64,
    checkpoint: PathBuf,
}

#[derive(Serialize)]
struct ConjectureDoc {
    format: &'static str,
    format_version: u32,
    tool_version: &'static str,
    alpha: f64,
    value: f64,
    terms_used: usize,
    tail_bound: f64,
    rel_tol: f64,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        match self {
            Failure::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
            Failure::Numeric(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
        }
    }
}

fn emit<T: Serialize>(doc: &T, out: Option<&PathBuf>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Failure::Numeric(e.to_string()))?;
    text.push('\n');
    if let Some(path) = out {
        fs::write(path, &text).map_err(|e| Failure::Numeric(format!("{}: {e}", path.display())))?;
    }
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Numeric(e.to_string()))
}

fn estimate(args: &EstimateArgs) -> Result<(), Failure> {
    let plan = RunPlan::new(args.case, args.seed, args.samples, args.chunk_size)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let mut runner = Runner::new(plan, args.workers.0);
    if let Some(path) = &args.checkpoint {
        runner = runner.with_checkpoint(path, args.checkpoint_every);
    }
    let start = Instant::now();
    let outcome = runner.run(args.max_chunks).map_err(|e| Failure::Numeric(e.to_string()))?;
    let wall = start.elapsed().as_secs_f64();

    match outcome {
        RunOutcome::Suspended(state) => {
            let doc = SuspendedDoc {
                format: "sepprob-estimate",
                format_version: FORMAT_VERSION,
                tool_version: env!("CARGO_PKG_VERSION"),
                case: state.case.name(),
                status: "suspended",
                chunks_done: state.chunks_done,
                chunks_total: runner.plan.n_chunks(),
                n_total: state.tally.n_total,
                n_positive: state.tally.n_positive,
                n_sep: state.tally.n_sep,
                seed: state.seed,
                chunk_size: state.chunk_size,
                checkpoint: runner.checkpoint.as_ref().map(|c| c.path.clone()).unwrap_or_default(),
            };
            emit(&doc, args.out.as_ref())
        }
        RunOutcome::Complete(res) => {
            let alpha = res.case.alpha();
            let conj = p_of_alpha(alpha, 1e-12).map_err(|e| Failure::Numeric(e.to_string()))?;
            let doc = EstimateDoc {
                format: "sepprob-estimate",
                format_version: FORMAT_VERSION,
                tool_version: env!("CARGO_PKG_VERSION"),
                case: res.case.name(),
                alpha,
                n_total: res.tally.n_total,
                n_positive: res.tally.n_positive,
                n_sep: res.tally.n_sep,
                p_hat: res.p_hat,
                std_err: res.std_err,
                p_conjectured: conj.value,
                z: (res.p_hat - conj.value) / res.std_err,
                seed: res.seed,
                chunk_size: args.chunk_size,
                workers: args.workers.0,
                wall_time_s: wall,
            };
            emit(&doc, args.out.as_ref())
        }
    }
}

fn conjecture(args: &ConjectureArgs) -> Result<(), Failure> {
    if !(args.alpha >= 0.0 && args.alpha.is_finite()) {
        return Err(Failure::Usage(format!("--alpha must be a finite number >= 0, got {}", args.alpha)));
    }
    if !(args.rel_tol > 0.0 && args.rel_tol <= 1e-6) {
        return Err(Failure::Usage(format!("--rel-tol must lie in (0, 1e-6], got {}", args.rel_tol)));
    }
    let res = p_of_alpha(args.alpha, args.rel_tol).map_err(|e| Failure::Numeric(e.to_string()))?;
    let doc = ConjectureDoc {
        format: "sepprob-conjecture",
        format_version: FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        alpha: res.alpha,
        value: res.value,
        terms_used: res.terms_used,
        tail_bound: res.tail_bound,
        rel_tol: res.rel_tol,
    };
    emit(&doc, args.out.as_ref())
}

/// Prints one line per check and returns the names of the failing ones.
fn selftest(battery: &Battery, out: &mut impl Write) -> io::Result<Vec<&'static str>> {
    let start = Instant::now();
    let reports: Vec<CheckReport> = battery.run();
    let mut failed = Vec::new();
    for r in &reports {
        let verdict = if r.passed { "ok  " } else { "FAIL" };
        writeln!(out, "{verdict} {:<26} {:>7.3}s  {}", r.name, r.secs, r.detail)?;
        if !r.passed {
            failed.push(r.name);
        }
    }
    let total = start.elapsed().as_secs_f64();
    writeln!(out, "{} checks, {} failed, {total:.2}s", reports.len(), failed.len())?;
    if total > SELFTEST_BUDGET_SECS {
        eprintln!("warning: selftest took {total:.1}s (budget {SELFTEST_BUDGET_SECS}s)");
    }
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Estimate(args) => estimate(args),
        Command::Conjecture(args) => conjecture(args),
        Command::Selftest(args) => {
            let battery = Battery {
                seed: args.seed,
                ..Battery::default()
            };
            match selftest(&battery, &mut io::stdout().lock()) {
                Ok(failed) if failed.is_empty() => Ok(()),
                Ok(failed) => Err(Failure::Numeric(format!("failing checks: {}", failed.join(", ")))),
                Err(e) => Err(Failure::Numeric(e.to_string())),
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sepprob::states::{partial_transpose, CoeffVector};

    #[test]
    fn workers_flag() {
        assert!(Workers::from_str("auto").unwrap().0 >= 1);
        assert_eq!(Workers::from_str("3").unwrap().0, 3);
        assert!(Workers::from_str("0").is_err());
        assert!(Workers::from_str("many").is_err());
    }

    /// Drops the sign flip on (2,2), the only rebit generator it touches.
    fn unflipped_rebit(v: &CoeffVector) -> CoeffVector {
        match v.case() {
            StateCase::Rebit => v.clone(),
            _ => partial_transpose(v),
        }
    }

    #[test]
    fn selftest_names_the_broken_check() {
        let battery = Battery {
            trials: 100,
            ball_draws: 100_000,
            partial_transpose: unflipped_rebit,
            ..Battery::default()
        };
        let mut buf = Vec::new();
        let failed = selftest(&battery, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(failed.contains(&"states.pt_spectrum"), "{text}");
        assert!(text.contains("FAIL states.pt_spectrum"));
    }

    #[test]
    fn parse_errors_are_usage_errors() {
        for argv in [
            &["sepprob", "estimate", "--case", "qubit", "--samples", "0"][..],
            &["sepprob", "estimate", "--case", "octonion", "--samples", "5"],
            &["sepprob", "estimate", "--case", "qubit"],
            &["sepprob", "estimate", "--case", "qubit", "--samples", "5", "--max-chunks", "1"],
            &["sepprob", "frobnicate"],
        ] {
            let e = Cli::try_parse_from(argv).unwrap_err();
            assert!(e.use_stderr(), "{argv:?}");
        }
        assert!(!Cli::try_parse_from(["sepprob", "--help"]).unwrap_err().use_stderr());
    }
}
