use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surfdiff_cli::{parse_config, run, Mode, RunError};

#[derive(Parser)]
#[command(name = "surfdiff", version, about = "Effective diffusion on quasi-planar random surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump a field realization on a grid.
    Surface(Common),
    /// Refine the cell problem and write the effective tensor.
    Cell(Common),
    /// Write the Voigt-Reuss bounds.
    Bounds(Common),
    /// Simulate the surface SDE and write the sampled tensor.
    Mcmc(Common),
    /// Run an ensemble over cell sizes and seeds and write the summary.
    Ensemble(Common),
    /// Run the invariant checks and print a pass/fail report.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    eprintln!("{}", e.record());
    ExitCode::from(e.exit_code() as u8)
}

fn execute(mode: Mode, c: Common) -> Result<i32, RunError> {
    let text = std::fs::read_to_string(&c.config)
        .map_err(|e| RunError::Usage(format!("{}: {e}", c.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = c.out {
        cfg.out = Some(o);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(RunError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| RunError::Usage(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| run(&cfg, mode))?;
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(&outcome.stdout)
        .and_then(|_| stdout.flush())
        .map_err(|e| RunError::Output {
            path: "<stdout>".into(),
            message: e.to_string(),
        })?;
    if !outcome.passed {
        eprintln!("{}", serde_json::json!({"status": "fail", "kind": "verification", "exit_code": 3}));
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            if code != 0 {
                eprintln!("{}", RunError::Usage(e.kind().to_string()).record());
            }
            return ExitCode::from(code);
        }
    };
    let (mode, common) = match cli.command {
        Command::Surface(c) => (Mode::Surface, c),
        Command::Cell(c) => (Mode::Cell, c),
        Command::Bounds(c) => (Mode::Bounds, c),
        Command::Mcmc(c) => (Mode::Mcmc, c),
        Command::Ensemble(c) => (Mode::Ensemble, c),
        Command::Verify(c) => (Mode::Verify, c),
    };
    match execute(mode, common) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(&e),
    }
}
