use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stackmorse::pipeline::{run_prepared, RunOptions};
use stackmorse::report::Report;
use stackmorse::scenario::{Scenario, Task};

/// Morse analysis of symmetric functions on level-set manifolds.
#[derive(Parser)]
#[command(name = "stackmorse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find and classify critical orbits.
    Analyze(Common),
    /// Critical orbits plus the flow-line census.
    Flow(Common),
    /// Everything up to the Witten and nerve double complexes.
    Complex(Common),
    /// Full pipeline plus the invariant suite.
    Verify(Common),
    /// Run the tasks listed in the scenario file.
    Report(Common),
}

#[derive(Args)]
struct Common {
    scenario: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; falls back to $STACKMORSE_OUT, then stdout.
    #[arg(long, env = "STACKMORSE_OUT")]
    out: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

fn render(r: &Report, f: Format) -> String {
    match f {
        Format::Json => r.to_json(),
        Format::Csv => r.to_csv(),
        Format::Text => r.to_text(),
    }
}

fn write_outputs(dir: &Path, r: &Report, format: Format) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let stem = &r.scenario.name;
    std::fs::write(dir.join(format!("{stem}.{}", format.ext())), render(r, format))?;
    if !r.trajectories.is_empty() {
        std::fs::write(dir.join(format!("{stem}_trajectories.csv")), r.trajectories_csv())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, tasks, default_format) = match cli.command {
        Command::Analyze(c) => (c, Some(vec![Task::Analyze]), Format::Text),
        Command::Flow(c) => (c, Some(vec![Task::Analyze, Task::Flow]), Format::Text),
        Command::Complex(c) => (c, Some(vec![Task::Analyze, Task::Flow, Task::Complex]), Format::Text),
        Command::Verify(c) => (
            c,
            Some(vec![Task::Analyze, Task::Flow, Task::Complex, Task::Inequalities, Task::Verify]),
            Format::Text,
        ),
        Command::Report(c) => (c, None, Format::Json),
    };
    let prepared = match Scenario::load(&common.scenario).and_then(|s| s.prepare()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        seed: common.seed,
        timing: common.timing,
        tasks,
    };
    let report = run_prepared(&prepared, &opts);
    let format = common.format.unwrap_or(default_format);
    match &common.out {
        Some(dir) => {
            if let Err(e) = write_outputs(dir, &report, format) {
                eprintln!("error: cannot write to {}: {e}", dir.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{}", render(&report, format)),
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        for c in report.checks.iter().filter(|c| !c.pass) {
            eprintln!("failed check: {}", c.name);
        }
        ExitCode::from(1)
    }
}
