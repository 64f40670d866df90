use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use refgame_core::agents::{payoff_summary, summary_text};
use refgame_core::audit::{self, AuditOutcome};
use refgame_core::scenario::{run_scenario, RunReport, ScenarioConfig, ScenarioError};
use refgame_core::simnet::gen_fixture;
use refgame_core::GameKind;

#[derive(Parser)]
#[command(name = "refgame", version, about = "Run verification game scenarios and audit transcripts")]
struct Cli {
    /// Directory instance files are resolved against; defaults to the
    /// config file's directory.
    #[arg(long, global = true, env = "REFGAME_FIXTURES")]
    fixtures: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its report, transcripts and board dump.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario under consecutive seeds and tabulate payoffs.
    Batch {
        config: PathBuf,
        #[arg(long)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Write the payoff table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay an exported transcript and check its verdict.
    Verify { transcript: PathBuf },
    /// Print a seeded task in the text format.
    Gen {
        game: GameKind,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit status 2: the input could not be used at all.
struct Usage(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Usage> {
    match &cli.command {
        Command::Run { config, seed, out } => run(cli, config, *seed, out.as_deref()),
        Command::Batch {
            config,
            runs,
            seed_base,
            out,
        } => batch(cli, config, *runs, *seed_base, out.as_deref()),
        Command::Verify { transcript } => verify(transcript),
        Command::Gen { game, size, seed } => {
            print!("{}", gen_fixture(*game, *size, *seed)?.task.to_text());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load(cli: &Cli, path: &Path) -> Result<(ScenarioConfig, PathBuf), Usage> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let config = ScenarioConfig::from_json(&text).with_context(|| format!("in {}", path.display()))?;
    let dir = cli
        .fixtures
        .clone()
        .unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
    Ok((config, dir))
}

/// Protocol errors are failures of the run, everything else is bad input.
fn classify(e: ScenarioError) -> Result<ExitCode, Usage> {
    match e {
        ScenarioError::Protocol(e) => {
            eprintln!("protocol failure: {e}");
            Ok(ExitCode::from(1))
        }
        e => Err(Usage(e.into())),
    }
}

fn status(report: &RunReport) -> ExitCode {
    if report.unresolved || !report.conserved {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: &Cli, path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<ExitCode, Usage> {
    let (config, dir) = load(cli, path)?;
    let run = match run_scenario(&config, seed, &dir) {
        Ok(r) => r,
        Err(e) => return classify(e),
    };
    let text = run.report.to_text();
    match out {
        None => print!("{text}"),
        Some(out) => {
            let tdir = out.join("transcripts");
            std::fs::create_dir_all(&tdir).with_context(|| format!("cannot create {}", tdir.display()))?;
            std::fs::write(out.join("report.txt"), &text)?;
            let json = serde_json::to_string_pretty(&run.report)?;
            std::fs::write(out.join("report.json"), json + "\n")?;
            std::fs::write(out.join("board.txt"), run.board_dump())?;
            for (name, body) in run.transcript_files() {
                std::fs::write(tdir.join(name), body)?;
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(status(&run.report))
}

fn batch(cli: &Cli, path: &Path, runs: usize, base: u64, out: Option<&Path>) -> Result<ExitCode, Usage> {
    if runs == 0 {
        return Err(Usage(anyhow::anyhow!("--runs must be at least 1")));
    }
    let (config, dir) = load(cli, path)?;
    let results: Vec<_> = (0..runs as u64)
        .into_par_iter()
        .map(|i| run_scenario(&config, Some(base + i), &dir))
        .collect();
    let mut reports = Vec::with_capacity(runs);
    for r in results {
        match r {
            Ok(r) => reports.push(r.report),
            Err(e) => return classify(e),
        }
    }
    let table = summary_text(&payoff_summary(reports.iter().flat_map(|r| &r.payoffs)));
    match out {
        None => print!("{table}"),
        Some(out) => std::fs::write(out, &table).with_context(|| format!("cannot write {}", out.display()))?,
    }
    let failed = reports.iter().filter(|r| r.unresolved || !r.conserved).count();
    if failed > 0 {
        eprintln!("{failed} of {runs} runs unresolved or unbalanced");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(path: &Path) -> Result<ExitCode, Usage> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let outcome = audit::verify_text(&text).with_context(|| format!("in {}", path.display()))?;
    Ok(match outcome {
        AuditOutcome::Confirmed => {
            println!("confirmed");
            ExitCode::SUCCESS
        }
        AuditOutcome::Refuted { round, detail } => {
            println!("refuted at round {round}: {detail}");
            ExitCode::from(1)
        }
        AuditOutcome::Unaudited => {
            println!("unaudited: verdict replays, but the hash chain does not match");
            ExitCode::from(1)
        }
    })
}
