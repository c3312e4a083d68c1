use std::path::PathBuf;
use std::process::ExitCode;

use adaregret::LearnerKind;
use adaregret_cli::{
    cmd_audit, cmd_cover, cmd_intervals, cmd_run, cmd_template, configure_threads, CliError, CoverKind,
    IntervalKind, Outcome, ERROR_CODE,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adaregret", version, about = "Adaptive-regret online learning runs and bound audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Learner {
    Sogd,
    OgdConstant,
    Sacs,
    SacsCpgc,
}

impl From<Learner> for LearnerKind {
    fn from(l: Learner) -> Self {
        match l {
            Learner::Sogd => LearnerKind::Sogd,
            Learner::OgdConstant => LearnerKind::OgdConstant,
            Learner::Sacs => LearnerKind::Sacs,
            Learner::SacsCpgc => LearnerKind::SacsCpgc,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a learner on the configured scenario and audit the run.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-audit a recorded trace; prints the summary document.
    Audit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Draw an interval system as a bracket diagram.
    Intervals {
        #[arg(long, value_enum)]
        kind: IntervalKind,
        #[arg(long)]
        horizon: usize,
        /// Marker rounds for pgc/cpgc, comma separated.
        #[arg(long, value_delimiter = ',')]
        markers: Vec<usize>,
    },
    /// Print the greedy cover of [from, to] and its length.
    Cover {
        #[arg(long, value_enum, default_value = "cgc")]
        kind: CoverKind,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
    },
    /// Print an example run config.
    Template {
        #[arg(long, value_enum, default_value = "sacs")]
        learner: Learner,
    },
}

fn dispatch(cli: Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, out, seed } => cmd_run(&config, out.as_deref(), seed),
        Command::Audit { trace, config } => {
            let (outcome, summary) = cmd_audit(&trace, &config)?;
            print!("{summary}");
            Ok(outcome)
        }
        Command::Intervals { kind, horizon, markers } => {
            print!("{}", cmd_intervals(kind, horizon, &markers)?);
            Ok(Outcome::Pass)
        }
        Command::Cover { kind, from, to } => {
            print!("{}", cmd_cover(kind, from, to)?);
            Ok(Outcome::Pass)
        }
        Command::Template { learner } => {
            print!("{}", cmd_template(learner.into()));
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(outcome) => ExitCode::from(outcome.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ERROR_CODE as u8)
        }
    }
}
