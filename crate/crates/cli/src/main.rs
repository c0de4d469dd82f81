//! `mrqa`: generate series, build recurrence plots, compute RQA and
//! microstate entropy, and run parameter sweeps.
//!
//! Exit status: 0 on success, 1 on a runtime error, 2 on an invalid
//! configuration (unknown key, out-of-domain value, bad flag).

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{
    CliSection, ExperimentSection, FileConfig, MicrostateSection, RecurrenceSection, RqaSection,
    SignalSection,
};
use run::{RunError, SweepArgs};

#[derive(Parser)]
#[command(
    name = "mrqa",
    version,
    about = "Recurrence microstate entropy and recurrence quantification analysis",
    after_help = "Every flag has a config-file key, shown in brackets as [section.key]. \
                  Flags override environment variables (MRQA_<KEY>), which override the config file."
)]
struct Cli {
    /// TOML config file with [cli], [signals], [recurrence], [rqa], [microstates] and [experiments] tables
    #[arg(long, short, global = true, env = "MRQA_CONFIG")]
    config: Option<PathBuf>,

    #[command(flatten)]
    run: CliSection,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated or ingested series, one value per line
    Gen {
        #[command(flatten)]
        signals: SignalSection,
    },
    /// Build a recurrence plot, report its size and rate, optionally export PBM
    Rp {
        #[command(flatten)]
        signals: SignalSection,
        #[command(flatten)]
        recurrence: RecurrenceSection,
    },
    /// Classic quantifiers (RR, DET, LAM, ENTR, DIV) as CSV, optionally per window
    Rqa {
        #[command(flatten)]
        signals: SignalSection,
        #[command(flatten)]
        recurrence: RecurrenceSection,
        #[command(flatten)]
        rqa: RqaSection,
    },
    /// Microstate entropy of one plot as JSON
    Entropy {
        #[command(flatten)]
        signals: SignalSection,
        #[command(flatten)]
        recurrence: RecurrenceSection,
        #[command(flatten)]
        microstates: MicrostateSection,
    },
    /// Parameter sweep written to <out-dir>/<experiment>-seed<seed>/
    Sweep {
        #[command(flatten)]
        experiments: ExperimentSection,
        #[command(flatten)]
        signals: SignalSection,
        #[command(flatten)]
        recurrence: RecurrenceSection,
        #[command(flatten)]
        rqa: RqaSection,
        #[command(flatten)]
        microstates: MicrostateSection,
    },
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let run = cli.run.or(file.cli);
    if let Some(threads) = run.threads {
        if threads == 0 {
            return Err(config::ConfigError::new("cli.threads", "must be >= 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| RunError::Runtime(e.into()))?;
    }
    match cli.command {
        Command::Gen { signals } => run::gen(&run, &signals.or(file.signals)),
        Command::Rp {
            signals,
            recurrence,
        } => run::rp(
            &run,
            &signals.or(file.signals),
            &recurrence.or(file.recurrence),
        ),
        Command::Rqa {
            signals,
            recurrence,
            rqa,
        } => run::rqa(
            &run,
            &signals.or(file.signals),
            &recurrence.or(file.recurrence),
            &rqa.or(file.rqa),
        ),
        Command::Entropy {
            signals,
            recurrence,
            microstates,
        } => run::entropy(
            &run,
            &signals.or(file.signals),
            &recurrence.or(file.recurrence),
            &microstates.or(file.microstates),
        ),
        Command::Sweep {
            experiments,
            signals,
            recurrence,
            rqa,
            microstates,
        } => run::sweep(&SweepArgs {
            cli: &run,
            sig: &signals.or(file.signals),
            rec: &recurrence.or(file.recurrence),
            rqa: &rqa.or(file.rqa),
            ms: &microstates.or(file.microstates),
            exp: &experiments.or(file.experiments),
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(e)) => {
            eprintln!("mrqa: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Runtime(e)) => {
            eprintln!("mrqa: {e:#}");
            ExitCode::from(1)
        }
    }
}
