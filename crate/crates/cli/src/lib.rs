//! Library side of the `seqclock` command-line tool: argument definitions
//! and one function per subcommand. Every subcommand writes its data files
//! plus a `<command>.run.json` sidecar into `--out`.

pub mod commands;
pub mod config;

use clap::{Parser, Subcommand};

use commands::{AlphaSweepOpts, ArnoldOpts, Outcome, PrcOpts, ScanOpts, SimulateOpts};
use config::Common;

#[derive(Parser)]
#[command(name = "seqclock", version, about = "Sequestration clock models: simulation, certificates, phase response")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Free run of any model; PWA runs also log region transitions.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: SimulateOpts,
    },
    /// Period of the reduced model against the sequestration rate.
    AlphaSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: AlphaSweepOpts,
    },
    /// Evaluate the sufficient conditions for the six-region cycle.
    Conditions {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo scan of the sufficient conditions.
    Scan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: ScanOpts,
    },
    /// Phase response curve to a square pulse.
    Prc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: PrcOpts,
    },
    /// Entrainment map over pulse amplitude and stimulus period.
    Arnold {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: ArnoldOpts,
    },
}

impl Cli {
    pub fn execute(&self) -> anyhow::Result<Outcome> {
        match &self.command {
            Command::Simulate { common, opts } => commands::simulate(common, opts),
            Command::AlphaSweep { common, opts } => commands::alpha_sweep(common, opts),
            Command::Conditions { common } => commands::conditions(common),
            Command::Scan { common, opts } => commands::scan(common, opts),
            Command::Prc { common, opts } => commands::prc(common, opts),
            Command::Arnold { common, opts } => commands::arnold(common, opts),
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run_args<I, T>(args: I) -> anyhow::Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args)?.execute()
}
