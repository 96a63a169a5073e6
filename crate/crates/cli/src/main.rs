mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use hawkes_coop_core::experiment::config::KEYS;

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "HAWKES_COOP_OUT";

#[derive(Parser, Debug)]
#[command(
    name = "hawkes-coop",
    version,
    about = "Donation games with Hawkes-timed actions on a lattice"
)]
pub struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    /// Print per-cell summaries (sweep, analyze).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one trial and write its per-generation statistics.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Replicate index whose seed is used.
        #[arg(long, default_value_t = 0)]
        replicate: usize,
    },
    /// Run every cell of the parameter grid with replicates.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Summarise a per-replicate results CSV and write plot data.
    Analyze {
        /// Results CSV written by `sweep`.
        results: PathBuf,
        /// Output directory (default: the results file's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record the event stream and one agent's intensity of a Hawkes cell.
    Trace {
        #[command(flatten)]
        config: ConfigArgs,
        /// Traced time span, in time units.
        #[arg(long, default_value_t = 20.0)]
        horizon: f64,
        /// Spacing of intensity samples, in time units.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Lattice row of the traced agent.
        #[arg(long, default_value_t = 0)]
        row: usize,
        /// Lattice column of the traced agent.
        #[arg(long, default_value_t = 0)]
        col: usize,
    },
}

/// Configuration sources, applied in order: built-in defaults, `--scale`,
/// `--preset`, `--config`, then individual overrides.
#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Named parameter grid: exp1, exp2 or fig8.
    #[arg(long)]
    pub preset: Option<String>,
    /// Problem size: desk or paper.
    #[arg(long)]
    pub scale: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every donation event to events.csv.
    #[arg(long)]
    pub dump_events: bool,
    /// Write the strategy grid every M generations.
    #[arg(long, value_name = "M")]
    pub dump_grid: Option<String>,
    /// Lattice side length.
    #[arg(long = "L", value_name = "L")]
    pub side: Option<String>,
    /// Benefit grid.
    #[arg(long)]
    pub b: Option<String>,
    /// Excitation strength grid.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Kernel shape grid.
    #[arg(long)]
    pub nu: Option<String>,
    /// Mutation probability.
    #[arg(long)]
    pub mu: Option<String>,
    /// Neighborhood size (4 or 8).
    #[arg(long)]
    pub k: Option<String>,
    /// Comma-separated cases: standard, poisson, endo, exo.
    #[arg(long)]
    pub case: Option<String>,
    /// Donation stage duration.
    #[arg(long)]
    pub t_g: Option<String>,
    /// Generations per trial.
    #[arg(long)]
    pub g_end: Option<String>,
    /// Generations averaged at the end of each trial.
    #[arg(long)]
    pub g_ave: Option<String>,
    /// Trials per cell.
    #[arg(long)]
    pub replicates: Option<String>,
    /// Fixed kernel decay ratio instead of the per-case default.
    #[arg(long)]
    pub beta_override: Option<String>,
    /// Any configuration key, as key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    /// `(key, value)` pairs of the explicit per-key flags.
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out: Vec<(&'static str, String)> = [
            ("seed", &self.seed),
            ("dump_grid", &self.dump_grid),
            ("L", &self.side),
            ("b", &self.b),
            ("alpha", &self.alpha),
            ("nu", &self.nu),
            ("mu", &self.mu),
            ("k", &self.k),
            ("case", &self.case),
            ("t_g", &self.t_g),
            ("g_end", &self.g_end),
            ("g_ave", &self.g_ave),
            ("replicates", &self.replicates),
            ("beta", &self.beta_override),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        if self.dump_events {
            out.push(("dump_events", "true".into()));
        }
        if let Some(out_dir) = &self.out {
            out.push(("out", out_dir.display().to_string()));
        }
        out
    }
}

fn keys_help() -> String {
    let mut s =
        String::from("Configuration keys (config file `key = value`, or --set key=value):\n");
    let width = KEYS.iter().map(|k| k.0.len()).max().unwrap_or(0);
    for (key, unit, default, description) in KEYS {
        s.push_str(&format!(
            "  {key:<width$}  {description} [unit: {unit}; default: {default}]\n"
        ));
    }
    s.push_str(&format!(
        "\nThe default output directory can be set with the {OUT_ENV} environment variable.\n\
         Exit codes: 0 success, 1 I/O or runtime error, 2 configuration error, 3 some cells failed."
    ));
    s
}

fn main() -> ExitCode {
    let help = keys_help();
    let mut cmd = Cli::command().after_help(help.clone());
    for name in ["run", "sweep", "trace"] {
        cmd = cmd.mut_subcommand(name, |c| c.after_help(help.clone()));
    }
    let matches = cmd.get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
