//! `weierdim`: dimension formulas, synthesis, evaluation, box counting and
//! Cantor-scaffold checks for Weierstrass-type series.

mod commands;
mod config;
mod error;
mod export;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use weierdim::weierfn::BaseTag;

#[derive(Debug, Parser)]
#[command(
    name = "weierdim",
    version,
    about = "Weierstrass-type graphs: dimensions and desk-scale checks"
)]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, env = "WEIERDIM_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dimension ratios of a sequence over an index window.
    Theory(TheoryArgs),
    /// Write a sequence spec with prescribed (H, B).
    Synth(SynthArgs),
    /// Evaluate a truncated series at a point.
    Eval(EvalArgs),
    /// Oscillation over [t, t + r].
    Osc(OscArgs),
    /// Box-counting table and slope fit.
    Boxdim(BoxdimArgs),
    /// Build generation intervals and check branching.
    Cantor(CantorArgs),
    /// Fit the oscillation-lemma constants and write a run manifest.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Sequence spec JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Synthesize from H:B.
    #[arg(long, value_name = "H:B")]
    pub synth: Option<String>,
    /// Built-in family: wingren, liu, lipschitz.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Drop this many leading terms.
    #[arg(long, default_value_t = 0)]
    pub skip: usize,
    #[arg(long, default_value = "sawtooth")]
    pub g: BaseTag,
    /// Truncation depth N.
    #[arg(long, conflicts_with = "accuracy")]
    pub depth: Option<usize>,
    /// Least depth whose tail bound is at most this.
    #[arg(long)]
    pub accuracy: Option<f64>,
    /// Ratio bound for the tail estimate.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0)]
    pub skip: usize,
    /// Inclusive index window n0:n1.
    #[arg(long, default_value = "1:30")]
    pub window: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long = "H")]
    pub h: f64,
    #[arg(long = "B")]
    pub b: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
}

#[derive(Debug, Args)]
pub struct OscArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Column,
    Cell,
}

#[derive(Debug, Args)]
pub struct BoxdimArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// x0:x1
    #[arg(long, default_value = "0:1")]
    pub domain: String,
    /// auto, generation, geometric[:factor]
    #[arg(long, default_value = "auto")]
    pub ladder: String,
    #[arg(long, value_enum, default_value = "column")]
    pub method: MethodArg,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON fit report (stdout when absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CantorArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0)]
    pub skip: usize,
    #[arg(long, default_value = "sawtooth")]
    pub g: BaseTag,
    #[arg(long)]
    pub depth: usize,
    /// Write the levels as JSON.
    #[arg(long)]
    pub emit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Cantor depth (defaults to the truncation depth).
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = config::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("weierdim: config: {e}");
            std::process::exit(2);
        }
    }
    if let Err(e) = commands::run(cli.command) {
        eprintln!("weierdim: {e}");
        std::process::exit(e.exit_code());
    }
}
