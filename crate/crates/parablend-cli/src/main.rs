//! `parablend`: certificates, perturbation pipelines and lattice sweeps from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

#[derive(Parser, Debug)]
#[command(name = "parablend", version, about = "Parablender and sink-creation experiments")]
struct Cli {
    /// TOML file with one table per subcommand; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON result here as well as to stdout.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Interval cover of the blender limit set, optionally with a parameter-jet box.
    IfsCoverage(IfsCoverageArgs),
    /// Greedy paratangency coding of a random admissible parabola family.
    Paratangency(ParatangencyArgs),
    /// Flatten the critical value of a paratangent surrogate family.
    Flatten(FlattenArgs),
    /// Run the sink pipeline and detect the sink over a parameter grid.
    Sinks(SinksArgs),
    /// Lattice sweep with per-window sink creation.
    Sweep(SweepArgs),
    /// Re-export a saved sweep report.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
pub struct IfsCoverageArgs {
    #[arg(long)]
    pub depth: Option<usize>,
    /// Depth of the parameter-jet coverage check; skipped when absent.
    #[arg(long)]
    pub jet_depth: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Lower corner of the jet box, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lower: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub upper: Option<Vec<f64>>,
}

#[derive(Args, Debug, Default)]
pub struct ParatangencyArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct FlattenArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Exponent of the surrogate critical value `a^power`.
    #[arg(long)]
    pub power: Option<u32>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct SinksArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub boxes: Option<usize>,
    #[arg(long)]
    pub max_period: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Lattice indices left unperturbed, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub disabled: Option<Vec<usize>>,
    /// Skip the perturbations (control run).
    #[arg(long)]
    pub control: bool,
    #[arg(long)]
    pub no_trapping: bool,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub certificates: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Sweep report in JSON.
    pub input: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match config::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let outcome = match &cli.command {
        Command::IfsCoverage(a) => commands::ifs_coverage(&file, a),
        Command::Paratangency(a) => commands::paratangency(&file, a),
        Command::Flatten(a) => commands::flatten(&file, a),
        Command::Sinks(a) => commands::sinks(&file, a),
        Command::Sweep(a) => commands::sweep(&file, a),
        Command::Report(a) => commands::report(a),
    };
    match outcome.and_then(|o| commands::emit(&o, cli.json.as_deref()).map(|_| o)) {
        Ok(o) if o.passed => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("certificate failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
