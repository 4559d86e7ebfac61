mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multidomain::Error;

#[derive(Debug, Parser)]
#[command(name = "mdsample", version, about = "Multi-domain Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the Rastrigin target and compare with the quadrature oracle.
    Rastrigin(RastriginArgs),
    /// Simulate network data and score sampler variants against enumeration.
    BnSim(BnSimArgs),
    /// Learn from a dataset: mean network, local networks, edge probabilities.
    BnLearn(BnLearnArgs),
    /// Enumerate every DAG for a small dataset and summarize the landscape.
    BnEnumerate(BnEnumerateArgs),
    /// Held-out predictive evaluation of learned networks.
    Crossval(CrossvalArgs),
    /// Write a simulated dataset and its generating network.
    Simulate(SimulateArgs),
}

/// Sampler and run-control flags shared by every subcommand.
#[derive(Debug, Args, Default, Clone)]
pub struct Common {
    /// Key=value file; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Number of density levels.
    #[arg(long = "L")]
    pub levels: Option<usize>,
    #[arg(long)]
    pub delta_h: Option<f64>,
    #[arg(long)]
    pub p_mx: Option<f64>,
    /// Maximum number of recorded modes.
    #[arg(long)]
    pub kstar: Option<usize>,
    /// Total iterations including burn-in.
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long)]
    pub burnin: Option<u64>,
    /// md, md0 or wl.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    /// Edge-probability threshold(s), comma separated.
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub by_condition: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct RastriginArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dimension.
    #[arg(long)]
    pub m: Option<usize>,
    /// Rastrigin amplitude.
    #[arg(long = "A")]
    pub a: Option<f64>,
    /// Local proposal scale.
    #[arg(long)]
    pub sigma: Option<f64>,
}

/// Score prior flags for network commands.
#[derive(Debug, Args, Default, Clone)]
pub struct ScoreArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Indegree cap.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BnSimArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub score: ScoreArgs,
    /// chain or graph.
    #[arg(long)]
    pub network: Option<String>,
    #[arg(long)]
    pub datasets: Option<u64>,
    #[arg(long)]
    pub rows: Option<usize>,
    /// Fraction of interventional rows.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Dirichlet concentration of the simulated tables.
    #[arg(long)]
    pub concentration: Option<f64>,
    /// Comma-separated variants to compare.
    #[arg(long)]
    pub variants: Option<String>,
    /// Directory for cached enumerations.
    #[arg(long)]
    pub cache: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct BnLearnArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub score: ScoreArgs,
    /// Dataset CSV.
    #[arg(long)]
    pub data: std::path::PathBuf,
    /// Reference network for TP/FP counts.
    #[arg(long)]
    pub reference: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct BnEnumerateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long)]
    pub data: std::path::PathBuf,
    /// Also write the binary landscape cache.
    #[arg(long)]
    pub save_cache: bool,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long)]
    pub data: std::path::PathBuf,
    #[arg(long)]
    pub reference: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// chain, graph or signaling.
    #[arg(long)]
    pub network: Option<String>,
    /// Rows (per condition for the signaling network).
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub concentration: Option<f64>,
    /// Dataset index within the seed's stream family.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
}

/// Failure with its exit status.
#[derive(Debug)]
pub enum Failure {
    Flag(String),
    Run(Error),
    /// Outputs were written but a statistic left its admissible range.
    Diagnostics(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(msg) => Failure::Flag(msg),
            other => Failure::Run(other),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Flag(_) => 2,
            Failure::Run(e) => match e {
                Error::InvalidConfig(_) => 2,
                Error::Parse { .. }
                | Error::Data(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::TooManyNodes(_)
                | Error::IndegreeExceeded { .. } => 3,
                _ => 4,
            },
            Failure::Diagnostics(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Flag(msg) => write!(f, "invalid flags: {msg}"),
            Failure::Run(e) => write!(f, "{e}"),
            Failure::Diagnostics(msg) => write!(f, "diagnostics: {msg}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Rastrigin(a) => commands::rastrigin(a),
        Command::BnSim(a) => commands::bn_sim(a),
        Command::BnLearn(a) => commands::bn_learn(a),
        Command::BnEnumerate(a) => commands::bn_enumerate(a),
        Command::Crossval(a) => commands::crossval(a),
        Command::Simulate(a) => commands::simulate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdsample: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(Failure::from(Error::InvalidConfig("x".into())).exit_code(), 2);
        assert_eq!(Failure::from(Error::TooManyNodes(7)).exit_code(), 3);
        assert_eq!(Failure::from(Error::Data("x".into())).exit_code(), 3);
        assert_eq!(Failure::from(Error::NotPositiveDefinite).exit_code(), 4);
        assert_eq!(Failure::Diagnostics("x".into()).exit_code(), 4);
    }

    #[test]
    fn flags_parse_into_overrides() {
        let cli = Cli::try_parse_from([
            "mdsample", "rastrigin", "--L", "12", "--delta-h", "1.5", "--variant", "wl", "--m", "2",
        ])
        .unwrap();
        let Command::Rastrigin(a) = cli.command else {
            panic!("wrong subcommand")
        };
        let o = Overrides::from_common(&a.common).unwrap();
        assert_eq!(o.get("L"), Some("12"));
        assert_eq!(o.get("delta-h"), Some("1.5"));
        assert_eq!(a.m, Some(2));
    }
}
