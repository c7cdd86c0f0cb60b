use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod settings;

/// Bot detection and bot-impact assessment on social graphs.
#[derive(Parser)]
#[command(name = "botimpact", version)]
struct Cli {
    /// TOML config file; flags override `[command]` keys, which override
    /// top-level keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label a retweet graph by minimum-energy cut.
    Detect(DetectArgs),
    /// Equilibrium shift caused by a bot set on a follower network.
    Assess(AssessArgs),
    /// Repeat the assessment over several stubborn intervals.
    Sweep(SweepArgs),
    /// ROC curve and AUC of bot scores against ground truth.
    Eval(EvalArgs),
    /// Retweets per target by class, with KS comparisons.
    Behavior(BehaviorArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Solve the opinion equilibrium of a follower network.
    Equilibrium(EquilibriumArgs),
    /// Simulate the posting process.
    Simulate(SimulateArgs),
}

#[derive(Args, Default)]
pub struct GraphInput {
    /// Field delimiter: comma, tab, or a single character.
    #[arg(long)]
    pub delimiter: Option<String>,
    /// The edge list starts with a header row.
    #[arg(long)]
    pub header: bool,
}

#[derive(Args)]
pub struct DetectArgs {
    /// Retweet edge list `src,dst[,weight]`.
    #[arg(long)]
    pub retweets: Option<PathBuf>,
    #[command(flatten)]
    pub input: GraphInput,
    /// `centroid` or `l10,l00,l11,l01`.
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Explicit `alpha_out,alpha_in`.
    #[arg(long, conflicts_with = "alpha_percentile")]
    pub alpha: Option<String>,
    /// Strength percentile for both alphas (default 99).
    #[arg(long)]
    pub alpha_percentile: Option<f64>,
    /// zero, uniform or prior.
    #[arg(long)]
    pub node_energy: Option<String>,
    /// Prior bot probabilities `user_id,score` (with `--node-energy prior`).
    #[arg(long)]
    pub priors: Option<PathBuf>,
    /// Seed for `--node-energy uniform`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<u64>,
    /// gauss-seidel or jacobi.
    #[arg(long)]
    pub solver: Option<String>,
    /// Relaxation for the Jacobi sweep, in (0, 1].
    #[arg(long)]
    pub damping: Option<f64>,
}

#[derive(Args)]
pub struct OpinionInputs {
    /// Follower edge list; an edge `j,i` means `i` reads `j`.
    #[arg(long)]
    pub followers: Option<PathBuf>,
    #[command(flatten)]
    pub input: GraphInput,
    /// `user_id,score[,text][,timestamp]`.
    #[arg(long)]
    pub tweets: Option<PathBuf>,
    /// Label file; users labeled bot form the target set.
    #[arg(long)]
    pub bots: Option<PathBuf>,
    /// Comma-separated bot ids, added to `--bots`.
    #[arg(long)]
    pub bot_ids: Option<String>,
    /// Phrase lexicon used to score text-only tweets and profiles.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// substring or token.
    #[arg(long)]
    pub lexicon_mode: Option<String>,
    /// `user_id,description`; opinions for users without scored tweets.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// delete or silence.
    #[arg(long)]
    pub removal: Option<String>,
}

#[derive(Args)]
pub struct AssessArgs {
    #[command(flatten)]
    pub inputs: OpinionInputs,
    /// Upper end of the low stubborn interval `[0, a]`.
    #[arg(long)]
    pub lower: Option<f64>,
    /// Lower end of the high stubborn interval `[b, 1]`.
    #[arg(long)]
    pub upper: Option<f64>,
    /// Also run every scenario with equal posting rates.
    #[arg(long)]
    pub uniform_rates: bool,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: OpinionInputs,
    /// `a:b` pairs separated by commas, e.g. `0.1:0.9,0.15:0.85`.
    #[arg(long, allow_hyphen_values = true)]
    pub intervals: Option<String>,
    /// Use equal posting rates.
    #[arg(long)]
    pub uniform_rates: bool,
}

#[derive(Args)]
pub struct EvalArgs {
    /// `user_id,probability`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// `user_id,label` with bot/human or 1/0.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Args)]
pub struct BehaviorArgs {
    #[arg(long)]
    pub retweets: Option<PathBuf>,
    #[command(flatten)]
    pub input: GraphInput,
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub humans: Option<u64>,
    #[arg(long)]
    pub bots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mean retweet edges from each bot to humans.
    #[arg(long)]
    pub bh_edges: Option<f64>,
    #[arg(long)]
    pub bh_weight: Option<f64>,
    #[arg(long)]
    pub hh_edges: Option<f64>,
    #[arg(long)]
    pub hh_weight: Option<f64>,
    #[arg(long)]
    pub bb_edges: Option<f64>,
    #[arg(long)]
    pub bb_weight: Option<f64>,
    #[arg(long)]
    pub hb_edges: Option<f64>,
    #[arg(long)]
    pub hb_weight: Option<f64>,
    /// geometric or fixed.
    #[arg(long)]
    pub weight_law: Option<String>,
    /// Also write a follower network with tweets.
    #[arg(long)]
    pub opinion_network: bool,
    #[arg(long)]
    pub stubborn_fraction: Option<f64>,
    #[arg(long)]
    pub mean_friends: Option<f64>,
    /// Beta opinion law; uniform when both are unset.
    #[arg(long, requires = "opinion_beta")]
    pub opinion_alpha: Option<f64>,
    #[arg(long, requires = "opinion_alpha")]
    pub opinion_beta: Option<f64>,
    #[arg(long)]
    pub min_tweets: Option<u64>,
    #[arg(long)]
    pub max_tweets: Option<u64>,
}

#[derive(Args)]
pub struct NetworkInputs {
    #[arg(long)]
    pub followers: Option<PathBuf>,
    #[command(flatten)]
    pub input: GraphInput,
    /// `user_id,opinion` of the stubborn users.
    #[arg(long)]
    pub stubborn: Option<PathBuf>,
    /// `user_id,rate`; users missing from it get rate 0. Default: all 1.
    #[arg(long)]
    pub rates: Option<PathBuf>,
}

#[derive(Args)]
pub struct EquilibriumArgs {
    #[command(flatten)]
    pub network: NetworkInputs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub network: NetworkInputs,
    /// `user_id,opinion` starting opinions; default 0.5.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Standard deviation of the post noise.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Sample the trajectory every this many events (0: start and end).
    #[arg(long)]
    pub sample_every: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values.
    Usage(String),
    /// Unreadable or malformed input outside the core readers.
    Io(String),
    Core(botimpact::Error),
}

impl From<botimpact::Error> for CliError {
    fn from(e: botimpact::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use botimpact::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::InvalidLambda(_) | E::InvalidParameter(_) | E::SizeMismatch { .. } | E::NotStubborn(_) => 2,
                E::NotConverged { .. } | E::NoSolvableNodes { .. } | E::NegativeCapacity { .. } => 3,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(botimpact::Error::NoSolvableNodes { unreachable }) => write!(
                f,
                "no non-stubborn node is reachable from a stubborn node ({unreachable} unreachable)"
            ),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = cli.out_dir.clone();
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Detect(a) => commands::detect(a, config, out_dir),
        Command::Assess(a) => commands::assess(a, config, out_dir),
        Command::Sweep(a) => commands::sweep(a, config, out_dir),
        Command::Eval(a) => commands::eval(a, config, out_dir),
        Command::Behavior(a) => commands::behavior(a, config, out_dir),
        Command::Synth(a) => commands::synth(a, config, out_dir),
        Command::Equilibrium(a) => commands::equilibrium(a, config, out_dir),
        Command::Simulate(a) => commands::simulate(a, config, out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
