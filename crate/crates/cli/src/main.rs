mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::UsageError;

const DETAIL_HELP: &str = "Writes one row per (mu_t, mu_w, rep, algorithm) to OUT with columns \
mu_t,mu_w,rep,seed,algorithm,status,nmi,c_uw,c_w,achieved_mu_t,achieved_mu_w \
and per-cell aggregates to OUT's sibling <stem>.summary.csv with columns \
mu_t,mu_w,algorithm,networks,failed,mean_nmi,std_nmi (algorithm best_w / best_uw is the \
per-network best of each class). Networks that cannot be generated keep their rows with \
status failed:<stage>. Floats carry 9 significant digits.";

const REPORT_HELP: &str = "Writes per-cell mean NMI of the best weighted detector, the best \
unweighted detector and the class chosen by the model, with columns \
mu_t,mu_w,networks,best_weighted,best_unweighted,selected,none_predictions. Networks predicted \
none are scored with the unweighted class and counted in none_predictions. Per-algorithm and \
best-of-class curves go to the sibling <stem>.curves.csv.";

#[derive(Parser, Debug)]
#[command(name = "commselect", version, about = "Planted-community benchmarks, detection sweeps and algorithm-class selection")]
struct Cli {
    /// key = value file supplying defaults for any long flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate one benchmark network with its planted partition
    Generate(GenerateArgs),
    /// Run detectors over a grid of mixing parameters
    #[command(long_about = DETAIL_HELP)]
    Sweep(SweepArgs),
    /// Label networks, train the selector and evaluate it on a held-out split
    Train(TrainArgs),
    /// Recommend a detector class for a network
    Predict(PredictArgs),
    /// Compare class selection with the per-class best detectors
    #[command(long_about = REPORT_HELP)]
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct GenArgs {
    /// Number of nodes
    #[arg(long)]
    n: Option<usize>,
    /// Degree exponent
    #[arg(long)]
    tau1: Option<f64>,
    /// Community size exponent
    #[arg(long)]
    tau2: Option<f64>,
    /// Mean degree
    #[arg(long)]
    avg_k: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Strength exponent, s = k^beta
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    s_min: Option<usize>,
    #[arg(long)]
    s_max: Option<usize>,
    #[arg(long)]
    mix_tolerance: Option<f64>,
    #[arg(long)]
    max_rewire_sweeps: Option<usize>,
    #[arg(long)]
    weight_tolerance: Option<f64>,
    #[arg(long)]
    max_weight_sweeps: Option<usize>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    gen: GenArgs,
    /// Topological mixing
    #[arg(long)]
    mu_t: Option<f64>,
    /// Weight mixing
    #[arg(long)]
    mu_w: Option<f64>,
    /// Generator seed (COMMSELECT_SEED overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Edge list output
    #[arg(long, value_name = "PATH")]
    edges: PathBuf,
    /// Planted partition output
    #[arg(long, value_name = "PATH")]
    partition: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    gen: GenArgs,
    /// Comma-separated mu_t values
    #[arg(long)]
    mu_t_grid: Option<config::List<f64>>,
    /// Comma-separated mu_w values
    #[arg(long)]
    mu_w_grid: Option<config::List<f64>>,
    /// Networks per grid cell
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated subset of copra_uw, copra_w, infomap_uw, infomap_w
    #[arg(long)]
    algorithms: Option<config::List<String>>,
    /// Master seed (COMMSELECT_SEED overrides the config file)
    #[arg(long)]
    master_seed: Option<u64>,
    /// Worker threads
    #[arg(long)]
    workers: Option<usize>,
    /// Detail CSV output
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Detail CSV written by sweep
    #[arg(long, value_name = "PATH")]
    results: PathBuf,
    /// Model output
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Evaluation report output
    #[arg(long, value_name = "PATH")]
    report: PathBuf,
    /// Fraction of networks used for training
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Seed of the train/test split (COMMSELECT_SEED overrides the config file)
    #[arg(long)]
    split_seed: Option<u64>,
    /// Best NMI below this labels a network none
    #[arg(long)]
    threshold: Option<f64>,
    /// SVM soft-margin constant
    #[arg(long)]
    svm_c: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    svm_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Edge list with numeric node ids
    #[arg(long, value_name = "PATH")]
    graph: PathBuf,
    /// Also run the recommended class and write its partition
    #[arg(long, value_name = "PATH")]
    partition: Option<PathBuf>,
    /// Detector seed for --partition
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long, value_name = "PATH")]
    results: PathBuf,
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Selection CSV output
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
