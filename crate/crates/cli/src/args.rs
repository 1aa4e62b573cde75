use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fsdr", version, about = "Sufficient dimension reduction for metric-space responses")]
pub struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a simulated dataset with its true basis.
    Simulate(SimulateArgs),
    /// Estimate a basis and write the report files.
    Fit(FitArgs),
    /// Write the full candidate eigenvalue spectrum.
    Scree(FitArgs),
    /// Repeat simulation and estimation for one model.
    Bench(BenchArgs),
    /// Run the grid of a result table.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimatorArgs {
    /// fols, fphd, fiht, fsir, fsave, fdr, fopg, rfopg, fmave or rfmave.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub d0: Option<usize>,
    /// gaussian or laplacian.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Kernel scale, or `auto` for the median heuristic.
    #[arg(long)]
    pub gamma: Option<String>,
    /// wasserstein2, spd-frobenius, spd-log-euclidean or sphere-geodesic.
    #[arg(long)]
    pub metric: Option<String>,
    /// Accept kernels that are not positive definite for the metric.
    #[arg(long)]
    pub allow_indefinite: bool,
    /// Slice count for fsir, fsave and fdr, or `auto`.
    #[arg(long)]
    pub slices: Option<String>,
    /// equal-width or equal-frequency slicing.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Hessian power for fiht.
    #[arg(long = "iht-r")]
    pub iht_r: Option<usize>,
    /// largest or magnitude eigenvalue ordering for fphd.
    #[arg(long)]
    pub phd_ranking: Option<String>,
    /// Refinement rounds for the forward methods.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Predictor CSV, n rows by p columns with a header.
    #[arg(long, short = 'x')]
    pub predictors: Option<PathBuf>,
    /// Response CSV, one response per row.
    #[arg(long, short = 'y')]
    pub responses: Option<PathBuf>,
    /// distribution, spd or sphere; read from the response file if omitted.
    #[arg(long)]
    pub kind: Option<String>,
    /// True basis CSV (p × d0) to report the estimation error.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory (fit) or file (scree).
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Seed recorded in the outputs; taken from the data files if omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub est: EstimatorArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Model id such as I-1, II-2 or III-3.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Samples per distribution response.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplier on the model's noise level; 0 gives noiseless responses.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated methods; the table methods if omitted.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// Result table: 1, 2 or 3.
    #[arg(long)]
    pub table: u8,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated model ids to keep.
    #[arg(long)]
    pub models: Option<String>,
    /// Comma-separated methods to run.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub max_p: Option<usize>,
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Random subspace pairs for the benchmark row.
    #[arg(long, default_value_t = 1000)]
    pub benchmark_pairs: usize,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}
