use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scenrep_core::baselines::Method;
use scenrep_core::experiments::ExperimentConfig;
use scenrep_core::{Category, Interpolation, ZeroVariancePolicy};

#[derive(Debug, Parser)]
#[command(name = "scenrep", version, about = "Scenario generation and representativeness metrics")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZeroVariance {
    Error,
    Floor,
}

impl From<ZeroVariance> for ZeroVariancePolicy {
    fn from(z: ZeroVariance) -> Self {
        match z {
            ZeroVariance::Error => ZeroVariancePolicy::Error,
            ZeroVariance::Floor => ZeroVariancePolicy::Floor,
        }
    }
}

/// Flags accepted before or after any subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Time samples per signal when assembling scenarios.
    #[arg(long = "n-t", global = true, default_value_t = 50)]
    pub n_t: usize,
    /// Wasserstein order.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub p: f64,
    /// Overfitting penalty weight.
    #[arg(long, global = true, default_value_t = 0.25)]
    pub beta: f64,
    #[arg(long, global = true, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long = "test-fraction", global = true, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Time-series resampling scheme: `cubic` or `linear`.
    #[arg(long, global = true, default_value = "cubic")]
    pub interpolation: Interpolation,
    #[arg(long = "zero-variance", global = true, value_enum, default_value_t = ZeroVariance::Error)]
    pub zero_variance: ZeroVariance,
}

/// Settings shared by the repeated-partition experiments.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Scenario JSONL or parameter-matrix CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Generated scenarios per repeat.
    #[arg(long = "n-w", default_value_t = 2000)]
    pub n_w: usize,
    #[arg(long = "d-min", default_value_t = 1)]
    pub d_min: usize,
    #[arg(long = "d-max", default_value_t = 8)]
    pub d_max: usize,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Generator evaluated along the d axis.
    #[arg(long, default_value = "svd+kde+dep")]
    pub method: Method,
    /// Also write the curve as CSV to this path.
    #[arg(long = "curve-csv")]
    pub curve_csv: Option<PathBuf>,
}

/// Settings of the β calibration.
#[derive(Debug, Args)]
pub struct CalibrationArgs {
    /// Size of the large reference set drawn from the surrogate truth.
    #[arg(long = "n-z-large", default_value_t = 10_000)]
    pub n_z_large: usize,
    /// Comma-separated β values; 0, 0.05, ..., 1 when omitted.
    #[arg(long = "beta-grid", value_delimiter = ',')]
    pub beta_grid: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw synthetic scenarios (JSONL, or an assembled CSV matrix).
    Synth {
        #[arg(long, default_value = "lvd")]
        category: Category,
        #[arg(long, short)]
        n: usize,
    },
    /// Fit a reduced basis and density model on a dataset.
    Fit {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        d: usize,
        /// One of the `svd+*` generators.
        #[arg(long, default_value = "svd+kde+dep")]
        method: Method,
    },
    /// Sample scenarios from a fitted model.
    Generate {
        #[arg(long, short)]
        model: PathBuf,
        #[arg(long = "n-w", default_value_t = 2000)]
        n_w: usize,
    },
    /// Score a generated set against test and training sets.
    Evaluate {
        #[arg(long, short)]
        generated: PathBuf,
        #[arg(long, short)]
        test: PathBuf,
        /// Also supplies the parameter weights.
        #[arg(long = "train", short = 'x')]
        train: PathBuf,
    },
    /// SR curve over the reduced dimension.
    SelectD {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Correlate SR against a large reference set for a grid of β.
    CalibrateBeta {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Dimension of the surrogate truth.
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[command(flatten)]
        cal: CalibrationArgs,
    },
    /// Alternate d selection and β calibration until d is stable.
    Auto {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[command(flatten)]
        cal: CalibrationArgs,
        #[arg(long = "max-iterations", default_value_t = 10)]
        max_iterations: usize,
    },
    /// Rank generators by median SR.
    Compare {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long = "n-w", default_value_t = 2000)]
        n_w: usize,
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        /// Comma-separated generators; all of them when omitted.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
}

impl Common {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            n_t: self.n_t,
            beta: self.beta,
            p: self.p,
            repeats: self.repeats,
            test_fraction: self.test_fraction,
            seed: self.seed,
            zero_variance: self.zero_variance.into(),
            ..Default::default()
        }
    }
}

impl ExperimentArgs {
    pub fn apply(&self, config: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            n_w: self.n_w,
            d_range: (self.d_min..=self.d_max).collect(),
            bootstrap_resamples: self.bootstrap,
            method: self.method,
            ..config
        }
    }
}

impl CalibrationArgs {
    pub fn apply(&self, config: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            n_z_large: self.n_z_large,
            beta_grid: self.beta_grid.clone().unwrap_or(config.beta_grid.clone()),
            ..config
        }
    }
}
