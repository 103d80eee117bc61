use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use knn_evidence::pipeline::{Thinning, DEFAULT_BURN_IN};
use knn_evidence::{Backend, ColumnSpec, ParameterColumns};

#[derive(Debug, Parser)]
#[command(
    name = "knn-evidence",
    version,
    about = "Bayesian evidence from MCMC chains via nearest-neighbour volumes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the evidence of one model from its chain files.
    Estimate(EstimateArgs),
    /// Run a synthetic Gaussian sweep and print the result table.
    Benchmark(BenchmarkArgs),
    /// Re-emit parsed chain files in canonical text form.
    Dump(DumpArgs),
}

/// How to read columns from a chain file.
#[derive(Debug, Clone, Args)]
pub struct ColumnArgs {
    /// Weight column index, or `none` for unit weights.
    #[arg(long, default_value = "0", value_parser = parse_weight_col)]
    pub weight_col: WeightColumn,

    /// Column holding the log-target (or its negative).
    #[arg(long, default_value_t = 1)]
    pub logtarget_col: usize,

    /// The log-target column stores -ln(target).
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub neglog: bool,

    /// Comma-separated parameter column indices; defaults to all remaining columns.
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightColumn {
    Index(usize),
    None,
}

fn parse_weight_col(s: &str) -> Result<WeightColumn, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(WeightColumn::None);
    }
    s.parse()
        .map(WeightColumn::Index)
        .map_err(|_| format!("expected a column index or `none`, got `{s}`"))
}

impl ColumnArgs {
    pub fn spec(&self) -> ColumnSpec {
        ColumnSpec {
            weight_column: match self.weight_col {
                WeightColumn::Index(i) => Some(i),
                WeightColumn::None => None,
            },
            log_target_column: self.logtarget_col,
            negate_log_target: self.neglog,
            parameter_columns: match &self.params {
                Some(cols) => ParameterColumns::Explicit(cols.clone()),
                None => ParameterColumns::Rest,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Chain files of a single model, concatenated in order.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    #[command(flatten)]
    pub columns: ColumnArgs,

    /// Fraction of each file discarded from the start.
    #[arg(long, default_value_t = DEFAULT_BURN_IN, value_parser = parse_burn_in)]
    pub burn_in: f64,

    /// Thinning stride, or `auto` to use the integrated autocorrelation time.
    #[arg(long, default_value = "auto", value_parser = parse_thin)]
    pub thin: Thinning,

    /// Keep consecutive duplicate rows instead of merging them.
    #[arg(long)]
    pub no_compact: bool,

    /// Neighbour order.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,

    /// Measure distances in the raw parameter coordinates.
    #[arg(long)]
    pub no_whiten: bool,

    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    pub knn_backend: BackendArg,

    /// Probability mass of the reported credible interval.
    #[arg(long, default_value_t = 0.68, value_parser = parse_level)]
    pub level: f64,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    /// Preset with a small desk-scale grid; explicit grid flags still override it.
    #[arg(long)]
    pub quick: bool,

    #[arg(long, default_value_t = 2024)]
    pub seed: u64,

    /// Parameter dimensions, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,

    /// Chain lengths N, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,

    /// Neighbour orders, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,

    /// Whitening settings to run, comma-separated booleans.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1)]
    pub whiten: Option<Vec<bool>>,

    #[arg(long)]
    pub repeats: Option<usize>,

    /// Number of simulated data vectors per benchmark.
    #[arg(long)]
    pub n_data: Option<usize>,

    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    pub knn_backend: BackendArg,

    /// Fill the runtime column (makes the output machine dependent).
    #[arg(long)]
    pub timing: bool,

    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Debug, Clone, Args)]
pub struct DumpArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Auto,
    Brute,
    Tree,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Auto => Backend::Auto,
            BackendArg::Brute => Backend::Brute,
            BackendArg::Tree => Backend::Tree,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

fn parse_thin(s: &str) -> Result<Thinning, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Thinning::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(Thinning::Stride(n)),
        _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
    }
}

fn parse_burn_in(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: `{s}`"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("burn-in fraction must lie in [0, 1), got {v}"))
    }
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: `{s}`"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("credible level must lie in (0, 1), got {v}"))
    }
}
