//! Command-line front end for `knn-evidence`.
//!
//! [`run`] executes a parsed command line against explicit output streams
//! and reports failures as [`CliError`] carrying the process exit code.

use std::fmt;
use std::io::Write;

use knn_evidence::chain::{dump_chain, read_chain_file};
use knn_evidence::evidence::RESOLUTION_THRESHOLD;
use knn_evidence::pipeline::{self, EstimateOptions, PreprocessOptions, Thinning};
use knn_evidence::synthetic::{run_sweep, write_csv, write_json, SweepConfig, DEFAULT_N_DATA};
use knn_evidence::Chain64;

pub mod args;
mod record;

pub use args::Cli;
pub use record::{Interval, Preprocessing, Resolution, ResultRecord, Settings, SCHEMA_VERSION};

use args::{BenchmarkArgs, Command, DumpArgs, EstimateArgs, Format, TableFormat};

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "KNN_EVIDENCE_THREADS";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<knn_evidence::Error> for CliError {
    fn from(e: knn_evidence::Error) -> Self {
        let code = if e.is_input_error() {
            EXIT_INPUT
        } else {
            EXIT_NUMERIC
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_INPUT,
            message: format!("output error: {e}"),
        }
    }
}

fn usage(message: String) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message,
    }
}

/// Sizes the global thread pool from [`THREADS_ENV`]; unset means all cores.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        usage(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot configure {n} threads: {e}")))
}

pub fn run(cli: Cli, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(a) => {
            let record = cmd_estimate(&a, diag)?;
            match a.format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut *out, &record).map_err(|e| CliError {
                        code: EXIT_INPUT,
                        message: e.to_string(),
                    })?;
                    writeln!(out)?;
                }
                Format::Text => write_text(&record, out)?,
            }
            Ok(())
        }
        Command::Benchmark(a) => cmd_benchmark(&a, out),
        Command::Dump(a) => cmd_dump(&a, out),
    }
}

fn read_inputs(
    inputs: &[std::path::PathBuf],
    columns: &args::ColumnArgs,
) -> Result<Vec<Chain64>, CliError> {
    let spec = columns.spec();
    inputs
        .iter()
        .map(|p| read_chain_file(p, &spec).map_err(CliError::from))
        .collect()
}

/// Runs parse, preprocessing and estimation, writing warnings to `diag`.
pub fn cmd_estimate(a: &EstimateArgs, diag: &mut dyn Write) -> Result<ResultRecord, CliError> {
    let chains = read_inputs(&a.inputs, &a.columns)?;
    let prep_opts = PreprocessOptions {
        burn_in: a.burn_in,
        thin: a.thin,
        compact: !a.no_compact,
    };
    let (chain, prep) = pipeline::preprocess(&chains, &prep_opts)?;
    let opts = EstimateOptions {
        k: a.k as usize,
        whiten: !a.no_whiten,
        backend: a.knn_backend.into(),
        level: a.level,
    };
    let est = pipeline::estimate(&chain, &opts)?;
    let m = est.dim;
    let n = chain.len();

    if let Some(ac) = &prep.autocorr {
        if ac.short_chain {
            writeln!(diag, "warning: chain is short compared with its autocorrelation time; the thinning stride is unreliable")?;
        }
    }
    if n < 10 * m {
        writeln!(
            diag,
            "warning: only {n} samples for {m} parameters; at least {} are recommended",
            10 * m
        )?;
    }
    if est.resolution.threshold_exceeded {
        writeln!(
            diag,
            "warning: resolution indicator {:.3} exceeds {RESOLUTION_THRESHOLD}; neighbour volumes are too coarse to resolve the posterior and the estimate may be biased",
            est.resolution.indicator
        )?;
    }
    if est.zero_distance_count > 0 {
        writeln!(
            diag,
            "warning: {} samples have a zero neighbour distance; duplicate points bias the evidence low, deduplicate the chain fully",
            est.zero_distance_count
        )?;
    }
    if est.ill_conditioned {
        writeln!(diag, "warning: sample covariance is ill-conditioned; small eigenvalues were floored before whitening")?;
    }

    let ep = est.posterior;
    Ok(ResultRecord {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        log_map: ep.log_map,
        log10_map: ep.log10_map(),
        sigma_frac: ep.sigma_frac,
        sigma_frac_conservative: ep.sigma_frac_conservative,
        interval: Interval {
            level: est.level,
            log_low: est.interval.0,
            log_high: est.interval.1,
        },
        n_used: n,
        m,
        k: ep.k,
        log_jacobian: est.log_jacobian,
        resolution: Resolution {
            indicator: est.resolution.indicator,
            flagged: est.resolution.threshold_exceeded,
        },
        zero_distance_count: est.zero_distance_count,
        preprocessing: Preprocessing {
            n_input: prep.n_input,
            n_after_burn_in: prep.n_after_burn_in,
            stride: prep.stride,
            max_autocorr_time: prep
                .autocorr
                .as_ref()
                .map(|ac| ac.taus.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            n_after_thin: prep.n_after_thin,
            n_after_compact: prep.n_after_compact,
        },
        settings: Settings {
            inputs: a.inputs.iter().map(|p| p.display().to_string()).collect(),
            weight_col: match a.columns.weight_col {
                args::WeightColumn::Index(i) => Some(i),
                args::WeightColumn::None => None,
            },
            logtarget_col: a.columns.logtarget_col,
            neglog: a.columns.neglog,
            params: a.columns.params.clone(),
            burn_in: a.burn_in,
            thin: match a.thin {
                Thinning::Auto => "auto".to_string(),
                Thinning::Stride(s) => s.to_string(),
            },
            compact: !a.no_compact,
            whiten: !a.no_whiten,
            knn_backend: opts.backend.to_string(),
            knn_backend_used: est.backend.to_string(),
        },
    })
}

fn write_text(r: &ResultRecord, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "ln E_MAP        {:.6}", r.log_map)?;
    writeln!(out, "log10 E_MAP     {:.6}", r.log10_map)?;
    writeln!(
        out,
        "sigma(E)/E      {:.3e} (conservative {:.3e})",
        r.sigma_frac, r.sigma_frac_conservative
    )?;
    writeln!(
        out,
        "{:.0}% interval   ln E in [{:.6}, {:.6}]",
        100.0 * r.interval.level,
        r.interval.log_low,
        r.interval.log_high
    )?;
    writeln!(
        out,
        "samples used    {} (of {} read)",
        r.n_used, r.preprocessing.n_input
    )?;
    writeln!(out, "dimension       {}", r.m)?;
    writeln!(out, "neighbour order {}", r.k)?;
    writeln!(out, "ln J            {:.6}", r.log_jacobian)?;
    writeln!(
        out,
        "resolution      {:.3}{}",
        r.resolution.indicator,
        if r.resolution.flagged {
            " (exceeds threshold)"
        } else {
            ""
        }
    )?;
    writeln!(out, "thinning stride {}", r.preprocessing.stride)?;
    writeln!(out, "knn backend     {}", r.settings.knn_backend_used)
}

/// Sweep grid: explicit flags, else the `--quick` preset, else the full grid.
pub fn sweep_config(a: &BenchmarkArgs) -> SweepConfig {
    let (dims, lengths, ks, whiten, repeats) = if a.quick {
        (
            vec![2, 5, 10],
            vec![1_000, 10_000],
            vec![1, 2, 4],
            vec![true, false],
            3,
        )
    } else {
        (
            vec![2, 5, 8, 10, 15, 20],
            vec![1_000, 10_000, 100_000],
            vec![1, 2, 3, 4],
            vec![true, false],
            5,
        )
    };
    let mut config = SweepConfig::new(
        a.dims.clone().unwrap_or(dims),
        a.lengths.clone().unwrap_or(lengths),
        a.ks.clone().unwrap_or(ks),
        a.whiten.clone().unwrap_or(whiten),
        a.repeats.unwrap_or(repeats),
        a.seed,
    );
    config.n_data = a.n_data.unwrap_or(DEFAULT_N_DATA);
    config.backend = a.knn_backend.into();
    config.timing = a.timing;
    config
}

fn cmd_benchmark(a: &BenchmarkArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let records = run_sweep(&sweep_config(a))?;
    match a.format {
        TableFormat::Csv => write_csv(&records, out)?,
        TableFormat::Json => write_json(&records, out)?,
    }
    Ok(())
}

fn cmd_dump(a: &DumpArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let chains = read_inputs(&a.inputs, &a.columns)?;
    let mut iter = chains.into_iter();
    let first = iter.next().expect("clap requires at least one input");
    let chain = iter.try_fold(first, |acc, c| acc.concat(&c))?;
    dump_chain(&chain, out)?;
    Ok(())
}
