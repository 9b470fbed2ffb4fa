use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "oamlab",
    version,
    about = "OAM crosstalk behind a turbulent phase screen and the resulting entanglement decay"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// a, b and b_tilde at one (alpha, l0, t) point.
    Amplitudes(AmplitudesArgs),
    /// a, b and b_tilde over a grid of alpha, l0, t and methods.
    Sweep(SweepArgs),
    /// Universal b_tilde and concurrence as functions of x = xi / r0.
    Universal(UniversalArgs),
    /// Concurrence from b_tilde, or from alpha and x on the universal curve.
    Concurrence(ConcurrenceArgs),
    /// Monte Carlo estimate from random phase screens.
    Montecarlo(MonteCarloArgs),
    /// CSV datasets behind figures 1a, 1b, 1c, 2 and 3.
    Figures(FiguresArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by all subcommands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Common {
    /// JSON file with default values for any flag (keys use snake_case).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Write output to this file instead of stdout.
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct AmplitudesArgs {
    /// Structure-function exponent: a fraction such as 5/3 or a decimal.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l0: Option<i64>,
    /// Turbulence strength w0 / r0.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// quadrature, asymptotic, series, exact_quadratic or montecarlo.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub numerics: Numerics,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Knobs of the numerical methods.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Numerics {
    /// Prefactor of the structure function.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Relative tolerance of the quadrature.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    /// Cap on adaptive quadrature subintervals.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_subdivisions: Option<usize>,
    /// Number of Watson-series terms.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_terms: Option<usize>,
    /// Monte Carlo ensemble size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Monte Carlo master seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte Carlo screen grid points per side.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub l0: Vec<i64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub numerics: Numerics,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct UniversalArgs {
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<String>,
    /// Explicit x = xi / r0 values.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<f64>,
    /// Evenly spaced x values as `lo:hi:n`, or `lo:hi:n:log` for log spacing.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_range: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ConcurrenceArgs {
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_tilde: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MonteCarloArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l0: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Side length of the screen in units of w0 (default from the mode size).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    /// Fail with exit code 3 if the standard error of `a` or `b` exceeds this.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_std_err: Option<f64>,
    /// Write the first screen of the ensemble as CSV with a JSON header line.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_screen: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub numerics: Numerics,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FiguresArgs {
    /// Datasets to emit: 1a, 1b, 1c, 2, 3 or all.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub which: Vec<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outdir: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Command-line values layered over the optional config file: a flag given
/// on the command line wins over the same key in the file.
///
/// Keys in the file must name a flag of the subcommand.
pub fn resolve<T>(cli: &T, config: Option<&Path>) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Args,
{
    let over = serde_json::to_value(cli).map_err(|e| CliError::usage(e.to_string()))?;
    let Some(path) = config else {
        return serde_json::from_value(over).map_err(|e| CliError::usage(e.to_string()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
    let mut base: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    let (Value::Object(base_map), Value::Object(over_map)) = (&mut base, over) else {
        return Err(CliError::usage(format!(
            "config {} must hold a JSON object",
            path.display()
        )));
    };
    let known = T::augment_args(clap::Command::new("oamlab"));
    for key in base_map.keys() {
        let ok = key != "config" && known.get_arguments().any(|a| a.get_id().as_str() == key);
        if !ok {
            return Err(CliError::usage(format!(
                "config {}: unknown key {key:?}",
                path.display()
            )));
        }
    }
    base_map.extend(over_map);
    serde_json::from_value(base)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}

pub fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| CliError::usage(format!("missing --{flag}")))
}

pub fn non_empty<T>(v: &[T], flag: &str) -> Result<(), CliError> {
    if v.is_empty() {
        Err(CliError::usage(format!(
            "--{flag} needs at least one value"
        )))
    } else {
        Ok(())
    }
}

/// Parses `lo:hi:n` or `lo:hi:n:log`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || {
        CliError::usage(format!(
            "bad range {spec:?}: expected lo:hi:n or lo:hi:n:log"
        ))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    let log = match parts.get(3) {
        None => false,
        Some(&"log") => true,
        Some(_) => return Err(bad()),
    };
    if n < 2 || !(hi > lo) || (log && lo <= 0.0) {
        return Err(bad());
    }
    Ok(spaced(lo, hi, n, log))
}

pub fn spaced(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else if log {
                (lo.ln() + f * (hi.ln() - lo.ln())).exp()
            } else {
                lo + f * (hi - lo)
            }
        })
        .collect()
}
