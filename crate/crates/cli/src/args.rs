//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdtest::covtest::LwRegime;
use hdtest::registry::PrecisionChoice;

#[derive(Debug, Parser)]
#[command(name = "hdtest", version, about = "High-dimensional mean and covariance hypothesis tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one test on CSV data and print a JSON report.
    Test(TestArgs),
    /// Run a Monte Carlo scenario and print a calibration report.
    Simulate(SimulateArgs),
    /// Run every scenario file of a directory and check its expectation bands.
    Calibrate(CalibrateArgs),
    /// List the available tests.
    List,
}

/// Test options shared by `test` and inline `simulate`.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct TestOptions {
    /// Bandwidth τ of the banded covariance tests (qc, cj).
    #[arg(long)]
    pub tau: Option<usize>,
    /// Ridge λ > 0 of the regularized Hotelling test (rht1).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// γ of the constrained ℓ1 precision estimate used by clx2 and cx.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Precision matrix for clx2 and cx.
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
    /// Two-sample Srivastava–Du with per-group diagonal scaling.
    #[arg(long)]
    pub sd_unequal: bool,
    /// Drop the c_{p,n} correction from the Srivastava–Du variance.
    #[arg(long)]
    pub no_cpn: bool,
    /// Limit law of the Ledoit–Wolf W statistic.
    #[arg(long, value_enum)]
    pub lw_regime: Option<RegimeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Estimated,
    Known,
    DiagonalInverse,
}

impl From<PrecisionArg> for PrecisionChoice {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Estimated => PrecisionChoice::Estimated,
            PrecisionArg::Known => PrecisionChoice::Known,
            PrecisionArg::DiagonalInverse => PrecisionChoice::DiagonalInverse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Auto,
    Normal,
    ChiSquared,
}

impl From<RegimeArg> for LwRegime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Auto => LwRegime::Auto,
            RegimeArg::Normal => LwRegime::Normal,
            RegimeArg::ChiSquared => LwRegime::ChiSquared,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    /// Test identifier (see `hdtest list`).
    #[arg(long)]
    pub method: String,
    /// CSV file with a header row; repeat once per group.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    /// Column holding group labels; groups follow the order of first appearance.
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Hypothesized center of one-sample location tests: `zeros` or a CSV file.
    #[arg(long, default_value = "zeros")]
    pub mu0: String,
    /// Known precision matrix (CSV with a header row) for `--precision known`.
    #[arg(long)]
    pub omega: Option<PathBuf>,
    #[command(flatten)]
    pub options: TestOptions,
    /// Print a human-readable table instead of JSON.
    #[arg(long)]
    pub table: bool,
    /// Exit with status 2 when the test rejects at α.
    #[arg(long)]
    pub exit_on_reject: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file; replaces every inline scenario flag.
    #[arg(long, conflicts_with_all = ["test", "n", "p", "reps", "seed", "sigma", "innovation", "mu_alt", "name"])]
    pub scenario: Option<PathBuf>,
    /// Test identifier.
    #[arg(long, required_unless_present = "scenario")]
    pub test: Option<String>,
    /// Per-group sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "scenario")]
    pub n: Vec<usize>,
    #[arg(long, required_unless_present = "scenario")]
    pub p: Option<usize>,
    #[arg(long, required_unless_present = "scenario")]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Nominal level; overrides the scenario file's value when given.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Covariance of one group: identity, scaled:a, ar1:rho, banded:tau:coef or
    /// spiked:base:value:count. Give one for all groups or one per group.
    #[arg(long)]
    pub sigma: Vec<String>,
    /// Innovation law of every group: normal, gamma:shape or rademacher.
    #[arg(long)]
    pub innovation: Option<String>,
    /// Mean shift of the last group: dense:norm_sq or sparse:count:value.
    #[arg(long)]
    pub mu_alt: Option<String>,
    /// Scenario name used in the report.
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub options: TestOptions,
    /// Worker threads for replications; 1 runs them sequentially.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// Directory of scenario JSON files.
    #[arg(default_value = "acceptance")]
    pub dir: PathBuf,
    /// Keep scenarios whose name contains this text or whose test id or module equals it.
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Print a human-readable table instead of JSON.
    #[arg(long)]
    pub table: bool,
    /// Also write the JSON summary to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
