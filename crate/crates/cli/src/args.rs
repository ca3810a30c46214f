use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bernconv::support::DimensionVariant;

/// Classify, measure and evaluate generalized Bernoulli convolutions.
///
/// Reports are JSON on standard output; grids are CSV; samples are one value
/// per line. Exit codes: 0 success, 1 usage, 2 invalid input, 3 hypothesis
/// not satisfied (a partial report is still printed). Set BERNCONV_THREADS
/// to bound the worker pool.
#[derive(Debug, Parser)]
#[command(name = "bernconv", version, about, long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discrete / absolutely continuous / singular continuous verdict with certificates.
    Classify(ClassifyArgs),
    /// Cylinder approximation, nowhere density and uniqueness of expansions.
    Support(SupportArgs),
    /// Lebesgue measure of the support.
    Measure(MeasureArgs),
    /// Dimension estimate of the support.
    Dimension(DimensionArgs),
    /// CDF enclosures on a grid, as CSV `x,lo,hi`.
    Cdf(CdfArgs),
    /// Characteristic function on a grid, as CSV `t,re,im`.
    Charfn(CharfnArgs),
    /// Mean and variance enclosures.
    Moments(SpecArg),
    /// Seeded samples, one per line.
    Sample(SampleArgs),
    /// Randomized pushforward law suite on finite spaces.
    Laws(LawsArgs),
    /// Singular product measures whose images overlap.
    DemoCounterexample(DemoArgs),
    /// Brute-force cross-checks.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Spec document (JSON).
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    /// Terms examined per series before reporting Unknown.
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    /// Reference digit probability for the almost-every-λ report, in [1/3, 2/3].
    #[arg(long)]
    pub p: Option<f64>,
    /// Fail instead of reporting Indeterminate when δ_k > 1 is not certified.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SupportArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    /// Cylinder level, at most 22.
    #[arg(long, default_value_t = 10)]
    pub level: u32,
    /// `csv` prints the approximating intervals as `lo,hi`.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Variant {
    LogCorrected,
    AsPrinted,
}

impl From<Variant> for DimensionVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::LogCorrected => DimensionVariant::LogCorrected,
            Variant::AsPrinted => DimensionVariant::AsPrinted,
        }
    }
}

#[derive(Debug, Args)]
pub struct DimensionArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    #[arg(long, value_enum, default_value_t = Variant::LogCorrected)]
    pub variant: Variant,
    /// Terms of the dimension sequence; the window is [horizon/2, horizon].
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// First grid point; defaults to 0.
    #[arg(long)]
    pub from: Option<f64>,
    /// Last grid point; defaults to the total mass r_0 (cdf) or 50 (charfn).
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct CdfArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Digits extracted per point.
    #[arg(long, default_value_t = 40)]
    pub horizon: u64,
}

#[derive(Debug, Args)]
pub struct CharfnArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Error radius per value.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Digits per sample; the truncation bias is at most r_horizon.
    #[arg(long, default_value_t = 48)]
    pub horizon: u64,
}

#[derive(Debug, Args)]
pub struct LawsArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub count: u64,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// P(φ_k = 1) of the tilted law, in [1/3, 2/3] and not 1/2.
    #[arg(long, default_value_t = 0.4)]
    pub p: f64,
    /// Scale ratio, in (1/2, 1).
    #[arg(long, default_value_t = 0.8)]
    pub lambda: f64,
    /// Enumeration level, at most 24.
    #[arg(long, default_value_t = 20)]
    pub level: u32,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Boxes of a given size meeting the level-n cylinders.
    BoxCount {
        spec: PathBuf,
        #[arg(long, default_value_t = 12)]
        level: u32,
        #[arg(long)]
        box_size: f64,
    },
    /// Enumerated Hellinger affinity of two coordinate-law sequences.
    Hellinger {
        /// Coordinate-law sequence document (JSON).
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, default_value_t = 12)]
        level: u32,
    },
    /// Sandwich check of the CDF against the enumerated partial-sum law.
    CompareCdf {
        spec: PathBuf,
        #[arg(long, default_value_t = 16)]
        level: u32,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, default_value_t = 40)]
        horizon: u64,
    },
}
