use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Intrinsic dimension estimation with the manifold-adaptive FSA estimator.
#[derive(Debug, Parser)]
#[command(name = "mfsa", version, about)]
pub struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = "MFSA_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic manifold into a headerless CSV.
    Generate(GenerateArgs),
    /// Estimate the intrinsic dimension of a point cloud.
    Estimate(EstimateArgs),
    /// Fit the finite-sample correction on hypercube sweeps.
    Calibrate(CalibrateArgs),
    /// Run estimators over a suite of manifolds.
    Benchmark(BenchmarkArgs),
    /// Tabulate the density and cdf of the local estimate or of the sample median.
    Pdf(PdfArgs),
    /// Preprocess a multichannel series and write delay-embedded point clouds.
    Embed(EmbedArgs),
    /// Space-time separation contours of a multichannel series.
    Stsep(StsepArgs),
    /// Estimated dimension versus embedding dimension for every channel.
    Profile(ProfileArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    /// hypercube | hypersphere | swiss_roll | helix1d | linear_subspace | nonlinear_embed
    #[arg(long)]
    pub family: String,
    /// Intrinsic dimension.
    #[arg(long = "d")]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ambient dimension; defaults to the family's natural one.
    #[arg(long)]
    pub ambient: Option<usize>,
    #[arg(long, default_value = "hard")]
    pub boundary: String,
    /// Family shape parameter, repeatable.
    #[arg(long = "param")]
    pub params: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Neighborhood order; defaults to the calibration's when `--correction` is given.
    #[arg(long)]
    pub k: Option<usize>,
    /// mfsa | mean | mode | ml | fsaml | cmfsa
    #[arg(long, default_value = "mfsa")]
    pub method: String,
    #[arg(long, default_value = "hard")]
    pub boundary: String,
    /// Aggregation of local Levina-Bickel estimates: mean | median.
    #[arg(long, default_value = "mean")]
    pub pooling: String,
    /// Calibration model; switches the method to cmfsa.
    #[arg(long)]
    pub correction: Option<PathBuf>,
    /// Write the JSON record here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Named defaults for the dimension grid and order: narrow | wide.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value = "hard")]
    pub boundary: String,
    /// Inclusive dimension range `lo:hi`.
    #[arg(long = "d")]
    pub d: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub realizations: usize,
    /// `auto` or a positive polynomial order.
    #[arg(long)]
    pub order: Option<String>,
    /// ols | odr
    #[arg(long, default_value = "ols")]
    pub regression: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub suite: PathBuf,
    /// Comma-separated methods.
    #[arg(long, default_value = "mfsa,ml,cmfsa")]
    pub estimators: String,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Aggregation of local Levina-Bickel estimates: mean | median.
    #[arg(long, default_value = "mean")]
    pub pooling: String,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub realizations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PdfArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long = "d-intrinsic")]
    pub d_intrinsic: f64,
    /// `lo:hi:steps`, endpoints included.
    #[arg(long)]
    pub grid: String,
    /// Tabulate the sampling distribution of the median of `--n` local estimates.
    #[arg(long)]
    pub median_sampling: bool,
    /// Odd sample size for `--median-sampling`.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Loading and preprocessing shared by the time-series commands.
#[derive(Debug, Args, Serialize)]
pub struct SeriesArgs {
    /// Headerless CSV, one row per sample and one column per channel.
    #[arg(long)]
    pub input: PathBuf,
    /// Sampling rate in Hz.
    #[arg(long)]
    pub rate: f64,
    /// Bandpass edges `lo:hi` in Hz; omitted means no filtering.
    #[arg(long)]
    pub band: Option<String>,
    /// Total Butterworth bandpass order.
    #[arg(long, default_value_t = 4)]
    pub filter_order: usize,
    /// Electrode layout JSON; enables the current source density transform.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Seconds dropped from both ends after filtering.
    #[arg(long, default_value_t = 2.0)]
    pub trim: f64,
    /// Skip per-channel z-scoring.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub series: SeriesArgs,
    #[arg(long)]
    pub m: usize,
    /// `auto` (a quarter period of the upper band edge) or samples.
    #[arg(long, default_value = "auto")]
    pub tau: String,
    /// `auto` (space-time separation) or samples.
    #[arg(long, default_value = "auto")]
    pub stride: String,
    /// Largest separation scanned when `--stride auto`.
    #[arg(long, default_value_t = 50)]
    pub dtmax: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct StsepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub series: SeriesArgs,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value = "auto")]
    pub tau: String,
    /// Comma-separated percentiles.
    #[arg(long, default_value = "1,25,50")]
    pub percentiles: String,
    #[arg(long, default_value_t = 50)]
    pub dtmax: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub series: SeriesArgs,
    /// Inclusive embedding-dimension range `lo:hi`.
    #[arg(long = "m", default_value = "1:10")]
    pub m: String,
    /// Inclusive neighborhood range `lo:hi`.
    #[arg(long = "k", default_value = "10:20")]
    pub k: String,
    #[arg(long, default_value = "auto")]
    pub tau: String,
    #[arg(long, default_value = "auto")]
    pub stride: String,
    #[arg(long, default_value_t = 50)]
    pub dtmax: usize,
    /// mfsa | mean | mode | ml | fsaml
    #[arg(long, default_value = "mfsa")]
    pub method: String,
    #[arg(long)]
    pub out: PathBuf,
}
