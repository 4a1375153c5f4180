use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use specbound_core::Exponent;

fn exponent(s: &str) -> Result<Exponent, String> {
    s.parse().map_err(|e: specbound_core::Error| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "specbound", version, about = "Spectral bounds between adversarial and random-noise sensitivity")]
pub struct Cli {
    /// Master seed for every Monte Carlo stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Uniform samples on the unit l_p sphere or ball, with coordinate moments.
    SphereSample(SphereSampleArgs),
    /// Coordinate variance of the uniform distribution on the l_p sphere.
    Sigma2(Sigma2Args),
    /// Induced (p, q) operator norm of a matrix.
    Opnorm(OpnormArgs),
    /// Average noise distortion and its spectral certificate.
    AndCoeff(MonteCarloArgs),
    /// Worst-case over average-case ratio with its lower bounds.
    RatioCert(MonteCarloArgs),
    /// Local fluctuation certificate of a layered map at a point.
    Fluctuation(FluctuationArgs),
    /// Adversarial total variation between two empirical samples.
    TvEps(TvEpsArgs),
    /// Piecewise-linear DRO minimizers.
    Dro(DroArgs),
    /// Closed-form robustness lower bounds.
    Bounds(BoundsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SphereSample(_) => "sphere-sample",
            Command::Sigma2(_) => "sigma2",
            Command::Opnorm(_) => "opnorm",
            Command::AndCoeff(_) => "and-coeff",
            Command::RatioCert(_) => "ratio-cert",
            Command::Fluctuation(_) => "fluctuation",
            Command::TvEps(_) => "tv-eps",
            Command::Dro(_) => "dro",
            Command::Bounds(_) => "bounds",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceArg {
    Sphere,
    Ball,
}

#[derive(Debug, Args, Serialize)]
pub struct SphereSampleArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_parser = exponent)]
    pub p: Exponent,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "sphere")]
    pub surface: SurfaceArg,
    /// Include the sampled points in the report.
    #[arg(long)]
    pub points: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct Sigma2Args {
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_parser = exponent)]
    pub p: Exponent,
}

#[derive(Debug, Args, Serialize)]
pub struct OpnormArgs {
    /// Matrix CSV, one row per line, no header.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_parser = exponent)]
    pub p: Exponent,
    #[arg(long, value_parser = exponent)]
    pub q: Exponent,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MonteCarloArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_parser = exponent)]
    pub p: Exponent,
    #[arg(long, value_parser = exponent)]
    pub q: Exponent,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FluctuationArgs {
    /// Layered map as JSON.
    #[arg(long)]
    pub map: PathBuf,
    /// Base point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, value_parser = exponent, default_value = "2")]
    pub p: Exponent,
    #[arg(long, value_parser = exponent, default_value = "2")]
    pub q: Exponent,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub eps_probe: f64,
    /// Probe from the ball rather than the sphere.
    #[arg(long)]
    pub ball: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMethod {
    Auto,
    Matching,
    Maxflow,
    Greedy,
    Strassen,
}

#[derive(Debug, Args, Serialize)]
pub struct TvEpsArgs {
    /// Sample CSV for the first distribution.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Norm of the attack ball.
    #[arg(long, value_parser = exponent, default_value = "2")]
    pub p: Exponent,
    /// Last CSV column holds point weights.
    #[arg(long)]
    pub weighted: bool,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: TransportMethod,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DroVariant {
    Opt,
    Optbis,
    Realopt,
}

#[derive(Debug, Args, Serialize)]
pub struct DroArgs {
    #[arg(long, value_enum)]
    pub variant: DroVariant,
    /// Slope (opt) or comma-separated values (realopt).
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// `name=lo:hi:n` evaluates on a grid of one scalar parameter.
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Gaussian,
    Lighttail,
    Moment,
    Wasserstein,
    Kingkong,
    Uap,
    NoiseDesign,
    Contraction,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub kind: BoundKind,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Mean difference, comma separated (gaussian).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    /// Diagonal variances, comma separated (gaussian).
    #[arg(long)]
    pub variances: Option<String>,
    /// Covariance CSV (gaussian) or base covariance (noise-design).
    #[arg(long)]
    pub covariance: Option<PathBuf>,
    /// Dimension (lighttail, contraction).
    #[arg(long)]
    pub m: Option<usize>,
    /// Noise scale (lighttail).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Distance between class centers.
    #[arg(long)]
    pub dist: Option<f64>,
    /// `power:P` or `subgaussian:S` (moment, kingkong, uap).
    #[arg(long)]
    pub moment: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Wasserstein distance (wasserstein).
    #[arg(long)]
    pub w: Option<f64>,
    /// Wasserstein order (wasserstein).
    #[arg(long)]
    pub order: Option<f64>,
    /// Total-variation budget (kingkong, uap, noise-design).
    #[arg(long)]
    pub t: Option<f64>,
    /// Gaussian scale c (uap; kingkong without --theta).
    #[arg(long)]
    pub c: Option<f64>,
    /// Two-column CSV of (r, theta(r)) (kingkong).
    #[arg(long)]
    pub theta: Option<PathBuf>,
    /// Rank budget (noise-design).
    #[arg(long)]
    pub r: Option<usize>,
    /// Per-coordinate base variance (noise-design).
    #[arg(long)]
    pub sigma0_sq: Option<f64>,
    /// Attack norm (contraction).
    #[arg(long, value_parser = exponent)]
    pub p: Option<Exponent>,
    /// Domain diameter (contraction).
    #[arg(long)]
    pub diam: Option<f64>,
    /// `name=lo:hi:n` evaluates on a grid of one scalar parameter.
    #[arg(long)]
    pub sweep: Option<String>,
}
