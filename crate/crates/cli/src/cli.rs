use std::path::PathBuf;

use bernoulli_detector::tv::{DEFAULT_LAMBDA, DEFAULT_THRESHOLD};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "bdetect", version, about = "Bayesian change-point detection from rank-sum p-values")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect change-points in a CSV file.
    Detect(DetectArgs),
    /// Generate a synthetic benchmark and its ground truth.
    Simulate(SimulateArgs),
    /// Score a detection report against ground truth.
    Evaluate(EvaluateArgs),
    /// Tabulate the false discovery rate against the acceptance level.
    BenchFdr(BenchFdrArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BdUniPseudo,
    BdUniBlocked,
    BdMulti,
    Tv,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BdUniPseudo => "bd-uni-pseudo",
            Method::BdUniBlocked => "bd-uni-blocked",
            Method::BdMulti => "bd-multi",
            Method::Tv => "tv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Update {
    Pseudo,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Pseudo,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Student,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 100 points, one step after point 50.
    Sec261,
    /// 320 points in 16 alternating segments of 20, SNR 5 dB.
    Sec262,
    /// Four dependent series of 1000 points.
    Sec35,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeedArg {
    /// RNG seed.
    #[arg(long, env = "BDETECT_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    /// Input CSV: one column per series, one row per time point.
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = Method::BdUniPseudo)]
    pub method: Method,

    /// Acceptance level, in (0, 1/e).
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,

    /// Sweeps per chain [default: 1000, or 2000 for bd-multi].
    #[arg(long)]
    pub iterations: Option<usize>,

    /// Sweeps left out of marginals and configuration summaries.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,

    /// Admissible configurations for bd-multi, one binary string per line.
    #[arg(long)]
    pub configs: Option<PathBuf>,

    /// Column update rule for bd-multi.
    #[arg(long, value_enum, default_value_t = Update::Pseudo)]
    pub update: Update,

    /// Skip sampling the configuration probabilities (bd-multi).
    #[arg(long)]
    pub no_p_summary: bool,

    /// TV penalty weight.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,

    /// Smallest TV jump reported as a change-point.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,

    /// Independent chains; the best MAP wins and marginals are averaged.
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,

    /// Worker threads.
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,

    /// Report path [default: stdout].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Also write a flat per-index CSV export here.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, required_unless_present = "scenario", conflicts_with = "scenario")]
    pub preset: Option<Preset>,

    /// JSON scenario file (boundaries are 1-based).
    #[arg(long)]
    pub scenario: Option<PathBuf>,

    /// SNR in dB for sec261.
    #[arg(long, default_value_t = 10.0)]
    pub snr: f64,

    /// Noise family for sec261.
    #[arg(long, value_enum, default_value_t = NoiseKind::Gaussian)]
    pub noise: NoiseKind,

    /// Student-t degrees of freedom.
    #[arg(long, default_value_t = 3.0)]
    pub nu: f64,

    /// Data CSV path [default: stdout].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Ground-truth JSON path.
    #[arg(long)]
    #[serde(skip)]
    pub truth: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub truth: PathBuf,

    #[arg(long)]
    pub report: PathBuf,

    /// Positional tolerances, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub tolerance: Vec<usize>,

    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchFdrArgs {
    /// Piecewise JSON scenario [default: preset sec262].
    #[arg(long)]
    pub scenario: Option<PathBuf>,

    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.05,0.1")]
    pub alphas: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_value = "0,1,5")]
    pub tolerances: Vec<usize>,

    #[arg(long, default_value_t = 30)]
    pub replicates: usize,

    #[arg(long, default_value_t = 500)]
    pub iterations: usize,

    #[arg(long, value_enum, default_value_t = VariantArg::Pseudo)]
    pub variant: VariantArg,

    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,

    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn detect_defaults() {
        let cli = Cli::try_parse_from(["bdetect", "detect", "x.csv", "--seed", "4"]).unwrap();
        let Command::Detect(d) = cli.command else { panic!() };
        assert_eq!((d.method, d.alpha, d.seed.seed, d.replicates), (Method::BdUniPseudo, 0.01, 4, 1));
        assert_eq!(d.lambda, 22.3);
    }

    #[test]
    fn lists_split_on_commas() {
        let cli = Cli::try_parse_from(["bdetect", "evaluate", "--truth", "t", "--report", "r", "--tolerance", "0,1,5"]).unwrap();
        let Command::Evaluate(e) = cli.command else { panic!() };
        assert_eq!(e.tolerance, vec![0, 1, 5]);
    }

    #[test]
    fn simulate_needs_a_source() {
        assert!(Cli::try_parse_from(["bdetect", "simulate"]).is_err());
        assert!(Cli::try_parse_from(["bdetect", "simulate", "--preset", "sec262"]).is_ok());
    }
}
