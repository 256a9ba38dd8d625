use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use duo_embed::pipeline::Omega;

#[derive(Debug, Parser)]
#[command(name = "duo-embed", version, about = "Joint spectral embeddings of two datasets sharing features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Screen, optionally check for noise, and embed a pair of datasets.
    Embed(EmbedArgs),
    /// Alignability screening only.
    Screen(ScreenArgs),
    /// Noise-regime check on the calibrated kernel spectrum.
    NoiseCheck(NoiseArgs),
    /// Write a simulated pair to a directory.
    Simulate(SimulateArgs),
    /// Score cluster labels or an embedding.
    Evaluate(EvaluateArgs),
    /// Run a simulation study and write long-format results.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// CSV with one sample of the first dataset per row.
    #[arg(long)]
    pub x: PathBuf,
    /// CSV with one sample of the second dataset per row.
    #[arg(long)]
    pub y: PathBuf,
    /// Skip a header row in both files.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Bandwidth percentile in (0,1), or "auto".
    #[arg(long, default_value = "0.5")]
    pub omega: Omega,
    /// Components for the x embedding, e.g. "2-7" or "2,3,5".
    #[arg(long, default_value = "2-7", value_parser = parse_list)]
    pub gamma1: IndexList,
    /// Components for the y embedding.
    #[arg(long, default_value = "2-7", value_parser = parse_list)]
    pub gamma2: IndexList,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub skip_screening: bool,
    #[arg(long)]
    pub noise_check: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Neighbor count for screening.
    #[arg(long, default_value_t = duo_embed::screening::DEFAULT_K)]
    pub k_screen: usize,
    /// Eigenvector indices for screening.
    #[arg(long, default_value = "2-4", value_parser = parse_list)]
    pub screen_gamma: IndexList,
    #[command(flatten)]
    pub noise: NoiseThresholds,
}

#[derive(Debug, Args)]
pub struct NoiseThresholds {
    #[arg(long, default_value_t = duo_embed::diagnostics::DEFAULT_K_SKIP)]
    pub k_skip: usize,
    #[arg(long, default_value_t = duo_embed::diagnostics::DEFAULT_C1)]
    pub c1: f64,
    #[arg(long, default_value_t = duo_embed::diagnostics::DEFAULT_C2)]
    pub c2: f64,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 0.5, value_parser = parse_fraction)]
    pub omega: f64,
    #[arg(long, default_value_t = duo_embed::screening::DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value = "2-4", value_parser = parse_list)]
    pub gamma: IndexList,
    /// Directory for alignability.json; the report also goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 0.5, value_parser = parse_fraction)]
    pub omega: f64,
    #[command(flatten)]
    pub noise: NoiseThresholds,
    /// Directory for noise.json; the report also goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SettingKind {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Torus,
    Noise,
    Negcontrol,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ControlKind {
    KleinVsLine,
    TorusVsNoise,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub setting: SettingKind,
    /// Negative-control pair for `--setting negcontrol`.
    #[arg(long, value_enum, value_name = "KIND", default_value = "klein-vs-line")]
    pub control: ControlKind,
    #[arg(long, default_value_t = 600)]
    pub n1: usize,
    #[arg(long, default_value_t = 600)]
    pub n2: usize,
    #[arg(long, default_value_t = 800)]
    pub p: usize,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// Noise variance of x; defaults to the setting's value.
    #[arg(long)]
    pub sigma1_sq: Option<f64>,
    /// Noise variance of y; defaults to the setting's value.
    #[arg(long)]
    pub sigma2_sq: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Rand,
    Jaccard,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub metric: MetricKind,
    /// Estimated labels (rand) for x.
    #[arg(long, required_if_eq("metric", "rand"))]
    pub est_x: Option<PathBuf>,
    #[arg(long, required_if_eq("metric", "rand"))]
    pub truth_x: Option<PathBuf>,
    /// Estimated labels for y; with `--truth-y` gives the two-dataset mean.
    #[arg(long, requires = "truth_y")]
    pub est_y: Option<PathBuf>,
    #[arg(long, requires = "est_y")]
    pub truth_y: Option<PathBuf>,
    /// Embedding CSV (jaccard).
    #[arg(long, required_if_eq("metric", "jaccard"))]
    pub embedding: Option<PathBuf>,
    /// Clean-signal CSV (jaccard).
    #[arg(long, required_if_eq("metric", "jaccard"))]
    pub clean: Option<PathBuf>,
    #[arg(long, default_value_t = duo_embed::evaluation::DEFAULT_JACCARD_K)]
    pub k: usize,
    /// File for the JSON report; it also goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TaskKind {
    Clustering,
    Manifold,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub task: TaskKind,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// τ values (clustering) or sample sizes n1 = n2 (manifold).
    #[arg(long, value_delimiter = ',')]
    pub tau_grid: Option<Vec<f64>>,
    /// Clustering setting, 1 or 2.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub setting: u8,
    #[arg(long, default_value_t = 800)]
    pub p: usize,
    #[arg(long, default_value_t = 600)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// A number strictly between 0 and 1.
pub fn parse_fraction(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a number strictly between 0 and 1, got {s:?}")),
    }
}

/// 1-based component indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexList(pub Vec<usize>);

/// Parses "2-7", "2,3,5" or mixtures such as "1,3-5".
pub fn parse_list(s: &str) -> Result<IndexList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("{t:?} is not a positive integer"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.contains(&0) {
        return Err("component indices start at 1".into());
    }
    Ok(IndexList(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("2-7").unwrap().0, vec![2, 3, 4, 5, 6, 7]);
        assert_eq!(parse_list("1,3-4").unwrap().0, vec![1, 3, 4]);
        assert!(parse_list("0-2").is_err());
        assert!(parse_list("5-2").is_err());
        assert!(parse_list("a").is_err());
    }
}
