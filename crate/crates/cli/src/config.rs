use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// A fully resolved run. Written next to every report so the run can be
/// replayed with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Sieve λ and μ up to a limit and optionally write the binary cache
    Sieve(SieveArgs),
    /// Sign-pattern counts for a range of word lengths
    Words(WordsArgs),
    /// Multipoint log-averaged Chowla correlation of λ
    Chowla(ChowlaArgs),
    /// Local Fourier-uniformity statistic over a frequency set
    Fourier(FourierArgs),
    /// Local periodic statistic for periods up to d
    Periodic(PeriodicArgs),
    /// Vinogradov mean-value solution counts
    Vmv(VmvArgs),
    /// Mean of e(α p² d2 + β p d1) over primes in (P/2, P]
    PhaseSum(PhaseSumArgs),
    /// Mutual information between λ windows and residues mod p
    Entropy(EntropyArgs),
    /// Dilation defect of λ for sign patterns
    Dilation(DilationArgs),
    /// Write a model sequence to a file
    ModelExport(ModelExportArgs),
    /// Run a JSON list of configs and summarize
    Batch(BatchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sieve(_) => "sieve",
            Command::Words(_) => "words",
            Command::Chowla(_) => "chowla",
            Command::Fourier(_) => "fourier",
            Command::Periodic(_) => "periodic",
            Command::Vmv(_) => "vmv",
            Command::PhaseSum(_) => "phase-sum",
            Command::Entropy(_) => "entropy",
            Command::Dilation(_) => "dilation",
            Command::ModelExport(_) => "model-export",
            Command::Batch(_) => "batch",
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Sieve(a) => &a.out,
            Command::Words(a) => &a.out,
            Command::Chowla(a) => &a.out,
            Command::Fourier(a) => &a.out,
            Command::Periodic(a) => &a.out,
            Command::Vmv(a) => &a.out,
            Command::PhaseSum(a) => &a.out,
            Command::Entropy(a) => &a.out,
            Command::Dilation(a) => &a.out,
            Command::ModelExport(a) => &a.out,
            Command::Batch(a) => &a.out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Report path; the resolved config is written to `<path>.config.json`.
    /// Without it the report goes to stdout.
    #[arg(long)]
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    Liouville,
    Periodic,
    Sturmian,
    Quadratic,
    ThueMorse,
    Random,
    Sawin,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelId::Liouville)]
    pub model: ModelId,
    /// Rotation number (sturmian) or coefficient of n² (quadratic).
    #[arg(long)]
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Coefficient of n in the quadratic phase e(αn² + βn).
    #[arg(long)]
    #[serde(default)]
    pub beta: Option<f64>,
    /// Period pattern over `+`, `-`, `0` (periodic).
    #[arg(long)]
    #[serde(default)]
    pub pattern: Option<String>,
    /// Polynomial degree (sawin).
    #[arg(long, default_value_t = 1)]
    pub degree: u32,
    /// Block rule: `log2` or `power:EXP` (sawin).
    #[arg(long, default_value = "log2")]
    pub block: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sieve cache file, read if it covers the range and written otherwise.
    #[arg(long)]
    #[serde(default)]
    pub sieve_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SieveArgs {
    #[arg(long, value_parser = parse_count)]
    pub limit: u64,
    /// Write the binary sieve cache here.
    #[arg(long)]
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct WordsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub n: u64,
    /// Word lengths, e.g. `3`, `4..16` or `4,8,12`.
    #[arg(long, default_value = "3")]
    pub k: IntList,
    #[arg(long, default_value_t = signlab_core::words::DEFAULT_TAU)]
    pub tau: f64,
    /// Also count ε-rounded words (greedy sup-metric cover).
    #[arg(long)]
    #[serde(default)]
    pub eps: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ChowlaArgs {
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub n: u64,
    /// Distinct shifts, e.g. `0,1`.
    #[arg(long, default_value = "0,1")]
    pub shifts: IntList,
    #[arg(long)]
    #[serde(default)]
    pub sieve_cache: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FourierArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub n: u64,
    /// Window lengths.
    #[arg(long, default_value = "4,16,64")]
    pub h: IntList,
    /// `full`, `grid:R`, `cantor:DEPTH`, `intervals:a-b,c-d` or `list:x,y`.
    #[arg(long, default_value = "full")]
    pub set: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PeriodicArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub n: u64,
    #[arg(long, default_value = "8,32,128")]
    pub h: IntList,
    /// Largest period.
    #[arg(long, default_value_t = 6)]
    pub d: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VmvArgs {
    #[arg(long)]
    pub k: IntList,
    #[arg(long, default_value_t = 2)]
    pub s: u32,
    #[arg(long, default_value_t = 2)]
    pub t: u32,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PhaseSumArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1)]
    pub d1: i64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1)]
    pub d2: i64,
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub p: u64,
    #[arg(long)]
    #[serde(default)]
    pub sieve_cache: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingArg {
    Log,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EntropyArgs {
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub n: u64,
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long, default_value = "3,5,7")]
    pub primes: IntList,
    #[arg(long, value_enum, default_value_t = WeightingArg::Log)]
    pub weighting: WeightingArg,
    #[arg(long)]
    #[serde(default)]
    pub sieve_cache: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DilationArgs {
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub n: u64,
    /// Sign patterns over `+` and `-`, comma separated.
    #[arg(long, default_value = "+,-,++,+-,-+,--")]
    pub patterns: String,
    #[arg(long, default_value = "2,3,5")]
    pub p: IntList,
    #[arg(long)]
    #[serde(default)]
    pub sieve_cache: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// `n,value_re,value_im` rows.
    Csv,
    /// One byte per value: 0x01 for +1, 0xff for −1, 0x00 for 0.
    Bytes,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelExportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_count)]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = Encoding::Csv)]
    pub encoding: Encoding,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BatchArgs {
    /// JSON file holding a list of run configs.
    #[arg(long)]
    pub list: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Integer list written as `3`, `4..16` (inclusive) or `4,8,12`, or a mix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntList(pub Vec<u64>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((a, b)) = part.split_once("..") {
                let a = parse_count(a)?;
                let b = parse_count(b)?;
                if a > b {
                    return Err(format!("empty range {part}"));
                }
                out.extend(a..=b);
            } else {
                out.push(parse_count(part)?);
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(IntList(out))
    }
}

impl fmt::Display for IntList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Nonnegative integer, also accepting `1e6` and `1_000_000`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = s.parse().map_err(|_| format!("not a count: {s}"))?;
    if !(x >= 0.0) || x.fract() != 0.0 || x > 9.007_199_254_740_992e15 {
        return Err(format!("not a nonnegative integer: {s}"));
    }
    Ok(x as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_counts() {
        assert_eq!("1e6".parse::<IntList>().unwrap().0, vec![1_000_000]);
        assert_eq!("4..6,9".parse::<IntList>().unwrap().0, vec![4, 5, 6, 9]);
        assert!("6..4".parse::<IntList>().is_err());
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert_eq!(parse_count("10_000").unwrap(), 10_000);
    }
}
