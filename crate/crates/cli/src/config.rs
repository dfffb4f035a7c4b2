//! Run parameters gathered from an optional JSON file and command-line flags.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A numeric grid: either explicit values or `start:stop:step` (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range(String),
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.contains(':') {
            let g = Grid::Range(text.to_string());
            g.values()?;
            Ok(g)
        } else {
            text.split(',')
                .map(|v| parse_number(v.trim()))
                .collect::<Result<Vec<_>, _>>()
                .map(Grid::Values)
        }
    }

    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            Grid::Values(v) if v.is_empty() => Err(CliError::Usage("empty grid".into())),
            Grid::Values(v) => Ok(v.clone()),
            Grid::Range(text) => {
                let parts: Vec<&str> = text.split(':').collect();
                let [a, b, step] = parts.as_slice() else {
                    return Err(CliError::Usage(format!("grid '{text}' is not start:stop:step")));
                };
                let (a, b, step) = (parse_number(a)?, parse_number(b)?, parse_number(step)?);
                if !(step > 0.0) || b < a {
                    return Err(CliError::Usage(format!("grid '{text}' needs stop >= start and step > 0")));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                Ok((0..=count).map(|i| a + i as f64 * step).collect())
            }
        }
    }
}

fn parse_number(text: &str) -> Result<f64, CliError> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("'{text}' is not a number")))
}

fn parse_grid(text: &str) -> Result<Grid, String> {
    Grid::parse(text).map_err(|e| e.to_string())
}

/// Every tunable parameter. All fields are optional so a config file and the
/// flags can be layered; each command fills in its own defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// Noise model: global or local
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Party counts, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parties: Vec<u32>,
    /// Total round counts L, comma separated (1e6 notation accepted)
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<f64>,
    /// Depolarizing strength nu
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Pairwise error rates: a list or start:stop:step
    #[arg(long, global = true, value_parser = parse_grid)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qab: Option<Grid>,
    /// Explicit X error frequency (overrides the noise model)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qx: Option<f64>,
    /// Explicit Z error frequency (overrides the noise model)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qz: Option<f64>,
    /// Total security parameter
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_tot: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Optimizer starts per rate
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    /// Optimizer evaluations per start
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    /// Largest L scanned by the threshold search
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_max: Option<f64>,
    /// Protocol for round simulation: bb84 or six-state
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    /// Probability p of a test round of each type
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_prob: Option<f64>,
    /// Monte Carlo rounds per statistic (validation)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_rounds: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// String length M for the sampling experiment
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_bits: Option<u64>,
    /// Sample size m for the sampling experiment
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u64>,
    /// Hamming weight of the sampled string
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<u64>,
    /// Failure probability for the sampling experiment
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_bits: Option<u32>,
    /// Bit-flip probability between Alice's and each Bob's key
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flip_prob: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_ec: Option<f64>,
    /// Hamming radius of the decoding ball
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<u32>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($opt:ident),*; $($vec:ident),*) => {
        $( if $top.$opt.is_some() { $base.$opt = $top.$opt.clone(); } )*
        $( if !$top.$vec.is_empty() { $base.$vec = $top.$vec.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))
    }

    /// `self` with every parameter set in `flags` replaced.
    pub fn overlaid(mut self, flags: &RunConfig) -> Self {
        let base = &mut self;
        overlay!(base, flags;
            model, noise, qab, qx, qz, eps_tot, seed, starts, max_evals, l_max, protocol, test_prob,
            mc_rounds, trials, total_bits, sample_size, weight, eps, key_bits, flip_prob, eps_ec, radius,
            format, out;
            parties, rounds);
        self
    }
}

/// Converts a round count given as a float (e.g. `1e12`) to an integer.
pub fn as_count(name: &str, value: f64) -> Result<u64, CliError> {
    if value >= 1.0 && value.fract() == 0.0 && value <= u64::MAX as f64 {
        Ok(value as u64)
    } else {
        Err(CliError::Usage(format!("{name} = {value} is not a positive integer")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(Grid::parse("0.01,0.02").unwrap().values().unwrap(), vec![0.01, 0.02]);
        let v = Grid::parse("0:0.1:0.01").unwrap().values().unwrap();
        assert_eq!(v.len(), 11);
        assert!((v[10] - 0.1).abs() < 1e-15);
        assert!(Grid::parse("0:1").is_err());
        assert!(Grid::parse("1:0:0.1").is_err());
        assert!(Grid::parse("a,b").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_json(r#"{"model": "local", "parties": [3, 4], "eps-tot": 1e-10}"#).unwrap();
        let flags = RunConfig {
            parties: vec![5],
            seed: Some(3),
            ..Default::default()
        };
        let merged = file.overlaid(&flags);
        assert_eq!(merged.model.as_deref(), Some("local"));
        assert_eq!(merged.parties, vec![5]);
        assert_eq!(merged.eps_tot, Some(1e-10));
        assert_eq!(merged.seed, Some(3));
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(as_count("L", 1e12).unwrap(), 1_000_000_000_000);
        assert!(as_count("L", 1.5).is_err());
        assert!(as_count("L", 0.0).is_err());
    }
}
