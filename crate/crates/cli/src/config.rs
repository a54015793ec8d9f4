//! Run configuration: TOML file values overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use emh_core::variance_ratio::DEFAULT_PERIODS;
use serde::{Deserialize, Serialize};

use crate::Input;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Md,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Md => "md",
        }
    }
}

/// Keys accepted in a config file. All optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub frame: Option<PathBuf>,
    pub periods: Option<Vec<usize>>,
    pub alphas: Option<Vec<f64>>,
    pub margin: Option<f64>,
    pub confidence: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| Input(format!("cannot read config {}", path.display())))?;
        toml::from_str(&text).with_context(|| Input(format!("invalid config {}", path.display())))
    }
}

/// Resolved configuration, echoed as `config.toml` into the output directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<PathBuf>,
    pub periods: Vec<usize>,
    pub alphas: Vec<f64>,
    pub margin: f64,
    pub confidence: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            frame: None,
            periods: DEFAULT_PERIODS.to_vec(),
            alphas: vec![0.10, 0.05, 0.01],
            margin: 0.1,
            confidence: 0.95,
            seed: 1,
            out: None,
            format: Format::Csv,
            jobs: None,
        }
    }
}

impl RunConfig {
    /// Starts from the defaults, applies `file`, then `flags`.
    pub fn resolve(file: FileConfig, flags: FileConfig) -> Result<Self> {
        let mut c = Self::default();
        for layer in [file, flags] {
            macro_rules! take {
                ($($field:ident),*) => {
                    $(if let Some(v) = layer.$field { c.$field = v; })*
                };
            }
            take!(periods, alphas, margin, confidence, seed, format);
            macro_rules! take_opt {
                ($($field:ident),*) => {
                    $(if layer.$field.is_some() { c.$field = layer.$field; })*
                };
            }
            take_opt!(data_dir, frame, out, jobs);
        }
        c.periods.sort_unstable();
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.periods.is_empty() {
            bail!("at least one period is required");
        }
        if let Some(q) = self.periods.iter().find(|&&q| q < 2) {
            bail!("period {q} must be at least 2");
        }
        if let Some(w) = self.periods.windows(2).find(|w| w[0] == w[1]) {
            bail!("period {} listed twice", w[0]);
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            bail!("significance levels must lie in (0, 1)");
        }
        if self.alphas.windows(2).any(|w| w[0] <= w[1]) {
            bail!("significance levels must be strictly decreasing");
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            bail!("margin {} outside (0, 1)", self.margin);
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            bail!("confidence {} outside (0, 1)", self.confidence);
        }
        if self.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
