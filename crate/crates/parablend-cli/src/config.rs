//! Config file: one optional table per subcommand.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

use parablend::sweep::SweepConfig;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub ifs_coverage: IfsCoverageConfig,
    pub paratangency: ParatangencyConfig,
    pub flatten: FlattenConfig,
    pub sinks: SinksConfig,
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IfsCoverageConfig {
    pub depth: usize,
    pub jet_depth: Option<usize>,
    pub k: usize,
    pub d: usize,
    pub epsilon: f64,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Default for IfsCoverageConfig {
    fn default() -> Self {
        Self {
            depth: 20,
            jet_depth: None,
            k: 1,
            d: 1,
            epsilon: 0.1,
            lower: None,
            upper: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParatangencyConfig {
    pub k: usize,
    pub d: usize,
    pub epsilon: f64,
    pub depth: usize,
    pub seed: u64,
}

impl Default for ParatangencyConfig {
    fn default() -> Self {
        Self {
            k: 1,
            d: 1,
            epsilon: 0.05,
            depth: 40,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlattenConfig {
    pub d: usize,
    pub alpha: f64,
    pub power: Option<u32>,
    pub samples: usize,
}

impl Default for FlattenConfig {
    fn default() -> Self {
        Self {
            d: 1,
            alpha: 0.0625,
            power: None,
            samples: 11,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinksConfig {
    pub d: usize,
    pub n: usize,
    pub alpha: f64,
    pub grid: usize,
    pub boxes: usize,
    pub max_period: usize,
}

impl Default for SinksConfig {
    fn default() -> Self {
        Self {
            d: 1,
            n: 12,
            alpha: 0.0625,
            grid: 11,
            boxes: 5,
            max_period: 20,
        }
    }
}

pub fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
